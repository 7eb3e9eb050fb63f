#include "crt/teststats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crt/error.hpp"

namespace crt {

namespace {

constexpr double kRankTolerance = 1e-10;

void check_lengths(const Vector& y, const Assignment& w) {
  if (y.size() != w.size())
    throw LengthMismatchError("outcomes have " + std::to_string(y.size()) + " units, assignment has " +
                              std::to_string(w.size()));
}

// |R_kk| is the norm of column k orthogonal to the earlier columns.
void check_rank(const Eigen::HouseholderQR<Matrix>& qr, const Matrix& design) {
  const auto& r = qr.matrixQR();
  for (Eigen::Index k = 0; k < design.cols(); ++k) {
    const double norm = design.col(k).norm();
    if (norm == 0.0 || std::abs(r(k, k)) <= kRankTolerance * norm) throw RankDeficientError(static_cast<int>(k));
  }
}

void fill_interaction_design(Matrix& design, const Matrix& x, const Matrix& x_centered, const Assignment& w) {
  const auto n = x.rows();
  const auto p = x.cols();
  design.resize(n, 2 * p + 2);
  design.col(0).setOnes();
  design.middleCols(2, p) = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wi = w[static_cast<int>(i)];
    design(i, 1) = wi;
    for (Eigen::Index j = 0; j < p; ++j) design(i, 2 + p + j) = wi * x_centered(i, j);
  }
}

}  // namespace

RankDeficientError::RankDeficientError(int column)
    : Error("design matrix is rank deficient at column " + std::to_string(column)), column_(column) {}

StratumLabels::StratumLabels(std::vector<int> labels) : labels_(std::move(labels)) {
  for (int s : labels_) {
    if (s < 0) throw InvalidDesignError("stratum labels must be non-negative");
    strata_ = std::max(strata_, s + 1);
  }
  sizes_.assign(static_cast<std::size_t>(strata_), 0);
  for (int s : labels_) ++sizes_[static_cast<std::size_t>(s)];
}

StratumLabels StratumLabels::from_one_based(std::span<const int> labels) {
  std::vector<int> zero(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1) throw InvalidDesignError("stratum labels are 1-based");
    zero[i] = labels[i] - 1;
  }
  return StratumLabels(std::move(zero));
}

std::vector<int> StratumLabels::treated_per_stratum(const Assignment& w) const {
  if (w.size() != units()) throw LengthMismatchError("assignment length does not match stratum labels");
  std::vector<int> counts(static_cast<std::size_t>(strata_), 0);
  for (int i = 0; i < units(); ++i)
    if (w.treated(i)) ++counts[static_cast<std::size_t>(labels_[static_cast<std::size_t>(i)])];
  return counts;
}

StratumLabels StratumLabels::subset(std::span<const int> units) const {
  std::vector<int> raw;
  raw.reserve(units.size());
  for (int i : units) raw.push_back(labels_.at(static_cast<std::size_t>(i)));
  // Renumber densely in order of the original label.
  std::vector<int> remap(static_cast<std::size_t>(strata_), -1);
  std::vector<int> present(raw);
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  for (std::size_t k = 0; k < present.size(); ++k) remap[static_cast<std::size_t>(present[k])] = static_cast<int>(k);
  for (int& s : raw) s = remap[static_cast<std::size_t>(s)];
  return StratumLabels(std::move(raw));
}

double tau_sd(const Vector& y, const Assignment& w) {
  check_lengths(y, w);
  if (w.treated_count() < 1 || w.control_count() < 1) throw EmptyArmError("mean difference needs both arms");
  double sum_t = 0.0;
  double sum_c = 0.0;
  for (int i = 0; i < w.size(); ++i) (w.treated(i) ? sum_t : sum_c) += y(i);
  return sum_t / w.treated_count() - sum_c / w.control_count();
}

double tau_ps(const Vector& y, const Assignment& w, const StratumLabels& labels) {
  check_lengths(y, w);
  if (labels.units() != w.size()) throw LengthMismatchError("stratum labels do not match assignment length");
  const auto s_count = static_cast<std::size_t>(labels.strata());
  std::vector<double> sum_t(s_count, 0.0), sum_c(s_count, 0.0);
  std::vector<int> n_t(s_count, 0), n_c(s_count, 0);
  for (int i = 0; i < w.size(); ++i) {
    const auto s = static_cast<std::size_t>(labels[i]);
    if (w.treated(i)) {
      sum_t[s] += y(i);
      ++n_t[s];
    } else {
      sum_c[s] += y(i);
      ++n_c[s];
    }
  }
  double weighted = 0.0;
  double weight = 0.0;
  double last = 0.0;
  int used = 0;
  for (std::size_t s = 0; s < s_count; ++s) {
    if (n_t[s] == 0 || n_c[s] == 0) continue;
    const double ns = n_t[s] + n_c[s];
    last = sum_t[s] / n_t[s] - sum_c[s] / n_c[s];
    weighted += ns * last;
    weight += ns;
    ++used;
  }
  if (weight == 0.0) throw AllStrataDroppedError("no stratum contains both treated and control units");
  // A single stratum returns its difference unscaled so it matches tau_sd bit for bit.
  if (used == 1) return last;
  return weighted / weight;
}

Vector least_squares(const Matrix& design, const Vector& response) {
  if (design.rows() != response.size()) throw LengthMismatchError("design rows do not match response length");
  if (design.cols() > design.rows()) throw RankDeficientError(static_cast<int>(design.rows()));
  Eigen::HouseholderQR<Matrix> qr(design);
  check_rank(qr, design);
  return qr.solve(response);
}

double tau_int(const Vector& y, const Assignment& w, const Matrix& x) {
  check_lengths(y, w);
  if (x.rows() != y.size()) throw LengthMismatchError("covariate rows do not match outcomes");
  const Matrix centered = x.rowwise() - x.colwise().mean();
  Matrix design;
  fill_interaction_design(design, x, centered, w);
  return least_squares(design, y)(1);
}

StatisticEvaluator::StatisticEvaluator(StatisticSpec spec, const Matrix& x, const Vector& y)
    : spec_(std::move(spec)), y_(y), y_total_(y.sum()) {
  if (x.rows() != y.size()) throw LengthMismatchError("covariate rows do not match outcomes");
  if (std::holds_alternative<RegressionInteraction>(spec_)) {
    x_ = x;
    x_centered_ = x.rowwise() - x.colwise().mean();
    if (2 * x.cols() + 2 > x.rows()) throw RankDeficientError(static_cast<int>(x.rows()));
    design_.resize(x.rows(), 2 * x.cols() + 2);
    qr_ = Eigen::HouseholderQR<Matrix>(design_.rows(), design_.cols());
  }
  if (const auto* ps = std::get_if<PostStratified>(&spec_)) {
    if (ps->labels.units() != y.size()) throw LengthMismatchError("stratum labels do not match outcomes");
  }
}

double StatisticEvaluator::operator()(const Assignment& w, std::span<const int> treated) {
  if (std::holds_alternative<MeanDifference>(spec_)) {
    const int nt = static_cast<int>(treated.size());
    const int nc = static_cast<int>(y_.size()) - nt;
    if (nt < 1 || nc < 1) throw EmptyArmError("mean difference needs both arms");
    double sum_t = 0.0;
    for (int i : treated) sum_t += y_(i);
    return sum_t / nt - (y_total_ - sum_t) / nc;
  }
  if (const auto* ps = std::get_if<PostStratified>(&spec_)) return tau_ps(y_, w, ps->labels);

  fill_interaction_design(design_, x_, x_centered_, w);
  qr_.compute(design_);
  check_rank(qr_, design_);
  return qr_.solve(y_)(1);
}

double StatisticEvaluator::operator()(const Assignment& w) {
  const auto treated = w.treated_units();
  return (*this)(w, treated);
}

}  // namespace crt
