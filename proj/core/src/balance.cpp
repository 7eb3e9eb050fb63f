#include "crt/balance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crt/error.hpp"

namespace crt {

namespace {

Matrix sample_covariance(const Matrix& x) {
  if (x.rows() < 2) throw InvalidDesignError("covariance needs at least two units");
  const Matrix centered = x.rowwise() - x.colwise().mean();
  return (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
}

// Inverse through the symmetric eigendecomposition; the eigenvalue spread is
// the condition estimate reported on failure.
Matrix inverse_or_throw(const Matrix& cov, double cap, int tier_number) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success) throw SingularCovarianceError(tier_number, INFINITY);
  const Vector& lambda = eig.eigenvalues();
  const double lo = lambda.minCoeff();
  const double hi = lambda.maxCoeff();
  const double condition = (lo > 0.0) ? hi / lo : INFINITY;
  if (!(hi > 0.0) || !(condition <= cap)) throw SingularCovarianceError(tier_number, condition);
  return eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

void check_assignment(const Matrix& x, const Assignment& w) {
  if (w.size() != x.rows())
    throw LengthMismatchError("assignment has " + std::to_string(w.size()) + " units, covariates have " +
                              std::to_string(x.rows()));
  if (w.treated_count() < 1 || w.control_count() < 1) throw EmptyArmError("assignment leaves an arm empty");
}

}  // namespace

SingularCovarianceError::SingularCovarianceError(int tier, double condition)
    : Error("sample covariance of tier " + std::to_string(tier) + " is singular or ill-conditioned (condition " +
            (std::isfinite(condition) ? std::to_string(condition) : std::string("inf")) + ")"),
      tier_(tier),
      condition_(condition) {}

TierSpec TierSpec::single(int covariates) {
  TierSpec spec;
  spec.tiers.emplace_back();
  for (int j = 0; j < covariates; ++j) spec.tiers.back().push_back(j);
  return spec;
}

TierSpec TierSpec::singletons(int covariates) {
  TierSpec spec;
  for (int j = 0; j < covariates; ++j) spec.tiers.push_back({j});
  return spec;
}

TierSpec TierSpec::contiguous(int covariates, int count) {
  if (count < 1 || count > covariates) throw InvalidDesignError("tier count must lie in [1, p]");
  TierSpec spec;
  int start = 0;
  for (int t = 0; t < count; ++t) {
    const int size = covariates / count + (t < covariates % count ? 1 : 0);
    spec.tiers.emplace_back();
    for (int j = start; j < start + size; ++j) spec.tiers.back().push_back(j);
    start += size;
  }
  return spec;
}

TierSpec TierSpec::from_one_based(const std::vector<std::vector<int>>& lists) {
  TierSpec spec;
  for (const auto& list : lists) {
    spec.tiers.emplace_back();
    for (int j : list) {
      if (j < 1) throw InvalidDesignError("tier indices are 1-based; got " + std::to_string(j));
      spec.tiers.back().push_back(j - 1);
    }
  }
  return spec;
}

void TierSpec::validate(int covariates) const {
  if (tiers.empty()) throw InvalidDesignError("at least one tier is required");
  std::vector<char> seen(static_cast<std::size_t>(std::max(covariates, 0)), 0);
  for (std::size_t t = 0; t < tiers.size(); ++t) {
    if (tiers[t].empty()) throw InvalidDesignError("tier " + std::to_string(t + 1) + " is empty");
    for (int j : tiers[t]) {
      if (j < 0 || j >= covariates)
        throw InvalidDesignError("tier " + std::to_string(t + 1) + " references covariate " + std::to_string(j + 1) +
                                 " but only " + std::to_string(covariates) + " exist");
      if (seen[static_cast<std::size_t>(j)]++)
        throw InvalidDesignError("covariate " + std::to_string(j + 1) + " appears in more than one tier");
    }
  }
}

BalanceCriterion BalanceCriterion::vacuous(TierSpec tiers, int covariates) {
  BalanceCriterion crit;
  crit.bounds.assign(tiers.tiers.size(), TierBounds{});
  crit.tiers = std::move(tiers);
  crit.ref_signs.assign(static_cast<std::size_t>(covariates), 0);
  crit.enforce_signs = false;
  return crit;
}

void BalanceCriterion::validate(int covariates) const {
  tiers.validate(covariates);
  if (bounds.size() != tiers.tiers.size()) throw InvalidDesignError("criterion needs one bound pair per tier");
  for (const auto& b : bounds) {
    if (!(b.lower >= 0.0) || !(b.lower <= b.upper)) throw InvalidDesignError("criterion bounds must satisfy 0 <= lower <= upper");
  }
  if (static_cast<int>(ref_signs.size()) != covariates)
    throw InvalidDesignError("criterion reference signs must cover all covariates");
  for (int s : ref_signs)
    if (s < -1 || s > 1) throw InvalidDesignError("reference signs must be -1, 0 or +1");
}

Matrix covariance_inverse(const Matrix& x, double condition_cap) {
  return inverse_or_throw(sample_covariance(x), condition_cap, 1);
}

Vector mean_difference(const Matrix& x, const Assignment& w) {
  check_assignment(x, w);
  Vector sum_t = Vector::Zero(x.cols());
  Vector sum_c = Vector::Zero(x.cols());
  for (int i = 0; i < w.size(); ++i) {
    if (w.treated(i))
      sum_t += x.row(i).transpose();
    else
      sum_c += x.row(i).transpose();
  }
  return sum_t / w.treated_count() - sum_c / w.control_count();
}

double mahalanobis(const Matrix& x, const Assignment& w, const Matrix& cov_inv) {
  if (cov_inv.rows() != x.cols() || cov_inv.cols() != x.cols())
    throw LengthMismatchError("inverse covariance is " + std::to_string(cov_inv.rows()) + "x" +
                              std::to_string(cov_inv.cols()) + " but there are " + std::to_string(x.cols()) +
                              " covariates");
  const Vector d = mean_difference(x, w);
  const double scale = static_cast<double>(w.treated_count()) * w.control_count() / w.size();
  return std::max(0.0, scale * d.dot(cov_inv * d));
}

std::vector<int> mean_diff_signs(const Matrix& x, const Assignment& w) {
  const Vector d = mean_difference(x, w);
  std::vector<int> signs(static_cast<std::size_t>(d.size()));
  for (Eigen::Index j = 0; j < d.size(); ++j) signs[static_cast<std::size_t>(j)] = CovariateBalance::sign_of(d(j));
  return signs;
}

CovariateBalance::CovariateBalance(const Matrix& x, TierSpec tiers, double condition_cap)
    : n_(static_cast<int>(x.rows())), p_(static_cast<int>(x.cols())), tiers_(std::move(tiers)) {
  tiers_.validate(p_);
  rows_.resize(static_cast<std::size_t>(n_) * static_cast<std::size_t>(p_));
  totals_.assign(static_cast<std::size_t>(p_), 0.0);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < p_; ++j) {
      rows_[static_cast<std::size_t>(i) * p_ + j] = x(i, j);
      totals_[static_cast<std::size_t>(j)] += x(i, j);
    }
  const Matrix cov = sample_covariance(x);
  for (int t = 0; t < tiers_.count(); ++t) {
    const auto& cols = tiers_.tiers[static_cast<std::size_t>(t)];
    const auto k = static_cast<Eigen::Index>(cols.size());
    Matrix sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = cov(cols[static_cast<std::size_t>(a)], cols[static_cast<std::size_t>(b)]);
    inverses_.push_back(inverse_or_throw(sub, condition_cap, t + 1));
  }
}

void CovariateBalance::mean_differences(std::span<const int> treated, Workspace& ws) const {
  const auto p = static_cast<std::size_t>(p_);
  ws.sums.assign(p, 0.0);
  ws.diff.resize(p);
  for (int i : treated) {
    const double* row = rows_.data() + static_cast<std::size_t>(i) * p;
    for (std::size_t j = 0; j < p; ++j) ws.sums[j] += row[j];
  }
  const auto nt = static_cast<double>(treated.size());
  const double nc = static_cast<double>(n_) - nt;
  for (std::size_t j = 0; j < p; ++j) ws.diff[j] = ws.sums[j] / nt - (totals_[j] - ws.sums[j]) / nc;
}

double CovariateBalance::tier_distance(int t, int n_treated, Workspace& ws) const {
  const auto& cols = tiers_.tiers[static_cast<std::size_t>(t)];
  const Matrix& inv = inverses_[static_cast<std::size_t>(t)];
  const auto k = cols.size();
  ws.tier_diff.resize(k);
  for (std::size_t a = 0; a < k; ++a) ws.tier_diff[a] = ws.diff[static_cast<std::size_t>(cols[a])];
  double q = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    double row = 0.0;
    for (std::size_t b = 0; b < k; ++b)
      row += inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) * ws.tier_diff[b];
    q += ws.tier_diff[a] * row;
  }
  const double scale = static_cast<double>(n_treated) * (n_ - n_treated) / n_;
  return std::max(0.0, scale * q);
}

bool CovariateBalance::tier_signs_match(int t, std::span<const int> ref_signs, const Workspace& ws) const {
  for (int j : tiers_.tiers[static_cast<std::size_t>(t)])
    if (sign_of(ws.diff[static_cast<std::size_t>(j)]) != ref_signs[static_cast<std::size_t>(j)]) return false;
  return true;
}

bool CovariateBalance::accepts(std::span<const int> treated, const BalanceCriterion& crit, Workspace& ws) const {
  mean_differences(treated, ws);
  const int nt = static_cast<int>(treated.size());
  if (crit.enforce_signs) {
    for (int t = 0; t < tiers_.count(); ++t)
      if (!tier_signs_match(t, crit.ref_signs, ws)) return false;
  }
  for (int t = 0; t < tiers_.count(); ++t)
    if (!crit.bounds[static_cast<std::size_t>(t)].contains(tier_distance(t, nt, ws))) return false;
  return true;
}

BalanceSummary CovariateBalance::summarize(std::span<const int> treated) const {
  if (treated.empty() || static_cast<int>(treated.size()) >= n_) throw EmptyArmError("assignment leaves an arm empty");
  Workspace ws;
  mean_differences(treated, ws);
  BalanceSummary out;
  for (int t = 0; t < tiers_.count(); ++t) out.tier_distance.push_back(tier_distance(t, static_cast<int>(treated.size()), ws));
  out.signs.reserve(static_cast<std::size_t>(p_));
  for (double d : ws.diff) out.signs.push_back(sign_of(d));
  return out;
}

BalanceSummary CovariateBalance::summarize(const Assignment& w) const {
  if (w.size() != n_) throw LengthMismatchError("assignment length does not match covariates");
  const auto treated = w.treated_units();
  return summarize(std::span<const int>(treated));
}

double CovariateBalance::tier_distance(int t, const Assignment& w) const {
  return summarize(w).tier_distance.at(static_cast<std::size_t>(t));
}

bool evaluate_criterion(const CovariateBalance& balance, const Assignment& w, const BalanceCriterion& crit) {
  if (w.size() != balance.units()) throw LengthMismatchError("assignment length does not match covariates");
  if (crit.tiers.tiers != balance.tiers().tiers)
    throw InvalidDesignError("criterion tiers differ from the tiers the balance geometry was built for");
  if (w.treated_count() < 1 || w.control_count() < 1) return false;
  const auto treated = w.treated_units();
  CovariateBalance::Workspace ws;
  return balance.accepts(treated, crit, ws);
}

}  // namespace crt
