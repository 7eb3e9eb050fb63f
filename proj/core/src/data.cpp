#include "crt/data.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "crt/error.hpp"

namespace crt {

Assignment::Assignment(std::vector<std::uint8_t> w) : w_(std::move(w)) {
  for (auto& v : w_) {
    if (v > 1) throw InvalidDesignError("assignment entries must be 0 or 1");
    treated_ += v;
  }
}

Assignment Assignment::from_treated(int n, std::span<const int> treated) {
  std::vector<std::uint8_t> w(static_cast<std::size_t>(n), 0);
  for (int i : treated) {
    if (i < 0 || i >= n) throw InvalidDesignError("treated index out of range");
    w[static_cast<std::size_t>(i)] = 1;
  }
  return Assignment(std::move(w));
}

std::vector<int> Assignment::treated_units() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(treated_));
  for (int i = 0; i < size(); ++i)
    if (w_[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

Assignment Assignment::complement() const {
  std::vector<std::uint8_t> w(w_.size());
  std::transform(w_.begin(), w_.end(), w.begin(), [](std::uint8_t v) { return static_cast<std::uint8_t>(1 - v); });
  return Assignment(std::move(w));
}

double PotentialOutcomes::average_effect() const {
  if (y0.size() != y1.size()) throw LengthMismatchError("potential outcome vectors differ in length");
  if (y0.size() == 0) return 0.0;
  return (y1 - y0).mean();
}

bool PotentialOutcomes::sharp_null() const { return y0.size() == y1.size() && (y0.array() == y1.array()).all(); }

ExperimentData::ExperimentData(Matrix x, Assignment w_obs, Vector y_obs)
    : x_(std::move(x)), w_obs_(std::move(w_obs)), y_obs_(std::move(y_obs)) {
  const auto n = x_.rows();
  if (w_obs_.size() != n || y_obs_.size() != n)
    throw LengthMismatchError("covariates, assignment and outcomes must have the same number of units (" +
                              std::to_string(n) + ", " + std::to_string(w_obs_.size()) + ", " +
                              std::to_string(y_obs_.size()) + ")");
  if (n < 2) throw InvalidDesignError("an experiment needs at least two units");
  if (w_obs_.treated_count() < 1 || w_obs_.control_count() < 1)
    throw InvalidDesignError("an experiment needs at least one treated and one control unit");
}

ExperimentData ExperimentData::subset(std::span<const int> units) const {
  const auto m = static_cast<Eigen::Index>(units.size());
  Matrix x(m, x_.cols());
  Vector y(m);
  std::vector<std::uint8_t> w(units.size());
  for (Eigen::Index r = 0; r < m; ++r) {
    const int i = units[static_cast<std::size_t>(r)];
    x.row(r) = x_.row(i);
    y(r) = y_obs_(i);
    w[static_cast<std::size_t>(r)] = w_obs_[i];
  }
  return ExperimentData(std::move(x), Assignment(std::move(w)), std::move(y));
}

Assignment draw_complete(int n, int n_treated, RandomStream& rng) {
  CompleteSampler sampler(n, n_treated);
  return Assignment::from_treated(n, sampler.draw(rng));
}

Vector observe(const PotentialOutcomes& po, const Assignment& w) {
  if (po.y0.size() != w.size() || po.y1.size() != w.size())
    throw LengthMismatchError("assignment length " + std::to_string(w.size()) +
                              " does not match potential outcomes of length " + std::to_string(po.y0.size()));
  Vector y(w.size());
  for (int i = 0; i < w.size(); ++i) y(i) = w.treated(i) ? po.y1(i) : po.y0(i);
  return y;
}

CompleteSampler::CompleteSampler(int n, int n_treated) : n_(n), n_treated_(n_treated) {
  if (n_treated < 1 || n_treated > n - 1)
    throw InvalidDesignError("number treated must lie in [1, N-1]; got N=" + std::to_string(n) +
                             ", N_T=" + std::to_string(n_treated));
  pick_treated_ = n_treated <= n - n_treated;
  picks_ = pick_treated_ ? n_treated : n - n_treated;
  perm_.resize(static_cast<std::size_t>(n));
  std::iota(perm_.begin(), perm_.end(), 0);
}

std::span<const int> CompleteSampler::draw(RandomStream& rng) {
  // The first `picks_` slots of any arrangement become a uniform subset.
  for (int i = 0; i < picks_; ++i) {
    const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_ - i)));
    std::swap(perm_[static_cast<std::size_t>(i)], perm_[static_cast<std::size_t>(j)]);
  }
  std::span<const int> all(perm_);
  return pick_treated_ ? all.first(static_cast<std::size_t>(picks_)) : all.subspan(static_cast<std::size_t>(picks_));
}

}  // namespace crt
