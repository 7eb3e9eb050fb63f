#pragma once

#include <limits>
#include <span>
#include <vector>

#include "crt/data.hpp"

namespace crt {

inline constexpr double kDefaultConditionCap = 1e12;

/// Disjoint groups of covariate columns (0-based), each with its own
/// Mahalanobis constraint.
struct TierSpec {
  std::vector<std::vector<int>> tiers;

  static TierSpec single(int covariates);
  static TierSpec singletons(int covariates);
  /// Contiguous tiers of (nearly) equal size: T=2 over 4 covariates gives {0,1},{2,3}.
  static TierSpec contiguous(int covariates, int count);
  /// From 1-based index lists such as [[1,2],[3,4]].
  static TierSpec from_one_based(const std::vector<std::vector<int>>& lists);

  int count() const noexcept { return static_cast<int>(tiers.size()); }
  int size(int t) const { return static_cast<int>(tiers.at(static_cast<std::size_t>(t)).size()); }

  /// Throws InvalidDesignError unless tiers are non-empty, disjoint and within [0, covariates).
  void validate(int covariates) const;
};

/// Relative slack when comparing a distance to a bound. Bounds are often
/// distances of concrete assignments, and the same assignment evaluated with
/// a different summation order must land on the same side.
inline constexpr double kBoundSlack = 1e-9;

struct TierBounds {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double m) const noexcept {
    return lower - kBoundSlack * (1.0 + lower) <= m && m <= upper + kBoundSlack * (1.0 + upper);
  }
};

/// Acceptance region for assignments: per tier, lower <= M_t <= upper and,
/// when sign enforcement is on, each tier covariate's mean-difference sign
/// equals the reference sign.
struct BalanceCriterion {
  TierSpec tiers;
  std::vector<TierBounds> bounds;
  std::vector<int> ref_signs;
  bool enforce_signs = true;

  /// Bounds (0, inf) on every tier and no sign constraint.
  static BalanceCriterion vacuous(TierSpec tiers, int covariates);

  void validate(int covariates) const;
};

struct BalanceSummary {
  std::vector<double> tier_distance;
  std::vector<int> signs;
};

/// Inverse of the sample covariance (divisor N-1) of the columns of `x`.
/// Throws SingularCovarianceError when the condition number exceeds `condition_cap`.
Matrix covariance_inverse(const Matrix& x, double condition_cap = kDefaultConditionCap);

/// Treated-minus-control covariate mean differences.
Vector mean_difference(const Matrix& x, const Assignment& w);

/// (N_T N_C / N) d' S^-1 d with d the treated-minus-control mean difference.
double mahalanobis(const Matrix& x, const Assignment& w, const Matrix& cov_inv);

/// Componentwise sign of the treated-minus-control mean difference; an exact zero maps to 0.
std::vector<int> mean_diff_signs(const Matrix& x, const Assignment& w);

/// Balance geometry of a fixed covariate matrix: per-tier inverse covariances
/// computed once from all N units, plus a fast evaluation path over lists of
/// treated units used by the samplers.
class CovariateBalance {
 public:
  struct Workspace {
    std::vector<double> sums;
    std::vector<double> diff;
    std::vector<double> tier_diff;
  };

  CovariateBalance(const Matrix& x, TierSpec tiers, double condition_cap = kDefaultConditionCap);

  const TierSpec& tiers() const noexcept { return tiers_; }
  int units() const noexcept { return n_; }
  int covariates() const noexcept { return p_; }
  const Matrix& tier_inverse(int t) const { return inverses_.at(static_cast<std::size_t>(t)); }

  BalanceSummary summarize(const Assignment& w) const;
  BalanceSummary summarize(std::span<const int> treated) const;
  double tier_distance(int t, const Assignment& w) const;

  /// Fills ws.diff with the mean differences of all covariates for the treated set.
  void mean_differences(std::span<const int> treated, Workspace& ws) const;
  /// Tier distance from differences already in ws.diff.
  double tier_distance(int t, int n_treated, Workspace& ws) const;
  /// Sign of one entry of ws.diff.
  static int sign_of(double d) noexcept { return (d > 0.0) - (d < 0.0); }

  bool tier_signs_match(int t, std::span<const int> ref_signs, const Workspace& ws) const;
  bool accepts(std::span<const int> treated, const BalanceCriterion& crit, Workspace& ws) const;

 private:
  int n_;
  int p_;
  TierSpec tiers_;
  std::vector<double> rows_;
  std::vector<double> totals_;
  std::vector<Matrix> inverses_;
};

/// True iff every tier satisfies its bounds and (when enforced) the sign clause.
bool evaluate_criterion(const CovariateBalance& balance, const Assignment& w, const BalanceCriterion& crit);

}  // namespace crt
