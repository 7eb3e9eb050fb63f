#pragma once

#include <optional>
#include <span>
#include <vector>

#include "crt/balance.hpp"
#include "crt/data.hpp"
#include "crt/random.hpp"

namespace crt {

enum class BoundsProcedure {
  Bin,           ///< fixed cutpoints, bin containing M_obs
  Neighborhood,  ///< D*p_a reference draws closest to M_obs
};

struct BoundsConfig {
  BoundsProcedure procedure = BoundsProcedure::Neighborhood;
  int reference_draws = 1000;
  double acceptance = 0.1;
  /// Explicit per-tier acceptance; defaults to acceptance^(1/T) for every tier.
  std::optional<std::vector<double>> per_tier_acceptance;
  /// Bin procedure: explicit cutpoints 0 = m_1 <= ... <= m_{C+1} = inf shared by all
  /// tiers. When empty, equal-probability quantile bins of each tier's
  /// reference draws are used: `bins` of them, or round(1 / p_a_t) when
  /// `bins` is 0 so that each bin holds the tier's acceptance probability.
  std::vector<double> cutpoints;
  int bins = 0;
  long long stall_limit = 1'000'000;

  void validate(int tier_count) const;
  double tier_acceptance(int t, int tier_count) const;
  /// Quantile bin count for tier `t` when no cutpoints are given.
  int tier_bins(int t, int tier_count) const;
};

/// `draws` sign-constrained complete-randomization Mahalanobis distances for
/// tier `t`, sorted ascending. A draw is kept only when every covariate of
/// the tier has the same mean-difference sign as under `w_obs`.
std::vector<double> sign_constrained_draws(const CovariateBalance& balance, const Assignment& w_obs, int t, int draws,
                                           RandomStream& rng, long long stall_limit = 1'000'000,
                                           double* acceptance_rate = nullptr);

/// Bin containing m_obs; a tie at a cutpoint resolves to the lower bin.
TierBounds procedure1_bounds(std::span<const double> cutpoints, double m_obs);

/// Neighborhood of D*p_a sorted draws around m_obs, with the corner cases
/// that shift the window when one side runs out of draws.
TierBounds procedure2_bounds(std::span<const double> sorted_draws, double acceptance, double m_obs);

/// Number of reference draws a neighborhood selects: D*p_a rounded to the
/// nearest even integer, clamped to [2, D].
int neighborhood_size(int draws, double acceptance);

/// Cutpoints 0, q_1, ..., q_{C-1}, inf at the equal-probability quantiles of sorted draws.
std::vector<double> quantile_bin_cutpoints(std::span<const double> sorted_draws, int bins);

struct TierReport {
  double observed_distance = 0.0;
  double sign_acceptance_rate = 0.0;
  double tier_acceptance = 0.0;
  bool widened = false;
};

struct BuiltCriterion {
  BalanceCriterion criterion;
  std::vector<TierReport> tiers;
};

/// Bounds for every tier from its own sign-constrained reference draws;
/// reference signs are the observed ones.
BuiltCriterion build_tier_criterion(const CovariateBalance& balance, const Assignment& w_obs, const BoundsConfig& cfg,
                                    RandomStream& rng);

}  // namespace crt
