#include "crt/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crt/error.hpp"

namespace crt {

void BoundsConfig::validate(int tier_count) const {
  if (reference_draws < 2) throw InvalidDesignError("reference draws D must be at least 2");
  if (!(acceptance > 0.0 && acceptance <= 1.0)) throw InvalidDesignError("acceptance p_a must lie in (0, 1]");
  if (per_tier_acceptance) {
    if (static_cast<int>(per_tier_acceptance->size()) != tier_count)
      throw InvalidDesignError("per_tier_pa needs one entry per tier");
    for (double pa : *per_tier_acceptance)
      if (!(pa > 0.0 && pa <= 1.0)) throw InvalidDesignError("per-tier acceptance must lie in (0, 1]");
  }
  if (procedure == BoundsProcedure::Bin) {
    if (cutpoints.empty()) {
      if (bins < 0) throw InvalidDesignError("bin count must not be negative");
    } else {
      if (cutpoints.size() < 2 || cutpoints.front() != 0.0 || !std::isinf(cutpoints.back()))
        throw InvalidDesignError("cutpoints must start at 0 and end at inf");
      if (!std::is_sorted(cutpoints.begin(), cutpoints.end())) throw InvalidDesignError("cutpoints must be sorted");
    }
  }
  if (stall_limit < 1) throw InvalidDesignError("stall limit must be positive");
}

double BoundsConfig::tier_acceptance(int t, int tier_count) const {
  if (per_tier_acceptance) return per_tier_acceptance->at(static_cast<std::size_t>(t));
  return std::pow(acceptance, 1.0 / tier_count);
}

int BoundsConfig::tier_bins(int t, int tier_count) const {
  if (bins > 0) return bins;
  return std::max(1, static_cast<int>(std::lround(1.0 / tier_acceptance(t, tier_count))));
}

std::vector<double> sign_constrained_draws(const CovariateBalance& balance, const Assignment& w_obs, int t, int draws,
                                           RandomStream& rng, long long stall_limit, double* acceptance_rate) {
  if (draws < 2) throw InvalidDesignError("reference draws D must be at least 2");
  if (w_obs.size() != balance.units()) throw LengthMismatchError("observed assignment does not match covariates");
  if (t < 0 || t >= balance.tiers().count()) throw InvalidDesignError("tier index out of range");

  CovariateBalance::Workspace ws;
  const auto observed = w_obs.treated_units();
  balance.mean_differences(observed, ws);
  std::vector<int> ref(static_cast<std::size_t>(balance.covariates()));
  for (std::size_t j = 0; j < ref.size(); ++j) ref[j] = CovariateBalance::sign_of(ws.diff[j]);

  CompleteSampler sampler(balance.units(), w_obs.treated_count());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(draws));
  long long tries = 0;
  long long consecutive = 0;
  while (static_cast<int>(out.size()) < draws) {
    const auto treated = sampler.draw(rng);
    ++tries;
    balance.mean_differences(treated, ws);
    if (!balance.tier_signs_match(t, ref, ws)) {
      if (++consecutive >= stall_limit)
        throw SamplerStallError("sign-constrained reference sampler for tier " + std::to_string(t + 1) + " stalled",
                                tries, static_cast<long long>(out.size()));
      continue;
    }
    consecutive = 0;
    out.push_back(balance.tier_distance(t, w_obs.treated_count(), ws));
  }
  std::sort(out.begin(), out.end());
  if (acceptance_rate) *acceptance_rate = static_cast<double>(draws) / static_cast<double>(tries);
  return out;
}

TierBounds procedure1_bounds(std::span<const double> cutpoints, double m_obs) {
  if (cutpoints.size() < 2 || cutpoints.front() != 0.0 || !std::isinf(cutpoints.back()))
    throw InvalidDesignError("cutpoints must start at 0 and end at inf");
  if (!(m_obs >= 0.0)) throw InvalidDesignError("Mahalanobis distance must be non-negative");
  // First upper edge at or above m_obs: a value sitting on a cutpoint joins the lower bin.
  const auto upper = std::lower_bound(cutpoints.begin() + 1, cutpoints.end(), m_obs);
  return TierBounds{*(upper - 1), *upper};
}

int neighborhood_size(int draws, double acceptance) {
  const double target = static_cast<double>(draws) * acceptance;
  if (target < 2.0 - 1e-9)
    throw InsufficientDrawsError("D*p_a = " + std::to_string(target) + " selects fewer than 2 reference draws");
  int k = 2 * static_cast<int>(std::lround(target / 2.0));
  return std::clamp(k, 2, draws);
}

namespace {

// Half-open index range [first, last) of the draws a neighborhood selects.
std::pair<int, int> neighborhood_window(std::span<const double> sorted_draws, double acceptance, double m_obs) {
  const int d = static_cast<int>(sorted_draws.size());
  const int k = neighborhood_size(d, acceptance);
  // Draws strictly below m_obs occupy [0, split); ties are handled by position.
  const int split =
      static_cast<int>(std::lower_bound(sorted_draws.begin(), sorted_draws.end(), m_obs) - sorted_draws.begin());
  int take_lower = k / 2;
  int take_upper = k - take_lower;
  if (split < take_lower) {
    take_lower = split;
    take_upper = k - take_lower;
  } else if (d - split < take_upper) {
    take_upper = d - split;
    take_lower = k - take_upper;
  }
  return {split - take_lower, split + take_upper};
}

}  // namespace

TierBounds procedure2_bounds(std::span<const double> sorted_draws, double acceptance, double m_obs) {
  if (!(acceptance > 0.0 && acceptance <= 1.0)) throw InvalidDesignError("acceptance p_a must lie in (0, 1]");
  const auto [first, last] = neighborhood_window(sorted_draws, acceptance, m_obs);
  return TierBounds{std::min(m_obs, sorted_draws[static_cast<std::size_t>(first)]),
                    std::max(m_obs, sorted_draws[static_cast<std::size_t>(last - 1)])};
}

std::vector<double> quantile_bin_cutpoints(std::span<const double> sorted_draws, int bins) {
  if (bins < 1) throw InvalidDesignError("bin count must be positive");
  const int d = static_cast<int>(sorted_draws.size());
  if (d < bins) throw InsufficientDrawsError("fewer reference draws than bins");
  std::vector<double> cut{0.0};
  for (int c = 1; c < bins; ++c) {
    const int i = static_cast<int>(static_cast<long long>(c) * d / bins);
    const double q = 0.5 * (sorted_draws[static_cast<std::size_t>(i - 1)] + sorted_draws[static_cast<std::size_t>(i)]);
    cut.push_back(std::max(q, cut.back()));
  }
  cut.push_back(INFINITY);
  return cut;
}

BuiltCriterion build_tier_criterion(const CovariateBalance& balance, const Assignment& w_obs, const BoundsConfig& cfg,
                                    RandomStream& rng) {
  const int tier_count = balance.tiers().count();
  cfg.validate(tier_count);
  if (w_obs.size() != balance.units()) throw LengthMismatchError("observed assignment does not match covariates");

  const BalanceSummary observed = balance.summarize(w_obs);
  BuiltCriterion built;
  built.criterion.tiers = balance.tiers();
  built.criterion.ref_signs = observed.signs;
  built.criterion.enforce_signs = true;

  const std::uint64_t key = rng();
  for (int t = 0; t < tier_count; ++t) {
    RandomStream tier_rng = RandomStream::derive(key, {static_cast<std::uint64_t>(t)});
    TierReport report;
    report.observed_distance = observed.tier_distance[static_cast<std::size_t>(t)];
    report.tier_acceptance = cfg.tier_acceptance(t, tier_count);
    const auto draws = sign_constrained_draws(balance, w_obs, t, cfg.reference_draws, tier_rng, cfg.stall_limit,
                                              &report.sign_acceptance_rate);
    TierBounds bounds;
    if (cfg.procedure == BoundsProcedure::Bin) {
      const auto cut = cfg.cutpoints.empty() ? quantile_bin_cutpoints(draws, cfg.tier_bins(t, tier_count)) : cfg.cutpoints;
      bounds = procedure1_bounds(cut, report.observed_distance);
    } else {
      bounds = procedure2_bounds(draws, report.tier_acceptance, report.observed_distance);
      const auto [first, last] = neighborhood_window(draws, report.tier_acceptance, report.observed_distance);
      report.widened = report.observed_distance < draws[static_cast<std::size_t>(first)] ||
                       report.observed_distance > draws[static_cast<std::size_t>(last - 1)];
    }
    built.criterion.bounds.push_back(bounds);
    built.tiers.push_back(report);
  }
  return built;
}

}  // namespace crt
