#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "crt/balance.hpp"
#include "crt/data.hpp"
#include "crt/random.hpp"
#include "crt/teststats.hpp"

namespace crt {

struct CompleteRandomization {};

/// Permutations of the observed assignment within fixed strata.
struct WithinStrata {
  StratumLabels labels;
};

/// Complete randomization restricted to assignments accepted by `criterion`,
/// sampled by rejection.
struct ConditionalOnBalance {
  BalanceCriterion criterion;
  long long max_tries = 10'000'000;
};

using SamplerSpec = std::variant<CompleteRandomization, WithinStrata, ConditionalOnBalance>;

struct TestOptions {
  long long draws = 1000;
  /// p = (1 + #) / (1 + M) instead of # / M.
  bool add_one = false;
  bool keep_draws = false;
  int threads = 1;
  /// Abort when more than this fraction of draws fails statistic evaluation.
  double max_failure_fraction = 0.01;
  double condition_cap = kDefaultConditionCap;
};

struct SamplerDiagnostics {
  double acceptance_rate = 1.0;
  long long tries = 0;
  long long failed_draws = 0;
  double wall_seconds = 0.0;
};

struct TestResult {
  double t_obs = 0.0;
  double p_value = 1.0;
  long long draws = 0;
  long long exceed = 0;
  std::vector<double> statistics;
  SamplerDiagnostics diagnostics;
};

/// Relative slack under which |t| and |t_obs| count as tied.
inline constexpr double kTieTolerance = 1e-10;

/// Uniform over assignments with `treated_per_stratum[s]` treated units in every stratum s.
Assignment draw_within_strata(const StratumLabels& labels, std::span<const int> treated_per_stratum, RandomStream& rng);

/// Rejection sampler: complete randomizations until one satisfies `crit`.
/// Throws SamplerStallError after `max_tries` consecutive rejections.
Assignment draw_conditional(const CovariateBalance& balance, const BalanceCriterion& crit, int n_treated,
                            long long max_tries, RandomStream& rng, long long* tries = nullptr);

/// Monte Carlo randomization p-value under the sharp null: the observed
/// outcomes are reused for every draw and p = #{|t(w_m)| >= |t_obs|} / M.
/// Draws are generated in fixed-size chunks keyed by (seed, chunk), so the
/// result does not depend on options.threads.
TestResult randomization_pvalue(const ExperimentData& data, const StatisticSpec& stat, const SamplerSpec& sampler,
                                const TestOptions& options, std::uint64_t seed);

/// Exact p-value by enumerating every assignment with the observed number of
/// treated units (optionally only those accepted by `filter`).
double exact_pvalue_enumerate(const ExperimentData& data, const StatisticSpec& stat,
                              const std::optional<BalanceCriterion>& filter = std::nullopt,
                              double condition_cap = kDefaultConditionCap);

inline constexpr double kEnumerationCap = 1e6;

/// Binomial coefficient as a double (exact for the sizes used here).
double binomial(int n, int k);

/// True when |t| ties or exceeds |t_obs| within kTieTolerance scaled by `scale`.
inline bool at_least_as_extreme(double t, double t_obs, double scale) {
  const double a = t < 0 ? -t : t;
  const double b = t_obs < 0 ? -t_obs : t_obs;
  return a >= b - kTieTolerance * (b + scale);
}

}  // namespace crt
