#include "crt/engine.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "crt/error.hpp"
#include "crt/parallel.hpp"

namespace crt {

namespace {

constexpr long long kChunkSize = 256;

// Within-strata sampler with one persistent permutation buffer per stratum.
class StrataSampler {
 public:
  StrataSampler(const StratumLabels& labels, std::span<const int> treated_per_stratum) {
    const auto s_count = static_cast<std::size_t>(labels.strata());
    if (treated_per_stratum.size() != s_count)
      throw CountMismatchError("need one treated count per stratum (" + std::to_string(s_count) + "), got " +
                               std::to_string(treated_per_stratum.size()));
    members_.resize(s_count);
    for (int i = 0; i < labels.units(); ++i) members_[static_cast<std::size_t>(labels[i])].push_back(i);
    counts_.assign(treated_per_stratum.begin(), treated_per_stratum.end());
    for (std::size_t s = 0; s < s_count; ++s) {
      if (counts_[s] < 0 || counts_[s] > static_cast<int>(members_[s].size()))
        throw CountMismatchError("stratum " + std::to_string(s + 1) + " has " + std::to_string(members_[s].size()) +
                                 " units but " + std::to_string(counts_[s]) + " treated were requested");
      total_ += counts_[s];
    }
    treated_.reserve(static_cast<std::size_t>(total_));
  }

  std::span<const int> draw(RandomStream& rng) {
    treated_.clear();
    for (std::size_t s = 0; s < members_.size(); ++s) {
      auto& m = members_[s];
      const int size = static_cast<int>(m.size());
      const int k = counts_[s];
      for (int i = 0; i < k; ++i) {
        const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - i)));
        std::swap(m[static_cast<std::size_t>(i)], m[static_cast<std::size_t>(j)]);
        treated_.push_back(m[static_cast<std::size_t>(i)]);
      }
    }
    return treated_;
  }

  int treated_count() const noexcept { return total_; }

 private:
  std::vector<std::vector<int>> members_;
  std::vector<int> counts_;
  std::vector<int> treated_;
  int total_ = 0;
};

// Draw source for one chunk of Monte Carlo work.
class ChunkSampler {
 public:
  ChunkSampler(const SamplerSpec& spec, const ExperimentData& data, const CovariateBalance* balance,
               const std::vector<int>& strata_counts)
      : spec_(spec), balance_(balance) {
    if (const auto* strata = std::get_if<WithinStrata>(&spec)) {
      strata_.emplace(strata->labels, strata_counts);
    } else {
      complete_.emplace(data.units(), data.treated_count());
    }
  }

  std::span<const int> draw(RandomStream& rng, long long& tries) {
    if (strata_) {
      ++tries;
      return strata_->draw(rng);
    }
    if (const auto* cond = std::get_if<ConditionalOnBalance>(&spec_)) {
      long long consecutive = 0;
      while (true) {
        const auto treated = complete_->draw(rng);
        ++tries;
        if (balance_->accepts(treated, cond->criterion, ws_)) return treated;
        if (++consecutive >= cond->max_tries)
          throw SamplerStallError("conditional sampler stalled after " + std::to_string(consecutive) +
                                      " consecutive rejections",
                                  tries, 0);
      }
    }
    ++tries;
    return complete_->draw(rng);
  }

 private:
  const SamplerSpec& spec_;
  const CovariateBalance* balance_;
  std::optional<CompleteSampler> complete_;
  std::optional<StrataSampler> strata_;
  CovariateBalance::Workspace ws_;
};

bool is_statistic_failure(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const RankDeficientError&) {
    return true;
  } catch (const EmptyArmError&) {
    return true;
  } catch (const AllStrataDroppedError&) {
    return true;
  } catch (...) {
    return false;
  }
}

double outcome_scale(const Vector& y) { return y.size() == 0 ? 0.0 : y.cwiseAbs().maxCoeff(); }

}  // namespace

SamplerStallError::SamplerStallError(const std::string& what, long long tries, long long accepted)
    : Error(what), tries_(tries), accepted_(accepted) {}

double SamplerStallError::acceptance_rate() const noexcept {
  return tries_ > 0 ? static_cast<double>(accepted_) / static_cast<double>(tries_) : 0.0;
}

DrawFailureError::DrawFailureError(long long failed, long long attempted)
    : Error(std::to_string(failed) + " of " + std::to_string(attempted) +
            " Monte Carlo draws failed statistic evaluation"),
      failed_(failed),
      attempted_(attempted) {}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return std::round(c);
}

Assignment draw_within_strata(const StratumLabels& labels, std::span<const int> treated_per_stratum,
                              RandomStream& rng) {
  StrataSampler sampler(labels, treated_per_stratum);
  return Assignment::from_treated(labels.units(), sampler.draw(rng));
}

Assignment draw_conditional(const CovariateBalance& balance, const BalanceCriterion& crit, int n_treated,
                            long long max_tries, RandomStream& rng, long long* tries) {
  if (max_tries < 1) throw InvalidDesignError("max_tries must be at least 1");
  CompleteSampler sampler(balance.units(), n_treated);
  CovariateBalance::Workspace ws;
  for (long long attempt = 1; attempt <= max_tries; ++attempt) {
    const auto treated = sampler.draw(rng);
    if (balance.accepts(treated, crit, ws)) {
      if (tries) *tries = attempt;
      return Assignment::from_treated(balance.units(), treated);
    }
  }
  if (tries) *tries = max_tries;
  throw SamplerStallError("conditional sampler stalled after " + std::to_string(max_tries) + " consecutive rejections",
                          max_tries, 0);
}

TestResult randomization_pvalue(const ExperimentData& data, const StatisticSpec& stat, const SamplerSpec& sampler,
                                const TestOptions& options, std::uint64_t seed) {
  if (options.draws < 1) throw InvalidDesignError("the number of Monte Carlo draws must be at least 1");
  const auto start = std::chrono::steady_clock::now();

  std::optional<CovariateBalance> balance;
  if (const auto* cond = std::get_if<ConditionalOnBalance>(&sampler)) {
    cond->criterion.validate(data.covariate_count());
    if (cond->max_tries < 1) throw InvalidDesignError("max_tries must be at least 1");
    balance.emplace(data.covariates(), cond->criterion.tiers, options.condition_cap);
  }
  std::vector<int> strata_counts;
  if (const auto* strata = std::get_if<WithinStrata>(&sampler)) {
    if (strata->labels.units() != data.units()) throw LengthMismatchError("stratum labels do not match the data");
    strata_counts = strata->labels.treated_per_stratum(data.observed_assignment());
  }

  const bool needs_assignment = !std::holds_alternative<MeanDifference>(stat);
  TestResult result;
  {
    StatisticEvaluator eval(stat, data.covariates(), data.outcomes());
    result.t_obs = eval(data.observed_assignment());
  }
  const double scale = outcome_scale(data.outcomes());

  const long long m = options.draws;
  const auto chunks = static_cast<std::size_t>((m + kChunkSize - 1) / kChunkSize);
  struct ChunkTally {
    long long exceed = 0;
    long long failed = 0;
    long long tries = 0;
  };
  std::vector<ChunkTally> tallies(chunks);
  if (options.keep_draws) result.statistics.assign(static_cast<std::size_t>(m), std::nan(""));

  parallel_for(chunks, options.threads, [&](std::size_t c) {
    RandomStream rng = RandomStream::derive(seed, {static_cast<std::uint64_t>(c)});
    ChunkSampler source(sampler, data, balance ? &*balance : nullptr, strata_counts);
    StatisticEvaluator eval(stat, data.covariates(), data.outcomes());
    const long long begin = static_cast<long long>(c) * kChunkSize;
    const long long end = std::min(m, begin + kChunkSize);
    ChunkTally& tally = tallies[c];
    for (long long d = begin; d < end; ++d) {
      const auto treated = source.draw(rng, tally.tries);
      double t = 0.0;
      try {
        if (needs_assignment) {
          const Assignment w = Assignment::from_treated(data.units(), treated);
          t = eval(w, treated);
        } else {
          t = eval(data.observed_assignment(), treated);
        }
      } catch (...) {
        if (!is_statistic_failure(std::current_exception())) throw;
        ++tally.failed;
        continue;
      }
      if (at_least_as_extreme(t, result.t_obs, scale)) ++tally.exceed;
      if (options.keep_draws) result.statistics[static_cast<std::size_t>(d)] = t;
    }
  });

  long long tries = 0;
  for (const auto& t : tallies) {
    result.exceed += t.exceed;
    result.diagnostics.failed_draws += t.failed;
    tries += t.tries;
  }
  const long long failed = result.diagnostics.failed_draws;
  if (static_cast<double>(failed) > options.max_failure_fraction * static_cast<double>(m) || failed == m)
    throw DrawFailureError(failed, m);

  result.draws = m - failed;
  result.p_value = options.add_one ? static_cast<double>(result.exceed + 1) / static_cast<double>(result.draws + 1)
                                   : static_cast<double>(result.exceed) / static_cast<double>(result.draws);
  result.diagnostics.tries = tries;
  result.diagnostics.acceptance_rate = static_cast<double>(m) / static_cast<double>(tries);
  if (options.keep_draws && failed > 0)
    std::erase_if(result.statistics, [](double v) { return std::isnan(v); });
  result.diagnostics.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

double exact_pvalue_enumerate(const ExperimentData& data, const StatisticSpec& stat,
                              const std::optional<BalanceCriterion>& filter, double condition_cap) {
  const int n = data.units();
  const int k = data.treated_count();
  if (binomial(n, k) > kEnumerationCap)
    throw TooLargeError("C(" + std::to_string(n) + ", " + std::to_string(k) + ") exceeds the enumeration cap");

  std::optional<CovariateBalance> balance;
  if (filter) {
    filter->validate(data.covariate_count());
    balance.emplace(data.covariates(), filter->tiers, condition_cap);
  }
  StatisticEvaluator eval(stat, data.covariates(), data.outcomes());
  const double t_obs = eval(data.observed_assignment());
  const double scale = outcome_scale(data.outcomes());

  std::vector<int> combo(static_cast<std::size_t>(k));
  std::iota(combo.begin(), combo.end(), 0);
  CovariateBalance::Workspace ws;
  long long valid = 0;
  long long exceed = 0;
  while (true) {
    if (!balance || balance->accepts(combo, *filter, ws)) {
      try {
        const Assignment w = Assignment::from_treated(n, combo);
        const double t = eval(w, combo);
        ++valid;
        if (at_least_as_extreme(t, t_obs, scale)) ++exceed;
      } catch (...) {
        if (!is_statistic_failure(std::current_exception())) throw;
      }
    }
    // Next combination in lexicographic order.
    int i = k - 1;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++combo[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
  }
  if (valid == 0) throw InvalidDesignError("no assignment in the reference set admits the statistic");
  return static_cast<double>(exceed) / static_cast<double>(valid);
}

}  // namespace crt
