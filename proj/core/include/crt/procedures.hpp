#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "crt/balance.hpp"
#include "crt/bounds.hpp"
#include "crt/cem.hpp"
#include "crt/engine.hpp"

namespace crt {

enum class ProcedureKind { Unconditional, Conditional, CemQuantile, CemSturges, CemEqualWidth };
enum class StatisticKind { MeanDiff, Interaction };

std::string_view kind_name(ProcedureKind kind);
std::string_view statistic_name(StatisticKind stat);

/// One randomization test of the simulation studies.
///
/// Labels: `uncond_sd`, `uncond_int`, `cond_sd_T4_pa0.1` (optionally with a
/// `_bin` suffix for bin bounds), `cond_int_T4_pa0.1`, `cem_quantile_G2`,
/// `cem_sturges`, `cem_auto_G3` (G equal-width bins over the observed range).
struct ProcedureSpec {
  ProcedureKind kind = ProcedureKind::Unconditional;
  StatisticKind statistic = StatisticKind::MeanDiff;
  int tiers = 4;
  double acceptance = 0.1;
  int groups = 2;
  BoundsProcedure bounds = BoundsProcedure::Neighborhood;
  int reference_draws = 1000;

  std::string label() const;
  /// Throws SchemaError on a malformed label.
  static ProcedureSpec parse(std::string_view label);
  void validate(int covariates) const;
};

struct ProcedureRun {
  double p_value = 1.0;
  double t_obs = 0.0;
  long long draws = 0;
  int retained = 0;
  /// CEM left no stratum with both arms: the reference set is {W_obs} alone and p = 1.
  bool degenerate = false;
  double acceptance_rate = 1.0;
};

/// A procedure bound to a fixed covariate matrix. Everything that depends on
/// X alone (tier inverses, CEM strata) is computed once here; `run` is const
/// and may be called concurrently.
class PreparedProcedure {
 public:
  PreparedProcedure(ProcedureSpec spec, const Matrix& x, double condition_cap = kDefaultConditionCap);

  const ProcedureSpec& spec() const noexcept { return spec_; }
  const std::optional<StratumLabels>& strata() const noexcept { return strata_; }

  /// Tests the sharp null for one observed experiment. `options.threads` is
  /// honored; callers parallelizing over replications should pass 1.
  ProcedureRun run(const Assignment& w_obs, const Vector& y_obs, const TestOptions& options, std::uint64_t seed) const;

 private:
  ProcedureSpec spec_;
  Matrix x_;
  double condition_cap_;
  std::optional<CovariateBalance> balance_;
  std::optional<StratumLabels> strata_;
};

}  // namespace crt
