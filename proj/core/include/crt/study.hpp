#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crt/dgp.hpp"
#include "crt/procedures.hpp"

namespace crt {

/// Numbers of treated and control units; N = treated + control.
struct Design {
  int treated = 50;
  int control = 50;

  int units() const noexcept { return treated + control; }
  /// "50x50"
  std::string label() const;
  static Design parse(const std::string& label);
  friend bool operator==(const Design&, const Design&) = default;
};

enum class Binning {
  Raw,          ///< Mahalanobis distance of the raw covariates
  Transformed,  ///< Mahalanobis distance of the covariate functions in the outcome model
};

std::string_view binning_name(Binning b);

struct StudyConfig {
  std::vector<OutcomeModel> models{OutcomeModel::MainLinear};
  std::vector<double> betas{0.0, 1.5, 3.0};
  std::vector<double> taus{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<Design> designs{Design{}};
  std::vector<ProcedureSpec> procedures;
  int replications = 500;
  long long draws = 500;
  double alpha = 0.05;
  std::uint64_t seed = 20190101;
  int threads = 1;
  double sigma_tau = kDefaultSigmaTau;
  /// A (cell, procedure) pair reports NA when more replications than this fraction fail.
  double max_failure_fraction = 0.01;

  // Conditional-validity study.
  int assignments = 10000;
  int deciles = 10;
  std::vector<Binning> binnings{Binning::Raw};

  /// The five tests of the main study.
  static std::vector<ProcedureSpec> default_procedures();
  void validate() const;
};

struct PowerRow {
  OutcomeModel model = OutcomeModel::MainLinear;
  double beta = 0.0;
  double tau = 0.0;
  Design design;
  ProcedureSpec procedure;
  int replications = 0;  ///< successful replications entering the rate
  long long draws = 0;
  double reject_rate = 0.0;  ///< NaN when the row was aborted
  double mc_se = 0.0;
  int failed = 0;
};

struct PowerTable {
  std::vector<PowerRow> rows;

  /// Row for the given cell and procedure label, or nullptr.
  const PowerRow* find(OutcomeModel model, double beta, double tau, const Design& design,
                       const std::string& label) const;
};

struct DecileRow {
  OutcomeModel model = OutcomeModel::MainLinear;
  double beta = 0.0;
  std::string procedure;
  int decile = 1;
  int replications = 0;
  double reject_rate = 0.0;
  double mc_se = 0.0;
  Binning binning = Binning::Raw;
};

struct DecileTable {
  std::vector<DecileRow> rows;

  /// Rates of one procedure and binning ordered by decile.
  std::vector<double> rates(OutcomeModel model, double beta, const std::string& procedure, Binning binning) const;
};

/// Fixed covariates and potential outcomes for one study cell. The population
/// stream is keyed by (seed, model) only, so X and the noise are shared by
/// every beta, tau and design of that model.
Population study_population(const StudyConfig& cfg, OutcomeModel model, double beta, double tau, int units);

/// Rejection rates over `replications` complete randomizations per cell.
PowerTable run_power_study(const StudyConfig& cfg);

/// tau = 0 for every configured model and beta, `assignments` complete
/// randomizations of the first configured design, binned into quantile groups
/// of the Mahalanobis distance.
DecileTable run_conditional_validity_study(const StudyConfig& cfg);

struct DiscardSummary {
  int groups = 0;
  int randomizations = 0;
  double mean_discarded = 0.0;
  double sd_discarded = 0.0;
  int all_pruned = 0;
};

/// Units discarded by prespecified-quantile CEM over complete randomizations
/// of one population.
std::vector<DiscardSummary> run_cem_discard_study(OutcomeModel model, const Design& design,
                                                  const std::vector<int>& groups, int randomizations,
                                                  std::uint64_t seed);

/// Mean over `seeds` populations of the R^2 of Y(0) on the raw covariates.
double mean_r_squared(OutcomeModel model, double beta, int units, int seeds, std::uint64_t seed);

}  // namespace crt
