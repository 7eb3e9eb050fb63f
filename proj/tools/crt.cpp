// crt: conditional randomization tests and the simulation studies.
//
//   crt test --data exp.csv --statistic sd --sampler conditional --tiers 4 --pa 0.1 --out result.json
//   crt power --config study.cfg --out power.csv
//   crt validity --config study.cfg --out deciles.csv
//   crt simulate --model main_linear --beta 3 --tau 0.5 --out exp.csv

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crt/bounds.hpp"
#include "crt/cem.hpp"
#include "crt/csv_io.hpp"
#include "crt/engine.hpp"
#include "crt/error.hpp"
#include "crt/parallel.hpp"
#include "crt/study.hpp"
#include "crt/study_io.hpp"

namespace {

using json = nlohmann::json;

struct TestArgs {
  std::string data;
  std::string statistic = "sd";
  std::string sampler = "complete";
  std::string tiers = "1";
  double pa = 0.1;
  std::vector<double> per_tier_pa;
  std::string procedure = "neighborhood";
  int reference_draws = 1000;
  std::vector<double> cutpoints;
  int bins = 0;
  long long draws = 1000;
  std::uint64_t seed = 1;
  bool add_one = false;
  int threads = 1;
  std::string cem_mode = "quantile";
  int cem_groups = 2;
  bool prune = false;
  std::string out;
};

crt::TierSpec parse_tiers(const std::string& text, int covariates) {
  const json v = json::parse(text, nullptr, false);
  if (v.is_number_integer()) return crt::TierSpec::contiguous(covariates, v.get<int>());
  if (v.is_array()) {
    try {
      return crt::TierSpec::from_one_based(v.get<std::vector<std::vector<int>>>());
    } catch (const json::exception&) {
    }
  }
  throw crt::SchemaError("--tiers must be a tier count or a list of 1-based index lists, e.g. [[1,2],[3,4]]");
}

crt::StratumLabels cem_strata(const TestArgs& a, const crt::Matrix& x) {
  if (a.cem_mode == "sturges") return crt::coarsen(x, crt::CoarseningSpec::sturges(x));
  if (a.cem_mode == "auto") return crt::coarsen(x, crt::CoarseningSpec::equal_width(a.cem_groups, x));
  return crt::coarsen(x, crt::CoarseningSpec::quantile(a.cem_groups, static_cast<int>(x.cols())));
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw crt::IoError("cannot write " + path);
  out << j.dump(2) << '\n';
}

int run_test(const TestArgs& a) {
  crt::ExperimentData data = crt::read_experiment_csv(a.data);
  const int p = data.covariate_count();
  json config = {{"data", a.data},     {"statistic", a.statistic}, {"sampler", a.sampler},
                 {"draws", a.draws},   {"add_one", a.add_one},     {"threads", a.threads}};

  std::optional<crt::StratumLabels> strata;
  if (a.statistic == "ps" || a.sampler == "strata") {
    strata = cem_strata(a, data.covariates());
    config["cem_mode"] = a.cem_mode;
    if (a.cem_mode != "sturges") config["cem_G"] = a.cem_groups;
    config["prune"] = a.prune;
  }
  int retained = data.units();
  if (strata && a.prune) {
    const auto kept = crt::cem_prune(*strata, data.observed_assignment());
    data = data.subset(kept);
    strata = strata->subset(kept);
    retained = static_cast<int>(kept.size());
  }

  crt::StatisticSpec stat;
  if (a.statistic == "sd") {
    stat = crt::MeanDifference{};
  } else if (a.statistic == "ps") {
    stat = crt::PostStratified{*strata};
  } else {
    stat = crt::RegressionInteraction{};
  }

  crt::TestOptions opts;
  opts.draws = a.draws;
  opts.add_one = a.add_one;
  opts.threads = a.threads;

  json result;
  crt::SamplerSpec sampler = crt::CompleteRandomization{};
  std::uint64_t test_seed = a.seed;
  if (a.sampler == "strata") {
    sampler = crt::WithinStrata{*strata};
  } else if (a.sampler == "conditional") {
    crt::BoundsConfig cfg;
    cfg.procedure = a.procedure == "bin" ? crt::BoundsProcedure::Bin : crt::BoundsProcedure::Neighborhood;
    cfg.reference_draws = a.reference_draws;
    cfg.acceptance = a.pa;
    if (!a.per_tier_pa.empty()) cfg.per_tier_acceptance = a.per_tier_pa;
    cfg.cutpoints = a.cutpoints;
    cfg.bins = a.bins;
    const crt::TierSpec tiers = parse_tiers(a.tiers, p);
    const crt::CovariateBalance balance(data.covariates(), tiers);
    crt::RandomStream bound_rng = crt::RandomStream::derive(a.seed, {0});
    const crt::BuiltCriterion built = crt::build_tier_criterion(balance, data.observed_assignment(), cfg, bound_rng);
    test_seed = crt::RandomStream::derive(a.seed, {1})();
    sampler = crt::ConditionalOnBalance{built.criterion};

    json tiers_json = json::array();
    for (std::size_t t = 0; t < built.tiers.size(); ++t) {
      std::vector<int> one_based;
      for (int j : tiers.tiers[t]) one_based.push_back(j + 1);
      const auto& b = built.criterion.bounds[t];
      tiers_json.push_back({{"covariates", one_based},
                            {"m_obs", built.tiers[t].observed_distance},
                            {"b_lower", b.lower},
                            {"b_upper", b.upper},
                            {"tier_pa", built.tiers[t].tier_acceptance},
                            {"sign_acceptance_rate", built.tiers[t].sign_acceptance_rate},
                            {"widened", built.tiers[t].widened}});
    }
    result["tiers"] = tiers_json;
    config["tiers"] = a.tiers;
    config["pa"] = a.pa;
    if (!a.per_tier_pa.empty()) config["per_tier_pa"] = a.per_tier_pa;
    config["procedure"] = a.procedure;
    config["D"] = a.reference_draws;
    if (cfg.procedure == crt::BoundsProcedure::Bin) {
      if (a.cutpoints.empty()) {
        config["bins"] = a.bins;
      } else {
        config["cutpoints"] = a.cutpoints;
      }
    }
  }

  const crt::TestResult r = crt::randomization_pvalue(data, stat, sampler, opts, test_seed);
  result["t_obs"] = r.t_obs;
  result["p_value"] = r.p_value;
  result["draws"] = r.draws;
  result["acceptance_rate"] = r.diagnostics.acceptance_rate;
  result["tries"] = r.diagnostics.tries;
  result["failed_draws"] = r.diagnostics.failed_draws;
  result["wall_seconds"] = r.diagnostics.wall_seconds;
  result["units"] = retained;
  result["seed"] = a.seed;
  result["config"] = config;
  write_json(result, a.out);
  return 0;
}

crt::StudyConfig load_study(const std::string& path, int threads) {
  crt::StudyConfig cfg = crt::read_config(path);
  if (threads > 0) cfg.threads = threads;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional randomization tests with tiered Mahalanobis balance criteria"};
  app.require_subcommand(1);

  TestArgs t;
  auto* test = app.add_subcommand("test", "Randomization p-value for one experiment");
  test->add_option("--data", t.data, "CSV with columns x1..xp,w,y")->required()->check(CLI::ExistingFile);
  test->add_option("--statistic", t.statistic, "Test statistic")->check(CLI::IsMember({"sd", "ps", "int"}));
  test->add_option("--sampler", t.sampler, "Reference distribution")
      ->check(CLI::IsMember({"complete", "strata", "conditional"}));
  test->add_option("--tiers", t.tiers, "Tier count T (contiguous tiers) or 1-based lists like [[1,2],[3,4]]");
  test->add_option("--pa", t.pa, "Overall acceptance probability")->check(CLI::Range(0.0, 1.0));
  test->add_option("--per-tier-pa", t.per_tier_pa, "Explicit acceptance probability per tier");
  test->add_option("--procedure", t.procedure, "Bounds procedure")->check(CLI::IsMember({"bin", "neighborhood"}));
  test->add_option("--D", t.reference_draws, "Sign-constrained reference draws per tier");
  test->add_option("--cutpoints", t.cutpoints, "Bin procedure cutpoints 0 ... inf");
  test->add_option("--bins", t.bins, "Bin procedure quantile bins when no cutpoints are given (0: round(1 / tier pa))");
  test->add_option("--draws", t.draws, "Monte Carlo draws M");
  test->add_option("--seed", t.seed, "Master seed");
  test->add_flag("--add-one", t.add_one, "Report (1 + #) / (1 + M)");
  test->add_option("--threads", t.threads, "Worker threads")->check(CLI::PositiveNumber);
  test->add_option("--cem-mode", t.cem_mode, "Strata for ps/strata")->check(CLI::IsMember({"quantile", "sturges", "auto"}));
  test->add_option("--cem-G", t.cem_groups, "Groups per covariate (quantile and auto modes)");
  test->add_flag("--prune", t.prune, "Drop units in strata lacking either arm");
  test->add_option("--out", t.out, "Result JSON (stdout when omitted)");

  std::string config_path;
  std::string out_path;
  int threads = 0;
  auto* power = app.add_subcommand("power", "Power study over a grid of outcome models");
  power->add_option("--config", config_path, "Study config")->required()->check(CLI::ExistingFile);
  power->add_option("--out", out_path, "Power CSV")->required();
  power->add_option("--threads", threads, "Override the config's thread count");

  auto* validity = app.add_subcommand("validity", "Rejection rates by Mahalanobis-distance decile");
  validity->add_option("--config", config_path, "Study config")->required()->check(CLI::ExistingFile);
  validity->add_option("--out", out_path, "Decile CSV")->required();
  validity->add_option("--threads", threads, "Override the config's thread count");

  std::string model = "main_linear";
  double beta = 3.0;
  double tau = 0.0;
  double sigma_tau = crt::kDefaultSigmaTau;
  int treated = 50;
  int control = 50;
  std::uint64_t sim_seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Write one simulated experiment as CSV");
  simulate->add_option("--model", model, "Outcome model");
  simulate->add_option("--beta", beta, "Covariate effect scale");
  simulate->add_option("--tau", tau, "Additive treatment effect");
  simulate->add_option("--sigma-tau", sigma_tau, "Effect heterogeneity (heterogeneous model)");
  simulate->add_option("--treated", treated, "Treated units");
  simulate->add_option("--control", control, "Control units");
  simulate->add_option("--seed", sim_seed, "Master seed");
  simulate->add_option("--out", out_path, "Experiment CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*test) return run_test(t);
    if (*power) {
      const auto cfg = load_study(config_path, threads);
      crt::write_power_csv(crt::run_power_study(cfg), std::filesystem::path(out_path));
      return 0;
    }
    if (*validity) {
      const auto cfg = load_study(config_path, threads);
      crt::write_decile_csv(crt::run_conditional_validity_study(cfg), std::filesystem::path(out_path));
      return 0;
    }
    if (*simulate) {
      crt::StudyConfig cfg;
      cfg.seed = sim_seed;
      cfg.sigma_tau = sigma_tau;
      const crt::OutcomeModel m = crt::parse_model(model);
      const crt::Population pop = crt::study_population(cfg, m, beta, tau, treated + control);
      crt::RandomStream rng = crt::RandomStream::derive(sim_seed, {0});
      const crt::Assignment w = crt::draw_complete(treated + control, treated, rng);
      const crt::ExperimentData data(pop.x, w, crt::observe(pop.po, w));
      crt::write_experiment_csv(data, std::filesystem::path(out_path));
      return 0;
    }
  } catch (const crt::Error& e) {
    std::cerr << "crt: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "crt: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
