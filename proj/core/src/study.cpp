#include "crt/study.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "crt/balance.hpp"
#include "crt/error.hpp"
#include "crt/parallel.hpp"

namespace crt {

namespace {

// Stream domains under the master seed.
enum Domain : std::uint64_t {
  kPopulation = 1,
  kAssignment = 2,
  kTest = 3,
  kValidityAssignment = 4,
  kValidityTest = 5,
  kDiscard = 6,
  kRSquared = 7,
};

constexpr std::int8_t kFailed = -1;

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v); }

std::uint64_t model_key(OutcomeModel m) { return static_cast<std::uint64_t>(m); }

std::uint64_t design_key(const Design& d) {
  return (static_cast<std::uint64_t>(d.treated) << 32) | static_cast<std::uint32_t>(d.control);
}

// FNV-1a, stable across platforms.
std::uint64_t label_key(const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct Tally {
  int ok = 0;
  int rejected = 0;
  int failed = 0;
};

void finish(const Tally& t, int attempted, double max_failure_fraction, int& replications, double& rate,
            double& se) {
  replications = t.ok;
  if (t.ok == 0 || t.failed > max_failure_fraction * attempted) {
    rate = std::numeric_limits<double>::quiet_NaN();
    se = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  rate = static_cast<double>(t.rejected) / t.ok;
  se = std::sqrt(rate * (1.0 - rate) / t.ok);
}

std::vector<PreparedProcedure> prepare(const std::vector<ProcedureSpec>& specs, const Matrix& x) {
  std::vector<PreparedProcedure> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.emplace_back(s, x);
  return out;
}

std::int8_t run_one(const PreparedProcedure& proc, const Assignment& w, const Vector& y, const TestOptions& opts,
                    std::uint64_t seed, double alpha) {
  try {
    return proc.run(w, y, opts, seed).p_value <= alpha ? 1 : 0;
  } catch (const Error&) {
    return kFailed;
  }
}

std::vector<ProcedureSpec> effective_procedures(const StudyConfig& cfg) {
  return cfg.procedures.empty() ? StudyConfig::default_procedures() : cfg.procedures;
}

}  // namespace

std::string Design::label() const { return std::to_string(treated) + "x" + std::to_string(control); }

Design Design::parse(const std::string& label) {
  const auto x = label.find('x');
  if (x == std::string::npos) throw SchemaError("design '" + label + "' is not of the form <treated>x<control>");
  try {
    std::size_t used = 0;
    Design d;
    d.treated = std::stoi(label.substr(0, x), &used);
    if (used != x) throw SchemaError("");
    d.control = std::stoi(label.substr(x + 1), &used);
    if (used != label.size() - x - 1) throw SchemaError("");
    return d;
  } catch (const std::exception&) {
    throw SchemaError("design '" + label + "' is not of the form <treated>x<control>");
  }
}

std::string_view binning_name(Binning b) { return b == Binning::Transformed ? "transformed" : "raw"; }

std::vector<ProcedureSpec> StudyConfig::default_procedures() {
  return {ProcedureSpec::parse("uncond_sd"), ProcedureSpec::parse("cond_sd_T4_pa0.1"),
          ProcedureSpec::parse("uncond_int"), ProcedureSpec::parse("cem_quantile_G2"),
          ProcedureSpec::parse("cem_sturges")};
}

void StudyConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw SchemaError("alpha must lie in (0, 1)");
  if (replications < 1) throw SchemaError("replications must be at least 1");
  if (draws < 1) throw SchemaError("draws must be at least 1");
  if (threads < 1) throw SchemaError("threads must be at least 1");
  if (models.empty() || betas.empty() || taus.empty() || designs.empty())
    throw SchemaError("models, betas, taus and designs must be non-empty");
  for (const auto& d : designs)
    if (d.treated < 1 || d.control < 1) throw SchemaError("design " + d.label() + " needs both arms");
  if (assignments < 1) throw SchemaError("validity.assignments must be at least 1");
  if (deciles < 1 || deciles > assignments) throw SchemaError("validity.deciles must lie in [1, assignments]");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
    throw SchemaError("max_failure_fraction must lie in [0, 1]");
  for (const auto& p : procedures) p.validate(kCovariates);
}

const PowerRow* PowerTable::find(OutcomeModel model, double beta, double tau, const Design& design,
                                 const std::string& label) const {
  for (const auto& r : rows)
    if (r.model == model && r.beta == beta && r.tau == tau && r.design == design && r.procedure.label() == label)
      return &r;
  return nullptr;
}

std::vector<double> DecileTable::rates(OutcomeModel model, double beta, const std::string& procedure,
                                       Binning binning) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.model == model && r.beta == beta && r.procedure == procedure && r.binning == binning) {
      if (static_cast<int>(out.size()) < r.decile) out.resize(static_cast<std::size_t>(r.decile));
      out[static_cast<std::size_t>(r.decile - 1)] = r.reject_rate;
    }
  return out;
}

Population study_population(const StudyConfig& cfg, OutcomeModel model, double beta, double tau, int units) {
  DgpSpec spec;
  spec.model = model;
  spec.beta = beta;
  spec.tau = tau;
  spec.units = units;
  if (model == OutcomeModel::Heterogeneous) spec.sigma_tau = cfg.sigma_tau;
  RandomStream rng = RandomStream::derive(cfg.seed, {kPopulation, model_key(model), static_cast<std::uint64_t>(units)});
  return generate(spec, rng);
}

PowerTable run_power_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto specs = effective_procedures(cfg);
  const auto p_count = specs.size();
  const auto r_count = static_cast<std::size_t>(cfg.replications);
  TestOptions opts;
  opts.draws = cfg.draws;
  opts.threads = 1;

  PowerTable table;
  for (const auto model : cfg.models) {
    for (const auto& design : cfg.designs) {
      const int n = design.units();
      const auto procs = prepare(specs, study_population(cfg, model, 0.0, 0.0, n).x);
      for (const double beta : cfg.betas) {
        for (const double tau : cfg.taus) {
          const Population pop = study_population(cfg, model, beta, tau, n);
          std::vector<std::int8_t> outcome(r_count * p_count, kFailed);
          parallel_for(r_count, cfg.threads, [&](std::size_t r) {
            const auto rep = static_cast<std::uint64_t>(r);
            RandomStream rng =
                RandomStream::derive(cfg.seed, {kAssignment, model_key(model), bits(beta), design_key(design), rep});
            const Assignment w = draw_complete(n, design.treated, rng);
            const Vector y = observe(pop.po, w);
            for (std::size_t p = 0; p < p_count; ++p) {
              const std::uint64_t test_seed = RandomStream::derive(
                  cfg.seed, {kTest, model_key(model), bits(beta), design_key(design), rep, label_key(specs[p].label())})();
              outcome[r * p_count + p] = run_one(procs[p], w, y, opts, test_seed, cfg.alpha);
            }
          });
          for (std::size_t p = 0; p < p_count; ++p) {
            Tally t;
            for (std::size_t r = 0; r < r_count; ++r) {
              const auto o = outcome[r * p_count + p];
              if (o == kFailed) {
                ++t.failed;
              } else {
                ++t.ok;
                t.rejected += o;
              }
            }
            PowerRow row;
            row.model = model;
            row.beta = beta;
            row.tau = tau;
            row.design = design;
            row.procedure = specs[p];
            row.draws = cfg.draws;
            row.failed = t.failed;
            finish(t, cfg.replications, cfg.max_failure_fraction, row.replications, row.reject_rate, row.mc_se);
            table.rows.push_back(row);
          }
        }
      }
    }
  }
  return table;
}

DecileTable run_conditional_validity_study(const StudyConfig& cfg) {
  cfg.validate();
  const auto specs = effective_procedures(cfg);
  const auto p_count = specs.size();
  const auto a_count = static_cast<std::size_t>(cfg.assignments);
  const Design design = cfg.designs.front();
  const int n = design.units();
  TestOptions opts;
  opts.draws = cfg.draws;
  opts.threads = 1;

  DecileTable table;
  for (const auto model : cfg.models) {
    const Matrix x = study_population(cfg, model, 0.0, 0.0, n).x;
    const auto procs = prepare(specs, x);
    std::vector<CovariateBalance> geometry;
    for (const auto b : cfg.binnings)
      geometry.emplace_back(b == Binning::Raw ? x : outcome_features(model, x), TierSpec::single(kCovariates));

    for (const double beta : cfg.betas) {
      const Population pop = study_population(cfg, model, beta, 0.0, n);
      std::vector<std::int8_t> outcome(a_count * p_count, kFailed);
      std::vector<std::vector<double>> distance(cfg.binnings.size(), std::vector<double>(a_count));
      parallel_for(a_count, cfg.threads, [&](std::size_t a) {
        const auto idx = static_cast<std::uint64_t>(a);
        RandomStream rng = RandomStream::derive(
            cfg.seed, {kValidityAssignment, model_key(model), bits(beta), design_key(design), idx});
        const Assignment w = draw_complete(n, design.treated, rng);
        for (std::size_t b = 0; b < geometry.size(); ++b) distance[b][a] = geometry[b].tier_distance(0, w);
        const Vector y = observe(pop.po, w);
        for (std::size_t p = 0; p < p_count; ++p) {
          const std::uint64_t test_seed = RandomStream::derive(
              cfg.seed, {kValidityTest, model_key(model), bits(beta), design_key(design), idx, label_key(specs[p].label())})();
          outcome[a * p_count + p] = run_one(procs[p], w, y, opts, test_seed, cfg.alpha);
        }
      });

      for (std::size_t b = 0; b < cfg.binnings.size(); ++b) {
        std::vector<std::size_t> order(a_count);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t i, std::size_t j) { return distance[b][i] < distance[b][j]; });
        std::vector<int> group(a_count);
        for (std::size_t k = 0; k < a_count; ++k)
          group[order[k]] = static_cast<int>(k * static_cast<std::size_t>(cfg.deciles) / a_count);

        for (std::size_t p = 0; p < p_count; ++p) {
          std::vector<Tally> tallies(static_cast<std::size_t>(cfg.deciles));
          std::vector<int> sizes(static_cast<std::size_t>(cfg.deciles), 0);
          for (std::size_t a = 0; a < a_count; ++a) {
            const auto g = static_cast<std::size_t>(group[a]);
            ++sizes[g];
            const auto o = outcome[a * p_count + p];
            if (o == kFailed) {
              ++tallies[g].failed;
            } else {
              ++tallies[g].ok;
              tallies[g].rejected += o;
            }
          }
          for (int d = 0; d < cfg.deciles; ++d) {
            DecileRow row;
            row.model = model;
            row.beta = beta;
            row.procedure = specs[p].label();
            row.decile = d + 1;
            row.binning = cfg.binnings[b];
            finish(tallies[static_cast<std::size_t>(d)], sizes[static_cast<std::size_t>(d)], cfg.max_failure_fraction,
                   row.replications, row.reject_rate, row.mc_se);
            table.rows.push_back(row);
          }
        }
      }
    }
  }
  return table;
}

std::vector<DiscardSummary> run_cem_discard_study(OutcomeModel model, const Design& design,
                                                  const std::vector<int>& groups, int randomizations,
                                                  std::uint64_t seed) {
  if (randomizations < 1) throw InvalidDesignError("need at least one randomization");
  StudyConfig cfg;
  cfg.seed = seed;
  const int n = design.units();
  const Matrix x = study_population(cfg, model, 0.0, 0.0, n).x;

  std::vector<DiscardSummary> out;
  for (const int g : groups) {
    const StratumLabels labels = coarsen(x, CoarseningSpec::quantile(g, static_cast<int>(x.cols())));
    DiscardSummary s;
    s.groups = g;
    s.randomizations = randomizations;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int r = 0; r < randomizations; ++r) {
      // Same assignments for every G, so discards can be compared pairwise.
      RandomStream rng = RandomStream::derive(seed, {kDiscard, model_key(model), design_key(design),
                                                     static_cast<std::uint64_t>(r)});
      const Assignment w = draw_complete(n, design.treated, rng);
      int discarded = n;
      try {
        discarded = n - static_cast<int>(cem_prune(labels, w).size());
      } catch (const AllPrunedError&) {
        ++s.all_pruned;
      }
      sum += discarded;
      sum_sq += static_cast<double>(discarded) * discarded;
    }
    s.mean_discarded = sum / randomizations;
    s.sd_discarded =
        randomizations > 1
            ? std::sqrt(std::max(0.0, (sum_sq - sum * sum / randomizations) / (randomizations - 1)))
            : 0.0;
    out.push_back(s);
  }
  return out;
}

double mean_r_squared(OutcomeModel model, double beta, int units, int seeds, std::uint64_t seed) {
  if (seeds < 1) throw InvalidDesignError("need at least one seed");
  double total = 0.0;
  for (int s = 0; s < seeds; ++s) {
    DgpSpec spec;
    spec.model = model;
    spec.beta = beta;
    spec.units = units;
    RandomStream rng = RandomStream::derive(seed, {kRSquared, model_key(model), static_cast<std::uint64_t>(s)});
    const Population pop = generate(spec, rng);
    total += linear_r_squared(pop.x, pop.po.y0);
  }
  return total / seeds;
}

}  // namespace crt
