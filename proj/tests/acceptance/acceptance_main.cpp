// Acceptance suite: one PASS/FAIL line per criterion, with the measured values.
//
//   crt_acceptance [--threads N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "crt/balance.hpp"
#include "crt/bounds.hpp"
#include "crt/engine.hpp"
#include "crt/error.hpp"
#include "crt/study.hpp"

namespace {

using namespace crt;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 20190101;
int g_threads = 1;

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += "  FAILED: " + what + "\n";
    }
  }
  void note(const std::string& what) { detail += "  " + what + "\n"; }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string rate(double r, double se) { return fmt("%.3f", r) + " (se " + fmt("%.3f", se) + ")"; }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Matrix random_matrix(int n, int p, RandomStream& rng) {
  Matrix x(n, p);
  std::normal_distribution<double> normal;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = normal(rng);
  return x;
}

Vector random_vector(int n, RandomStream& rng) {
  Vector v(n);
  std::normal_distribution<double> normal;
  for (int i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

// Brute-force p-value over bit masks: every assignment with the observed
// treated count in each stratum.
double brute_force_pvalue(const Vector& y, const Assignment& w_obs, const std::vector<int>& strata,
                          const std::function<double(const Assignment&)>& stat) {
  const int n = w_obs.size();
  const int s_count = *std::max_element(strata.begin(), strata.end()) + 1;
  std::vector<int> obs_counts(static_cast<std::size_t>(s_count), 0);
  for (int i = 0; i < n; ++i) obs_counts[static_cast<std::size_t>(strata[static_cast<std::size_t>(i)])] += w_obs[i];
  const double t_obs = std::abs(stat(w_obs));
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(y(i)));
  long long total = 0, exceed = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<int> counts(static_cast<std::size_t>(s_count), 0);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      bits[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
      counts[static_cast<std::size_t>(strata[static_cast<std::size_t>(i)])] += bits[static_cast<std::size_t>(i)];
    }
    if (counts != obs_counts) continue;
    ++total;
    if (std::abs(stat(Assignment(bits))) >= t_obs - 1e-10 * (t_obs + scale)) ++exceed;
  }
  return static_cast<double>(exceed) / static_cast<double>(total);
}

double treated_minus_control(const Vector& y, const Assignment& w) {
  double st = 0, sc = 0;
  for (int i = 0; i < w.size(); ++i) (w.treated(i) ? st : sc) += y(i);
  return st / w.treated_count() - sc / w.control_count();
}

Outcome oracle_equivalence() {
  Outcome out;
  const auto start = Clock::now();
  const long long m = 100'000;
  TestOptions opts;
  opts.draws = m;
  opts.threads = g_threads;
  int within = 0, total = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    RandomStream rng = RandomStream::derive(kSeed, {100, static_cast<std::uint64_t>(inst)});
    const int n = inst % 2 ? 12 : 10;
    const int n_t = n / 2 - (inst % 3 == 0 ? 1 : 0);
    const int p = 1 + inst % 2;
    const Matrix x = random_matrix(n, p, rng);
    Vector y = random_vector(n, rng);
    const Assignment w_obs = draw_complete(n, n_t, rng);
    const ExperimentData data(x, w_obs, y);

    auto compare = [&](const char* sampler, double exact, double mc) {
      const double se = std::sqrt(exact * (1 - exact) / static_cast<double>(m));
      const double z = se > 0 ? std::abs(mc - exact) / se : (mc == exact ? 0.0 : INFINITY);
      worst = std::max(worst, z);
      ++total;
      if (z <= 3.0) {
        ++within;
      } else {
        out.note(std::string(sampler) + " instance " + std::to_string(inst) + ": exact " + fmt("%.5f", exact) +
                 " mc " + fmt("%.5f", mc) + " z " + fmt("%.2f", z));
      }
    };

    // Complete randomization: the library enumerator checked against bit masks first.
    const std::vector<int> one_stratum(static_cast<std::size_t>(n), 0);
    const double exact_complete = exact_pvalue_enumerate(data, MeanDifference{});
    const double brute_complete =
        brute_force_pvalue(y, w_obs, one_stratum, [&](const Assignment& w) { return treated_minus_control(y, w); });
    out.check(exact_complete == brute_complete, "enumerator disagrees with bit-mask oracle on instance " +
                                                    std::to_string(inst));
    compare("complete",
            exact_complete,
            randomization_pvalue(data, MeanDifference{}, CompleteRandomization{}, opts, 1000 + inst).p_value);

    // Within strata: two or three strata, oracle by bit masks.
    std::vector<int> strata(static_cast<std::size_t>(n));
    const int s_count = 2 + inst % 2;
    for (int i = 0; i < n; ++i) strata[static_cast<std::size_t>(i)] = i % s_count;
    const double exact_strata =
        brute_force_pvalue(y, w_obs, strata, [&](const Assignment& w) { return treated_minus_control(y, w); });
    compare("strata", exact_strata,
            randomization_pvalue(data, MeanDifference{}, WithinStrata{StratumLabels(strata)}, opts, 2000 + inst)
                .p_value);

    // Conditional on Procedure 1 bounds.
    const CovariateBalance balance(x, TierSpec::single(p));
    BoundsConfig cfg;
    cfg.procedure = BoundsProcedure::Bin;
    cfg.bins = 4;
    cfg.reference_draws = 500;
    RandomStream bound_rng = RandomStream::derive(kSeed, {101, static_cast<std::uint64_t>(inst)});
    const BuiltCriterion built = build_tier_criterion(balance, w_obs, cfg, bound_rng);
    const double exact_cond = exact_pvalue_enumerate(data, MeanDifference{}, built.criterion);
    compare("conditional", exact_cond,
            randomization_pvalue(data, MeanDifference{}, ConditionalOnBalance{built.criterion}, opts, 3000 + inst)
                .p_value);
  }
  const double secs = seconds_since(start);
  out.note(std::to_string(within) + "/" + std::to_string(total) + " comparisons within 3 MC standard errors; max |z| " +
           fmt("%.2f", worst) + "; " + fmt("%.1f", secs) + " s");
  out.check(within == total, "every comparison within 3 standard errors");
  out.check(secs < 300.0, "runtime under 5 minutes");
  return out;
}

StudyConfig base_config() {
  StudyConfig cfg;
  cfg.seed = kSeed;
  cfg.replications = 1000;
  cfg.draws = 500;
  cfg.threads = g_threads;
  return cfg;
}

std::vector<ProcedureSpec> labels(std::initializer_list<const char*> names) {
  std::vector<ProcedureSpec> out;
  for (const char* n : names) out.push_back(ProcedureSpec::parse(n));
  return out;
}

Outcome unconditional_validity() {
  Outcome out;
  const auto start = Clock::now();
  StudyConfig cfg = base_config();
  cfg.betas = {0.0, 1.5, 3.0};
  cfg.taus = {0.0};
  cfg.procedures = labels({"uncond_sd", "uncond_int", "cond_sd_T1_pa0.1", "cond_sd_T2_pa0.1", "cond_sd_T4_pa0.1",
                           "cond_sd_T4_pa0.25", "cond_sd_T4_pa0.5", "cond_int_T4_pa0.1", "cond_sd_T4_pa0.1_bin",
                           "cem_quantile_G2", "cem_quantile_G3", "cem_quantile_G4", "cem_sturges", "cem_auto_G2",
                           "cem_auto_G3", "cem_auto_G4"});
  const PowerTable table = run_power_study(cfg);
  const double secs = seconds_since(start);
  for (const auto& r : table.rows) {
    const bool ok = r.reject_rate >= 0.03 && r.reject_rate <= 0.07;
    out.note(std::string(ok ? "ok  " : "OUT ") + "beta " + fmt("%.1f", r.beta) + " " + r.procedure.label() + ": " +
             rate(r.reject_rate, r.mc_se) + (r.failed ? " failed " + std::to_string(r.failed) : ""));
    out.check(ok, r.procedure.label() + " at beta " + fmt("%.1f", r.beta) + " rejects at " + fmt("%.3f", r.reject_rate));
  }
  out.note(fmt("%.1f", secs) + " s");
  out.check(secs < 1800.0, "runtime under 30 minutes");
  return out;
}

// Power ordering of conditional vs unconditional tests at beta = 3.
void check_power_ordering(Outcome& out, const PowerTable& table, OutcomeModel model, const Design& design,
                          const std::string& tag) {
  for (double tau : {0.4, 0.5, 0.6}) {
    const auto* sd = table.find(model, 3.0, tau, design, "uncond_sd");
    const auto* cond = table.find(model, 3.0, tau, design, "cond_sd_T4_pa0.1");
    const auto* in = table.find(model, 3.0, tau, design, "uncond_int");
    if (!sd || !cond || !in) {
      out.check(false, tag + " missing rows at tau " + fmt("%.1f", tau));
      continue;
    }
    const double gain = cond->reject_rate - sd->reject_rate;
    const double gap = std::abs(cond->reject_rate - in->reject_rate);
    out.note(tag + " tau " + fmt("%.1f", tau) + ": sd " + rate(sd->reject_rate, sd->mc_se) + ", cond " +
             rate(cond->reject_rate, cond->mc_se) + ", int " + rate(in->reject_rate, in->mc_se) + "; cond-sd " +
             fmt("%+.3f", gain) + ", |cond-int| " + fmt("%.3f", gap));
    out.check(gain >= 0.05, tag + " tau " + fmt("%.1f", tau) + ": cond - sd = " + fmt("%.3f", gain) + " < 0.05");
    out.check(gap <= 0.07, tag + " tau " + fmt("%.1f", tau) + ": |cond - int| = " + fmt("%.3f", gap) + " > 0.07");
  }
}

PowerTable headline_table() {
  StudyConfig cfg = base_config();
  cfg.betas = {3.0};
  cfg.taus = {0.4, 0.5, 0.6};
  cfg.procedures = labels({"uncond_sd", "cond_sd_T4_pa0.1", "uncond_int", "cem_quantile_G2"});
  return run_power_study(cfg);
}

Outcome power_ordering(const PowerTable& table) {
  Outcome out;
  check_power_ordering(out, table, OutcomeModel::MainLinear, Design{}, "main_linear 50x50");
  return out;
}

Outcome tier_monotonicity(const PowerTable& headline) {
  Outcome out;
  StudyConfig cfg = base_config();
  cfg.betas = {3.0};
  cfg.taus = {0.5};
  cfg.procedures = labels({"cond_sd_T1_pa0.1", "cond_sd_T2_pa0.1", "cond_sd_T4_pa0.25", "cond_sd_T4_pa0.5"});
  PowerTable table = run_power_study(cfg);
  const auto* t4 = headline.find(OutcomeModel::MainLinear, 3.0, 0.5, Design{}, "cond_sd_T4_pa0.1");
  if (!t4) {
    out.check(false, "missing T4 pa0.1 row");
    return out;
  }
  table.rows.push_back(*t4);
  auto get = [&](const char* label) { return table.find(OutcomeModel::MainLinear, 3.0, 0.5, Design{}, label); };
  auto chain = [&](const std::vector<const char*>& order, const std::string& what) {
    std::string line = what + ":";
    for (const char* l : order) line += std::string(" ") + l + " " + rate(get(l)->reject_rate, get(l)->mc_se);
    out.note(line);
    for (std::size_t i = 1; i < order.size(); ++i) {
      const auto* a = get(order[i - 1]);
      const auto* b = get(order[i]);
      const double se = std::sqrt(a->mc_se * a->mc_se + b->mc_se * b->mc_se);
      out.check(b->reject_rate >= a->reject_rate - se, std::string(order[i]) + " " + fmt("%.3f", b->reject_rate) +
                                                           " below " + order[i - 1] + " " +
                                                           fmt("%.3f", a->reject_rate) + " by more than one se");
    }
  };
  chain({"cond_sd_T1_pa0.1", "cond_sd_T2_pa0.1", "cond_sd_T4_pa0.1"}, "T = 1, 2, 4 at pa 0.1");
  chain({"cond_sd_T4_pa0.5", "cond_sd_T4_pa0.25", "cond_sd_T4_pa0.1"}, "pa = 0.5, 0.25, 0.1 at T 4");
  return out;
}

double spearman_with_index(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  double mean = (static_cast<double>(n) + 1.0) / 2.0, sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = static_cast<double>(i + 1) - mean;
    const double b = ranks[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
}

Outcome validity_deciles() {
  Outcome out;
  StudyConfig cfg = base_config();
  cfg.betas = {3.0};
  cfg.taus = {0.0};
  cfg.assignments = 10000;
  cfg.procedures = labels({"uncond_sd", "cond_sd_T4_pa0.1", "uncond_int"});
  const DecileTable table = run_conditional_validity_study(cfg);
  for (const char* label : {"uncond_sd", "cond_sd_T4_pa0.1", "uncond_int"}) {
    const auto r = table.rates(OutcomeModel::MainLinear, 3.0, label, Binning::Raw);
    std::string line = std::string(label) + ":";
    for (double v : r) line += " " + fmt("%.3f", v);
    out.note(line);
    if (r.size() != 10) {
      out.check(false, std::string(label) + " has " + std::to_string(r.size()) + " deciles");
      continue;
    }
    if (std::string(label) == "uncond_sd") {
      const double rho = spearman_with_index(r);
      out.note("  spearman " + fmt("%.3f", rho) + ", top decile " + fmt("%.3f", r.back()));
      out.check(rho >= 0.9, "uncond_sd spearman " + fmt("%.3f", rho) + " < 0.9");
      out.check(r.back() >= 0.10, "uncond_sd top decile " + fmt("%.3f", r.back()) + " < 0.10");
    } else {
      for (std::size_t d = 0; d < r.size(); ++d)
        out.check(r[d] >= 0.02 && r[d] <= 0.08,
                  std::string(label) + " decile " + std::to_string(d + 1) + " rate " + fmt("%.3f", r[d]));
    }
  }
  return out;
}

Outcome cem_discards() {
  Outcome out;
  const auto s = run_cem_discard_study(OutcomeModel::MainLinear, Design{}, {2, 3, 4}, 1000, kSeed);
  const double target[] = {4, 54, 88};
  const double tol[] = {3, 6, 6};
  for (std::size_t i = 0; i < s.size(); ++i) {
    out.note("G " + std::to_string(s[i].groups) + ": mean discarded " + fmt("%.2f", s[i].mean_discarded) + " (sd " +
             fmt("%.2f", s[i].sd_discarded) + ", all pruned " + std::to_string(s[i].all_pruned) + ")");
    out.check(std::abs(s[i].mean_discarded - target[i]) <= tol[i],
              "G " + std::to_string(s[i].groups) + " mean " + fmt("%.2f", s[i].mean_discarded) + " outside " +
                  fmt("%.0f", target[i]) + " +- " + fmt("%.0f", tol[i]));
  }
  return out;
}

Outcome cem_power_position(const PowerTable& table) {
  Outcome out;
  for (double tau : {0.4, 0.5, 0.6}) {
    const auto* sd = table.find(OutcomeModel::MainLinear, 3.0, tau, Design{}, "uncond_sd");
    const auto* cem = table.find(OutcomeModel::MainLinear, 3.0, tau, Design{}, "cem_quantile_G2");
    const auto* cond = table.find(OutcomeModel::MainLinear, 3.0, tau, Design{}, "cond_sd_T4_pa0.1");
    out.note("tau " + fmt("%.1f", tau) + ": sd " + rate(sd->reject_rate, sd->mc_se) + ", cem G2 " +
             rate(cem->reject_rate, cem->mc_se) + ", cond " + rate(cond->reject_rate, cond->mc_se));
    out.check(cem->reject_rate > sd->reject_rate, "tau " + fmt("%.1f", tau) + ": cem not above uncond_sd");
    out.check(cem->reject_rate < cond->reject_rate, "tau " + fmt("%.1f", tau) + ": cem not below conditional");
  }
  return out;
}

Outcome dgp_diagnostics() {
  Outcome out;
  struct Case {
    OutcomeModel model;
    double lo, hi;
  };
  for (const Case c : {Case{OutcomeModel::MainLinear, 0.68, 0.78}, Case{OutcomeModel::MisspecModerate, 0.30, 0.46},
                       Case{OutcomeModel::MisspecNone, 0.02, 0.08}}) {
    const double r2 = mean_r_squared(c.model, 3.0, 100, 200, kSeed);
    const std::string name(model_name(c.model));
    out.note(name + ": mean R^2 " + fmt("%.4f", r2) + " in [" + fmt("%.2f", c.lo) + ", " + fmt("%.2f", c.hi) + "]");
    out.check(r2 >= c.lo && r2 <= c.hi, name + " mean R^2 " + fmt("%.4f", r2));
  }
  return out;
}

Outcome robustness() {
  Outcome out;
  struct Case {
    OutcomeModel model;
    Design design;
  };
  for (const Case c : {Case{OutcomeModel::PosNeg, Design{}}, Case{OutcomeModel::Heterogeneous, Design{}},
                       Case{OutcomeModel::MixedDistributions, Design{}}, Case{OutcomeModel::MainLinear, Design{25, 75}}}) {
    StudyConfig cfg = base_config();
    cfg.models = {c.model};
    cfg.designs = {c.design};
    cfg.betas = {3.0};
    cfg.taus = {0.4, 0.5, 0.6};
    cfg.procedures = labels({"uncond_sd", "cond_sd_T4_pa0.1", "uncond_int"});
    const PowerTable table = run_power_study(cfg);
    check_power_ordering(out, table, c.model, c.design, std::string(model_name(c.model)) + " " + c.design.label());
  }
  return out;
}

Outcome property_suite() {
  Outcome out;
  RandomStream rng = RandomStream::derive(kSeed, {200});

  // Mahalanobis affine invariance.
  {
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      const Matrix x = random_matrix(60, 4, rng);
      Matrix a = random_matrix(4, 4, rng);
      a.diagonal().array() += 4.0;
      const Eigen::RowVectorXd b = random_matrix(1, 4, rng).row(0) * 5.0;
      const Matrix z = (x * a.transpose()).rowwise() + b;
      const Assignment w = draw_complete(60, 30, rng);
      const double m1 = mahalanobis(x, w, covariance_inverse(x));
      const double m2 = mahalanobis(z, w, covariance_inverse(z));
      worst = std::max(worst, std::abs(m1 - m2) / std::max(1.0, m1));
    }
    out.note("affine invariance: max scaled difference " + fmt("%.2e", worst));
    out.check(worst <= 1e-8, "Mahalanobis affine invariance beyond 1e-8");
  }

  // Every accepted conditional draw satisfies its criterion.
  {
    const Matrix x = random_matrix(100, 4, rng);
    const CovariateBalance balance(x, TierSpec::contiguous(4, 4));
    const Assignment w_obs = draw_complete(100, 50, rng);
    BoundsConfig cfg;
    const BuiltCriterion built = build_tier_criterion(balance, w_obs, cfg, rng);
    int bad = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
      bad += !evaluate_criterion(balance, draw_conditional(balance, built.criterion, 50, 10'000'000, rng),
                                 built.criterion);
    bad += !evaluate_criterion(balance, w_obs, built.criterion);
    out.note("conditional draws violating the criterion: " + std::to_string(bad) + " of " + std::to_string(draws));
    out.check(bad == 0, "accepted draws outside the criterion");
  }

  // Procedure 2 corner cases.
  {
    std::vector<double> d(10);
    std::iota(d.begin(), d.end(), 1.0);
    const auto mid = procedure2_bounds(d, 0.4, 5.5);
    const auto low = procedure2_bounds(d, 0.4, 1.5);
    const auto high = procedure2_bounds(d, 0.4, 9.7);
    const bool ok = mid.lower == 4 && mid.upper == 7 && low.lower == 1 && low.upper == 4 && high.lower == 7 &&
                    high.upper == 10;
    out.note("procedure 2: (" + fmt("%g", mid.lower) + "," + fmt("%g", mid.upper) + ") (" + fmt("%g", low.lower) +
             "," + fmt("%g", low.upper) + ") (" + fmt("%g", high.lower) + "," + fmt("%g", high.upper) + ")");
    out.check(ok, "procedure 2 corner cases");
  }

  // Post-stratified statistic with a single stratum, and on categorical covariates.
  {
    double worst_s1 = 0.0, worst_cat = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
      const int n = 60;
      const Vector y = random_vector(n, rng);
      const Assignment w = draw_complete(n, 30, rng);
      worst_s1 = std::max(worst_s1, std::abs(tau_ps(y, w, StratumLabels(std::vector<int>(n, 0))) - tau_sd(y, w)));

      // Two binary covariates saturated into four cells.
      std::vector<int> cell(static_cast<std::size_t>(n));
      Matrix x = Matrix::Zero(n, 3);
      for (int i = 0; i < n; ++i) {
        const int c = i % 4;
        cell[static_cast<std::size_t>(i)] = c;
        if (c > 0) x(i, c - 1) = 1.0;
      }
      const StratumLabels labels(cell);
      const Assignment ws = draw_within_strata(labels, std::vector<int>{7, 8, 7, 8}, rng);
      worst_cat = std::max(worst_cat, std::abs(tau_ps(y, ws, labels) - tau_int(y, ws, x)));
    }
    out.note("tau_ps - tau_sd at S=1: " + fmt("%.2e", worst_s1) + "; tau_ps - tau_int categorical: " +
             fmt("%.2e", worst_cat));
    out.check(worst_s1 == 0.0, "tau_ps differs from tau_sd with one stratum");
    out.check(worst_cat <= 1e-8, "tau_ps differs from tau_int on categorical covariates");
  }

  // Power tables do not depend on the thread count.
  {
    StudyConfig cfg = base_config();
    cfg.replications = 40;
    cfg.draws = 200;
    cfg.betas = {3.0};
    cfg.taus = {0.0, 0.5};
    cfg.procedures = labels({"uncond_sd", "cond_sd_T4_pa0.1", "uncond_int", "cem_quantile_G2"});
    cfg.threads = 1;
    const PowerTable a = run_power_study(cfg);
    cfg.threads = 4;
    const PowerTable b = run_power_study(cfg);
    bool same = a.rows.size() == b.rows.size();
    for (std::size_t i = 0; same && i < a.rows.size(); ++i)
      same = a.rows[i].reject_rate == b.rows[i].reject_rate && a.rows[i].replications == b.rows[i].replications;
    out.note(std::string("power table with 1 and 4 threads: ") + (same ? "identical" : "different"));
    out.check(same, "power table depends on thread count");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  g_threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--threads") g_threads = std::max(1, std::atoi(argv[i + 1]));

  int failures = 0;
  auto report = [&](const char* name, const std::function<Outcome()>& fn) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail += std::string("  FAILED: exception: ") + e.what() + "\n";
    }
    failures += !o.pass;
    std::printf("%s  %s (%.1f s)\n%s", o.pass ? "PASS" : "FAIL", name, seconds_since(start), o.detail.c_str());
    std::fflush(stdout);
  };

  std::printf("acceptance suite, %d thread(s), master seed %llu\n", g_threads,
              static_cast<unsigned long long>(kSeed));
  report("oracle equivalence", oracle_equivalence);
  report("unconditional validity", unconditional_validity);
  PowerTable headline;
  report("power ordering at beta=3", [&] {
    headline = headline_table();
    return power_ordering(headline);
  });
  report("tier/acceptance monotonicity", [&] { return tier_monotonicity(headline); });
  report("conditional validity deciles", validity_deciles);
  report("CEM discard counts", cem_discards);
  report("CEM power position", [&] { return cem_power_position(headline); });
  report("DGP diagnostics", dgp_diagnostics);
  report("appendix robustness", robustness);
  report("property suite", property_suite);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
