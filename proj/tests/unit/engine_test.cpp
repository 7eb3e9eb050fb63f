#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "crt/bounds.hpp"
#include "crt/engine.hpp"
#include "crt/error.hpp"
#include "unit/helpers.hpp"

namespace {

using namespace crt;
using crt::testing::chi_square_uniform;
using crt::testing::make_assignment;
using crt::testing::mask_of;
using crt::testing::random_matrix;
using crt::testing::random_vector;

constexpr double kInf = std::numeric_limits<double>::infinity();

ExperimentData four_units(Vector y) {
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  return ExperimentData(x, make_assignment({1, 1, 0, 0}), std::move(y));
}

TestOptions draws(long long m, int threads = 1) {
  TestOptions o;
  o.draws = m;
  o.threads = threads;
  return o;
}

double mc_se(double p, long long m) { return std::sqrt(std::max(p * (1 - p), 1e-4) / static_cast<double>(m)); }

TEST(ExactPvalue, FourUnitExample) {
  const auto data = four_units((Vector(4) << 10, 10, 0, 0).finished());
  EXPECT_DOUBLE_EQ(exact_pvalue_enumerate(data, MeanDifference{}), 1.0 / 3.0);
  const auto r = randomization_pvalue(data, MeanDifference{}, CompleteRandomization{}, draws(60000), 1);
  EXPECT_NEAR(r.p_value, 1.0 / 3.0, 3 * mc_se(1.0 / 3.0, 60000));
  EXPECT_DOUBLE_EQ(r.t_obs, 10.0);
}

TEST(ExactPvalue, ConstantOutcomes) {
  const auto data = four_units(Vector::Constant(4, 2.5));
  EXPECT_DOUBLE_EQ(exact_pvalue_enumerate(data, MeanDifference{}), 1.0);
  EXPECT_DOUBLE_EQ(randomization_pvalue(data, MeanDifference{}, CompleteRandomization{}, draws(500), 2).p_value, 1.0);
}

TEST(ExactPvalue, FilterKeepingObservedAndComplement) {
  const auto data = four_units((Vector(4) << 3, 1, 4, 1).finished());
  BalanceCriterion crit;
  crit.tiers = TierSpec::single(1);
  crit.bounds = {TierBounds{2.0, 3.0}};
  crit.ref_signs = {-1};
  crit.enforce_signs = false;
  EXPECT_DOUBLE_EQ(exact_pvalue_enumerate(data, MeanDifference{}, crit), 1.0);
  const auto vacuous = BalanceCriterion::vacuous(TierSpec::single(1), 1);
  EXPECT_DOUBLE_EQ(exact_pvalue_enumerate(data, MeanDifference{}, vacuous),
                   exact_pvalue_enumerate(data, MeanDifference{}));
}

TEST(ExactPvalue, TooLarge) {
  RandomStream rng(41);
  const ExperimentData data(random_matrix(30, 1, rng), draw_complete(30, 15, rng), random_vector(30, rng));
  EXPECT_THROW(exact_pvalue_enumerate(data, MeanDifference{}), TooLargeError);
}

TEST(ExactPvalue, SuperUniformUnderSharpNull) {
  RandomStream rng(42);
  const int n = 10;
  const Matrix x = random_matrix(n, 1, rng);
  const Vector y = random_vector(n, rng);
  std::vector<double> ps;
  std::vector<int> combo(5);
  std::iota(combo.begin(), combo.end(), 0);
  while (true) {
    const ExperimentData data(x, Assignment::from_treated(n, combo), y);
    ps.push_back(exact_pvalue_enumerate(data, MeanDifference{}));
    int i = 4;
    while (i >= 0 && combo[static_cast<std::size_t>(i)] == n - 5 + i) --i;
    if (i < 0) break;
    ++combo[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < 5; ++j) combo[static_cast<std::size_t>(j)] = combo[static_cast<std::size_t>(j - 1)] + 1;
  }
  ASSERT_EQ(ps.size(), 252u);
  for (double alpha : {0.05, 0.1, 0.2}) {
    const auto hits = std::count_if(ps.begin(), ps.end(), [&](double p) { return p <= alpha; });
    EXPECT_LE(hits / 252.0, alpha);
  }
}

TEST(ExactPvalue, RelabelingInvariance) {
  RandomStream rng(43);
  const int n = 12;
  const Matrix x = random_matrix(n, 2, rng);
  const Vector y = random_vector(n, rng);
  const Assignment w = draw_complete(n, 6, rng);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix xp(n, 2);
  Vector yp(n);
  std::vector<std::uint8_t> wp(n);
  for (int i = 0; i < n; ++i) {
    xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    yp(i) = y(perm[static_cast<std::size_t>(i)]);
    wp[static_cast<std::size_t>(i)] = w[perm[static_cast<std::size_t>(i)]];
  }
  const ExperimentData a(x, w, y), b(xp, Assignment(wp), yp);
  EXPECT_DOUBLE_EQ(exact_pvalue_enumerate(a, MeanDifference{}), exact_pvalue_enumerate(b, MeanDifference{}));
  EXPECT_DOUBLE_EQ(exact_pvalue_enumerate(a, RegressionInteraction{}),
                   exact_pvalue_enumerate(b, RegressionInteraction{}));
}

TEST(RandomizationPvalue, MatchesEnumerationOnSmallInstances) {
  RandomStream rng(44);
  const long long m = 20000;
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 10;
    const ExperimentData data(random_matrix(n, 1, rng), draw_complete(n, 5, rng), random_vector(n, rng));
    const double exact = exact_pvalue_enumerate(data, MeanDifference{});
    const auto r = randomization_pvalue(data, MeanDifference{}, CompleteRandomization{}, draws(m), 100 + rep);
    EXPECT_NEAR(r.p_value, exact, 3.5 * mc_se(exact, m)) << rep;
  }
}

TEST(RandomizationPvalue, ConditionalMatchesFilteredEnumeration) {
  RandomStream rng(45);
  const int n = 12;
  const Matrix x = random_matrix(n, 1, rng);
  const ExperimentData data(x, draw_complete(n, 6, rng), random_vector(n, rng));
  const CovariateBalance balance(x, TierSpec::single(1));
  BoundsConfig cfg;
  cfg.procedure = BoundsProcedure::Bin;
  cfg.bins = 4;
  cfg.reference_draws = 400;
  const auto built = build_tier_criterion(balance, data.observed_assignment(), cfg, rng);
  const double exact = exact_pvalue_enumerate(data, MeanDifference{}, built.criterion);
  const long long m = 20000;
  const auto r = randomization_pvalue(data, MeanDifference{}, ConditionalOnBalance{built.criterion}, draws(m), 9);
  EXPECT_NEAR(r.p_value, exact, 3.5 * mc_se(exact, m));
}

TEST(RandomizationPvalue, AddOne) {
  const auto data = four_units((Vector(4) << 10, 10, 0, 0).finished());
  TestOptions o = draws(999);
  const auto plain = randomization_pvalue(data, MeanDifference{}, CompleteRandomization{}, o, 3);
  o.add_one = true;
  const auto one = randomization_pvalue(data, MeanDifference{}, CompleteRandomization{}, o, 3);
  EXPECT_DOUBLE_EQ(one.p_value, (1.0 + static_cast<double>(plain.exceed)) / 1000.0);
}

TEST(RandomizationPvalue, ThreadCountDoesNotChangeResult) {
  RandomStream rng(46);
  const int n = 40;
  const Matrix x = random_matrix(n, 4, rng);
  const ExperimentData data(x, draw_complete(n, 20, rng), random_vector(n, rng));
  std::vector<int> cells(n);
  for (int i = 0; i < n; ++i) cells[static_cast<std::size_t>(i)] = i % 4;
  const CovariateBalance balance(x, TierSpec::contiguous(4, 2));
  BoundsConfig cfg;
  cfg.reference_draws = 300;
  const auto built = build_tier_criterion(balance, data.observed_assignment(), cfg, rng);
  const std::vector<SamplerSpec> samplers{CompleteRandomization{}, WithinStrata{StratumLabels(cells)},
                                          ConditionalOnBalance{built.criterion}};
  for (const auto& s : samplers) {
    const auto a = randomization_pvalue(data, RegressionInteraction{}, s, draws(3000, 1), 77);
    const auto b = randomization_pvalue(data, RegressionInteraction{}, s, draws(3000, 4), 77);
    EXPECT_EQ(a.p_value, b.p_value);
    EXPECT_EQ(a.exceed, b.exceed);
    EXPECT_EQ(a.diagnostics.tries, b.diagnostics.tries);
  }
}

TEST(RandomizationPvalue, RejectsZeroDraws) {
  const auto data = four_units(Vector::Ones(4));
  EXPECT_THROW(randomization_pvalue(data, MeanDifference{}, CompleteRandomization{}, draws(0), 1),
               InvalidDesignError);
}

TEST(DrawWithinStrata, TwoByTwoUniform) {
  const StratumLabels labels(std::vector<int>{0, 0, 1, 1});
  RandomStream rng(47);
  std::map<std::uint32_t, int> counts;
  const int total = 40000;
  const std::vector<int> per{1, 1};
  for (int i = 0; i < total; ++i) ++counts[mask_of(draw_within_strata(labels, per, rng))];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [mask, c] : counts) EXPECT_NEAR(c / static_cast<double>(total), 0.25, 0.01) << mask;
}

TEST(DrawWithinStrata, SingleStratumIsComplete) {
  const StratumLabels labels(std::vector<int>(6, 0));
  RandomStream rng(48);
  std::map<std::uint32_t, int> counts;
  const int total = 30000;
  const std::vector<int> per{3};
  for (int i = 0; i < total; ++i) ++counts[mask_of(draw_within_strata(labels, per, rng))];
  const boost::math::chi_squared_distribution<double> dist(19);
  EXPECT_LT(chi_square_uniform(counts, 20, total), boost::math::quantile(boost::math::complement(dist, 0.001)));
}

TEST(DrawWithinStrata, CountConstraints) {
  const StratumLabels labels(std::vector<int>{0, 0, 1, 1, 1});
  RandomStream rng(49);
  const std::vector<int> per{0, 2};
  for (int i = 0; i < 100; ++i) {
    const auto w = draw_within_strata(labels, per, rng);
    EXPECT_FALSE(w.treated(0) || w.treated(1));
    EXPECT_EQ(w.treated_count(), 2);
  }
  const std::vector<int> bad{3, 0};
  EXPECT_THROW(draw_within_strata(labels, bad, rng), CountMismatchError);
  const std::vector<int> short_list{1};
  EXPECT_THROW(draw_within_strata(labels, short_list, rng), CountMismatchError);
}

TEST(DrawConditional, VacuousAcceptsEverything) {
  RandomStream rng(50);
  const Matrix x = random_matrix(20, 2, rng);
  const CovariateBalance balance(x, TierSpec::single(2));
  auto crit = BalanceCriterion::vacuous(TierSpec::single(2), 2);
  crit.enforce_signs = false;
  const ExperimentData data(x, draw_complete(20, 10, rng), random_vector(20, rng));
  const auto r = randomization_pvalue(data, MeanDifference{}, ConditionalOnBalance{crit}, draws(500), 5);
  EXPECT_DOUBLE_EQ(r.diagnostics.acceptance_rate, 1.0);
}

TEST(DrawConditional, AcceptanceNearTarget) {
  RandomStream rng(51);
  const int n = 60;
  const Matrix x = random_matrix(n, 1, rng);
  const CovariateBalance balance(x, TierSpec::single(1));
  const Assignment w_obs = draw_complete(n, 30, rng);
  BoundsConfig cfg;
  cfg.acceptance = 0.25;
  cfg.reference_draws = 2000;
  const auto built = build_tier_criterion(balance, w_obs, cfg, rng);
  long long tries_total = 0;
  const int accepted = 10000;
  for (int i = 0; i < accepted; ++i) {
    long long tries = 0;
    const Assignment w = draw_conditional(balance, built.criterion, 30, 1'000'000, rng, &tries);
    tries_total += tries;
    ASSERT_TRUE(evaluate_criterion(balance, w, built.criterion));
  }
  const double rate = accepted / static_cast<double>(tries_total);
  EXPECT_NEAR(rate, 0.25 * built.tiers[0].sign_acceptance_rate, 0.2 * 0.125);
}

TEST(DrawConditional, StallsOnEmptyRegion) {
  RandomStream rng(52);
  const Matrix x = random_matrix(10, 1, rng);
  const CovariateBalance balance(x, TierSpec::single(1));
  BalanceCriterion crit;
  crit.tiers = TierSpec::single(1);
  crit.bounds = {TierBounds{1e9, kInf}};
  crit.ref_signs = {1};
  EXPECT_THROW(draw_conditional(balance, crit, 5, 100, rng), SamplerStallError);
}

TEST(Binomial, Values) {
  EXPECT_DOUBLE_EQ(binomial(4, 2), 6.0);
  EXPECT_NEAR(binomial(100, 50) / 1.0089134454556419e29, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(binomial(5, 0), 1.0);
}

}  // namespace
