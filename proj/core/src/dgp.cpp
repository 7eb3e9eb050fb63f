#include "crt/dgp.hpp"

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "crt/error.hpp"
#include "crt/teststats.hpp"

namespace crt {

namespace {

constexpr std::array<std::pair<OutcomeModel, std::string_view>, 6> kModelNames{{
    {OutcomeModel::MainLinear, "main_linear"},
    {OutcomeModel::PosNeg, "pos_neg"},
    {OutcomeModel::Heterogeneous, "heterogeneous"},
    {OutcomeModel::MixedDistributions, "mixed_distributions"},
    {OutcomeModel::MisspecModerate, "misspec_moderate"},
    {OutcomeModel::MisspecNone, "misspec_none"},
}};

constexpr std::array<double, kCovariates> kLinearWeights{0.1, 0.2, 0.3, 0.4};
constexpr std::array<double, kCovariates> kPosNegWeights{-0.1, 0.2, 0.3, -0.4};

}  // namespace

std::string_view model_name(OutcomeModel model) {
  for (const auto& [m, name] : kModelNames)
    if (m == model) return name;
  return "unknown";
}

OutcomeModel parse_model(std::string_view name) {
  for (const auto& [m, n] : kModelNames)
    if (n == name) return m;
  throw SchemaError("unknown outcome model '" + std::string(name) + "'");
}

void DgpSpec::validate() const {
  if (units < 2) throw InvalidDesignError("a population needs at least 2 units");
  if (!std::isfinite(beta) || !std::isfinite(tau)) throw InvalidDesignError("beta and tau must be finite");
  if (sigma_tau && model != OutcomeModel::Heterogeneous)
    throw InvalidDesignError("sigma_tau applies only to the heterogeneous model");
}

Population generate(const DgpSpec& spec, RandomStream& rng) {
  spec.validate();
  const int n = spec.units;
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix x(n, kCovariates);
  if (spec.model == OutcomeModel::MixedDistributions) {
    std::poisson_distribution<int> poisson(5.0);
    std::bernoulli_distribution bernoulli(0.2);
    for (int i = 0; i < n; ++i) x(i, 0) = normal(rng);
    for (int i = 0; i < n; ++i) x(i, 1) = x(i, 0) + normal(rng);
    for (int i = 0; i < n; ++i) x(i, 2) = poisson(rng);
    for (int i = 0; i < n; ++i) x(i, 3) = bernoulli(rng) ? 1.0 : 0.0;
  } else {
    for (int j = 0; j < kCovariates; ++j)
      for (int i = 0; i < n; ++i) x(i, j) = normal(rng);
  }
  Vector eps(n);
  for (int i = 0; i < n; ++i) eps(i) = normal(rng);

  const Matrix features = outcome_features(spec.model, x);
  const auto& weights = spec.model == OutcomeModel::PosNeg ? kPosNegWeights : kLinearWeights;
  Vector signal = Vector::Zero(n);
  for (int j = 0; j < kCovariates; ++j) signal += weights[static_cast<std::size_t>(j)] * features.col(j);

  Population pop;
  pop.x = std::move(x);
  pop.po.y0 = spec.beta * signal + eps;
  pop.po.y1 = pop.po.y0.array() + spec.tau;
  if (spec.model == OutcomeModel::Heterogeneous)
    pop.po.y1 += spec.sigma_tau.value_or(kDefaultSigmaTau) * pop.po.y0;
  return pop;
}

Matrix outcome_features(OutcomeModel model, const Matrix& x) {
  Matrix f = x;
  if (model == OutcomeModel::MisspecModerate) {
    f.col(0) = x.col(0).array().square();
    f.col(2) = x.col(2).array().square();
  } else if (model == OutcomeModel::MisspecNone) {
    f.col(0) = x.col(0).array().abs().sqrt();
    f.col(1) = x.col(1).array().square();
    f.col(2) = x.col(2).array().abs().sqrt();
    f.col(3) = x.col(3).array().square();
  }
  return f;
}

double linear_r_squared(const Matrix& x, const Vector& y) {
  if (x.rows() != y.size()) throw LengthMismatchError("covariate rows do not match outcomes");
  Matrix design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  const Vector coef = least_squares(design, y);
  const Vector resid = y - design * coef;
  const double centered = (y.array() - y.mean()).square().sum();
  if (centered == 0.0) return 0.0;
  return 1.0 - resid.squaredNorm() / centered;
}

}  // namespace crt
