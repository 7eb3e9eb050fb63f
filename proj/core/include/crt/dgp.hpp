#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "crt/data.hpp"
#include "crt/random.hpp"

namespace crt {

/// Outcome models for the simulation studies. Y0 = beta * f(X) + eps and
/// Y1 = Y0 + tau, except Heterogeneous where Y1 = Y0 + tau + sigma_tau * Y0.
enum class OutcomeModel {
  MainLinear,          ///< X ~ N(0, I4); f = .1x1 + .2x2 + .3x3 + .4x4
  PosNeg,              ///< f = -.1x1 + .2x2 + .3x3 - .4x4
  Heterogeneous,       ///< linear f, effect grows with Y0
  MixedDistributions,  ///< x1 ~ N(0,1), x2 ~ N(x1,1), x3 ~ Pois(5), x4 ~ Bern(.2); linear f
  MisspecModerate,     ///< f = .1x1^2 + .2x2 + .3x3^2 + .4x4
  MisspecNone,         ///< f = .1sqrt|x1| + .2x2^2 + .3sqrt|x3| + .4x4^2
};

std::string_view model_name(OutcomeModel model);
/// Inverse of model_name; throws SchemaError on unknown names.
OutcomeModel parse_model(std::string_view name);

struct DgpSpec {
  OutcomeModel model = OutcomeModel::MainLinear;
  double beta = 0.0;
  double tau = 0.0;
  /// Only meaningful (and required) for Heterogeneous.
  std::optional<double> sigma_tau;
  int units = 100;

  void validate() const;
};

inline constexpr double kDefaultSigmaTau = 0.5;
inline constexpr int kCovariates = 4;

struct Population {
  Matrix x;
  PotentialOutcomes po;
};

/// Draws X and the noise from `rng` in a fixed order that does not depend on
/// beta or tau, so one stream gives the same units for every (beta, tau).
Population generate(const DgpSpec& spec, RandomStream& rng);

/// The covariate functions entering the outcome model, e.g. (x1^2, x2, x3^2, x4)
/// for MisspecModerate. Identity for the linear models.
Matrix outcome_features(OutcomeModel model, const Matrix& x);

/// R^2 of the least-squares fit of y on [1, X].
double linear_r_squared(const Matrix& x, const Vector& y);

}  // namespace crt
