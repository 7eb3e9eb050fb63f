#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crt/random.hpp"

namespace crt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Binary treatment vector; 1 marks a treated unit.
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::vector<std::uint8_t> w);

  /// Assignment of length `n` with the listed units treated.
  static Assignment from_treated(int n, std::span<const int> treated);

  int size() const noexcept { return static_cast<int>(w_.size()); }
  int treated_count() const noexcept { return treated_; }
  int control_count() const noexcept { return size() - treated_; }
  bool treated(int i) const { return w_[static_cast<std::size_t>(i)] != 0; }
  std::uint8_t operator[](int i) const { return w_[static_cast<std::size_t>(i)]; }
  std::span<const std::uint8_t> values() const noexcept { return w_; }
  std::vector<int> treated_units() const;

  Assignment complement() const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<std::uint8_t> w_;
  int treated_ = 0;
};

/// Y(0) and Y(1) for every unit, held fixed across randomizations.
struct PotentialOutcomes {
  Vector y0;
  Vector y1;

  double average_effect() const;
  bool sharp_null() const;
};

/// Covariates, observed assignment and observed outcomes of one experiment.
class ExperimentData {
 public:
  ExperimentData(Matrix x, Assignment w_obs, Vector y_obs);

  const Matrix& covariates() const noexcept { return x_; }
  const Assignment& observed_assignment() const noexcept { return w_obs_; }
  const Vector& outcomes() const noexcept { return y_obs_; }

  int units() const noexcept { return static_cast<int>(x_.rows()); }
  int covariate_count() const noexcept { return static_cast<int>(x_.cols()); }
  int treated_count() const noexcept { return w_obs_.treated_count(); }
  int control_count() const noexcept { return w_obs_.control_count(); }

  /// Data restricted to the listed units (order preserved).
  ExperimentData subset(std::span<const int> units) const;

 private:
  Matrix x_;
  Assignment w_obs_;
  Vector y_obs_;
};

/// Uniform draw from the assignments with exactly `n_treated` ones.
Assignment draw_complete(int n, int n_treated, RandomStream& rng);

/// y_i = w_i Y1_i + (1 - w_i) Y0_i.
Vector observe(const PotentialOutcomes& po, const Assignment& w);

/// Reusable complete-randomization sampler. Keeps a permutation buffer and
/// performs a partial Fisher-Yates pass per draw over the smaller arm.
class CompleteSampler {
 public:
  CompleteSampler(int n, int n_treated);

  /// Indices of the treated units of a fresh uniform draw. The span is
  /// valid until the next call.
  std::span<const int> draw(RandomStream& rng);

  int units() const noexcept { return n_; }
  int treated_count() const noexcept { return n_treated_; }

 private:
  int n_;
  int n_treated_;
  int picks_;
  bool pick_treated_;
  std::vector<int> perm_;
};

}  // namespace crt
