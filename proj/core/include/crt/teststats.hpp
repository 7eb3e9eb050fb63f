#pragma once

#include <span>
#include <variant>
#include <vector>

#include "crt/data.hpp"

namespace crt {

/// Stratum membership of every unit; labels are dense 0-based.
class StratumLabels {
 public:
  StratumLabels() = default;
  explicit StratumLabels(std::vector<int> labels);
  /// From labels in {1..S} as they appear in files and configs.
  static StratumLabels from_one_based(std::span<const int> labels);

  int units() const noexcept { return static_cast<int>(labels_.size()); }
  int strata() const noexcept { return strata_; }
  int operator[](int i) const { return labels_[static_cast<std::size_t>(i)]; }
  std::span<const int> values() const noexcept { return labels_; }
  int stratum_size(int s) const { return sizes_.at(static_cast<std::size_t>(s)); }
  std::vector<int> treated_per_stratum(const Assignment& w) const;
  StratumLabels subset(std::span<const int> units) const;

 private:
  std::vector<int> labels_;
  std::vector<int> sizes_;
  int strata_ = 0;
};

struct MeanDifference {};
struct PostStratified {
  StratumLabels labels;
};
struct RegressionInteraction {};

using StatisticSpec = std::variant<MeanDifference, PostStratified, RegressionInteraction>;

/// Treated mean minus control mean.
double tau_sd(const Vector& y, const Assignment& w);

/// Stratum-size weighted average of within-stratum mean differences. Strata
/// lacking either arm are dropped and the weights renormalized.
double tau_ps(const Vector& y, const Assignment& w, const StratumLabels& labels);

/// Coefficient on w in the regression of y on [1, w, X, w * (X - colmeans(X))].
double tau_int(const Vector& y, const Assignment& w, const Matrix& x);

/// Least-squares solution through Householder QR. Throws RankDeficientError
/// naming the first column that is (numerically) a combination of earlier ones.
Vector least_squares(const Matrix& design, const Vector& response);

/// Evaluates one statistic repeatedly for a fixed (y, X) across assignments,
/// reusing buffers. One instance per thread.
class StatisticEvaluator {
 public:
  StatisticEvaluator(StatisticSpec spec, const Matrix& x, const Vector& y);

  /// `w` and `treated` must describe the same assignment.
  double operator()(const Assignment& w, std::span<const int> treated);
  double operator()(const Assignment& w);

 private:
  StatisticSpec spec_;
  Vector y_;
  Matrix x_centered_;
  Matrix x_;
  double y_total_ = 0.0;
  Matrix design_;
  Eigen::HouseholderQR<Matrix> qr_;
};

}  // namespace crt
