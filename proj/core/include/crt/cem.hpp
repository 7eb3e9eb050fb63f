#pragma once

#include <span>
#include <vector>

#include "crt/data.hpp"
#include "crt/teststats.hpp"

namespace crt {

enum class CoarseningMode {
  Quantile,    ///< G equal-probability groups of N(0,1)
  Sturges,     ///< ceil(log2 N) + 1 equal-width bins over each covariate's observed range
  EqualWidth,  ///< G equal-width bins over each covariate's observed range
};

/// Per-covariate cutpoints used to coarsen X into strata.
struct CoarseningSpec {
  CoarseningMode mode = CoarseningMode::Quantile;
  int groups = 2;
  std::vector<std::vector<double>> cutpoints;

  /// Same N(0,1) quantile cutpoints for each of `covariates` columns.
  static CoarseningSpec quantile(int groups, int covariates);
  /// Sturges bins computed from every column of `x`.
  static CoarseningSpec sturges(const Matrix& x);
  /// G equal-width bins over the observed range of every column of `x`.
  static CoarseningSpec equal_width(int groups, const Matrix& x);

  /// Throws InvalidDesignError unless there is one strictly increasing list per covariate.
  void validate(int covariates) const;
};

/// The G-1 interior equal-probability quantiles of the standard normal.
std::vector<double> quantile_cutpoints(int groups);

/// Number of Sturges bins for n observations.
int sturges_bins(int n);

/// Interior edges of sturges_bins(n) equal-width bins over [min(x), max(x)].
/// Throws ZeroRangeError when all values are equal.
std::vector<double> sturges_cutpoints(std::span<const double> x);

/// Interior edges of `bins` equal-width bins over [min(x), max(x)].
/// Throws ZeroRangeError when all values are equal.
std::vector<double> equal_width_cutpoints(std::span<const double> x, int bins);

/// Bin index of `value`: the number of cutpoints <= value.
int bin_of(std::span<const double> cutpoints, double value);

/// Labels for the occupied cells of the product of per-covariate bins,
/// numbered densely in lexicographic order of the cell.
StratumLabels coarsen(const Matrix& x, const CoarseningSpec& spec);

/// Units in strata with at least one treated and one control unit.
/// Throws AllPrunedError when no such stratum exists.
std::vector<int> cem_prune(const StratumLabels& labels, const Assignment& w_obs);

}  // namespace crt
