#include "crt/cem.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "crt/error.hpp"

namespace crt {

std::vector<double> quantile_cutpoints(int groups) {
  if (groups < 2) throw InvalidDesignError("quantile coarsening needs at least 2 groups");
  const boost::math::normal_distribution<double> normal;
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(groups - 1));
  for (int g = 1; g < groups; ++g) {
    // The median is exactly zero; avoid a -0 or 1e-17 from the inverse CDF.
    cuts.push_back(2 * g == groups ? 0.0 : boost::math::quantile(normal, static_cast<double>(g) / groups));
  }
  return cuts;
}

int sturges_bins(int n) {
  if (n < 1) throw InvalidDesignError("Sturges' rule needs at least one observation");
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1;
}

std::vector<double> equal_width_cutpoints(std::span<const double> x, int bins) {
  if (x.empty()) throw InvalidDesignError("binning needs at least one observation");
  if (bins < 1) throw InvalidDesignError("need at least one bin");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) throw ZeroRangeError("covariate has zero range; equal-width bins are undefined");
  const double width = (*hi - *lo) / bins;
  std::vector<double> cuts;
  cuts.reserve(static_cast<std::size_t>(bins - 1));
  for (int i = 1; i < bins; ++i) cuts.push_back(*lo + i * width);
  return cuts;
}

std::vector<double> sturges_cutpoints(std::span<const double> x) {
  if (x.empty()) throw InvalidDesignError("Sturges' rule needs at least one observation");
  return equal_width_cutpoints(x, sturges_bins(static_cast<int>(x.size())));
}

int bin_of(std::span<const double> cutpoints, double value) {
  return static_cast<int>(std::upper_bound(cutpoints.begin(), cutpoints.end(), value) - cutpoints.begin());
}

CoarseningSpec CoarseningSpec::quantile(int groups, int covariates) {
  CoarseningSpec spec;
  spec.mode = CoarseningMode::Quantile;
  spec.groups = groups;
  spec.cutpoints.assign(static_cast<std::size_t>(covariates), quantile_cutpoints(groups));
  return spec;
}

namespace {

template <typename Cuts>
std::vector<std::vector<double>> per_column(const Matrix& x, Cuts cuts) {
  std::vector<std::vector<double>> out;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Vector col = x.col(j);
    try {
      out.push_back(cuts(std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))));
    } catch (const ZeroRangeError&) {
      throw ZeroRangeError("covariate " + std::to_string(j + 1) + " has zero range; equal-width bins are undefined");
    }
  }
  return out;
}

}  // namespace

CoarseningSpec CoarseningSpec::sturges(const Matrix& x) {
  CoarseningSpec spec;
  spec.mode = CoarseningMode::Sturges;
  spec.groups = sturges_bins(static_cast<int>(x.rows()));
  spec.cutpoints = per_column(x, [](std::span<const double> c) { return sturges_cutpoints(c); });
  return spec;
}

CoarseningSpec CoarseningSpec::equal_width(int groups, const Matrix& x) {
  if (groups < 2) throw InvalidDesignError("equal-width coarsening needs at least 2 groups");
  CoarseningSpec spec;
  spec.mode = CoarseningMode::EqualWidth;
  spec.groups = groups;
  spec.cutpoints = per_column(x, [groups](std::span<const double> c) { return equal_width_cutpoints(c, groups); });
  return spec;
}

void CoarseningSpec::validate(int covariates) const {
  if (mode != CoarseningMode::Sturges && groups < 2)
    throw InvalidDesignError("coarsening needs at least 2 groups");
  if (static_cast<int>(cutpoints.size()) != covariates)
    throw InvalidDesignError("coarsening has cutpoints for " + std::to_string(cutpoints.size()) + " covariates, data has " +
                             std::to_string(covariates));
  for (std::size_t j = 0; j < cutpoints.size(); ++j) {
    const auto& c = cutpoints[j];
    for (std::size_t i = 1; i < c.size(); ++i)
      if (!(c[i] > c[i - 1]))
        throw InvalidDesignError("cutpoints of covariate " + std::to_string(j + 1) + " are not strictly increasing");
  }
}

StratumLabels coarsen(const Matrix& x, const CoarseningSpec& spec) {
  spec.validate(static_cast<int>(x.cols()));
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<std::vector<int>> cells(n, std::vector<int>(static_cast<std::size_t>(x.cols())));
  for (std::size_t i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      cells[i][static_cast<std::size_t>(j)] = bin_of(spec.cutpoints[static_cast<std::size_t>(j)],
                                                     x(static_cast<Eigen::Index>(i), j));

  std::map<std::vector<int>, int> ids;
  for (const auto& c : cells) ids.emplace(c, 0);
  int next = 0;
  for (auto& [cell, id] : ids) id = next++;

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = ids.at(cells[i]);
  return StratumLabels(std::move(labels));
}

std::vector<int> cem_prune(const StratumLabels& labels, const Assignment& w_obs) {
  if (labels.units() != w_obs.size()) throw LengthMismatchError("stratum labels do not match the assignment");
  const auto treated = labels.treated_per_stratum(w_obs);
  std::vector<int> kept;
  for (int i = 0; i < labels.units(); ++i) {
    const int s = labels[i];
    const int t = treated[static_cast<std::size_t>(s)];
    if (t > 0 && t < labels.stratum_size(s)) kept.push_back(i);
  }
  if (kept.empty()) throw AllPrunedError("no stratum contains both treated and control units");
  return kept;
}

}  // namespace crt
