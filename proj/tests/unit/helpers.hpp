#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "crt/data.hpp"
#include "crt/random.hpp"

namespace crt::testing {

inline Matrix random_matrix(int n, int p, RandomStream& rng) {
  Matrix x(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) x(i, j) = 2.0 * rng.uniform() - 1.0 + 0.1 * i * (j + 1) / n;
  return x;
}

inline Vector random_vector(int n, RandomStream& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = 4.0 * rng.uniform() - 2.0;
  return v;
}

inline Assignment make_assignment(std::vector<std::uint8_t> w) { return Assignment(std::move(w)); }

/// Encodes an assignment as a bit mask (unit i -> bit i).
inline std::uint32_t mask_of(const Assignment& w) {
  std::uint32_t m = 0;
  for (int i = 0; i < w.size(); ++i)
    if (w.treated(i)) m |= 1u << i;
  return m;
}

/// Pearson chi-square statistic of observed counts against equal expected counts.
inline double chi_square_uniform(const std::map<std::uint32_t, int>& counts, int cells, int total) {
  const double expected = static_cast<double>(total) / cells;
  double stat = 0.0;
  int seen = 0;
  for (const auto& [k, c] : counts) {
    stat += (c - expected) * (c - expected) / expected;
    ++seen;
  }
  stat += (cells - seen) * expected;
  return stat;
}

}  // namespace crt::testing
