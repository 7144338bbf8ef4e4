#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace cgn {

/// Nearest-rank quantile: the ceil(q*n)-th smallest value (1-based), q in (0,1].
/// q = 0 yields the minimum. Reorders `values`.
inline double nearest_rank(std::span<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  std::size_t n = values.size();
  std::size_t rank = std::size_t(std::ceil(q * double(n) - 1e-9));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  auto it = values.begin() + std::ptrdiff_t(rank - 1);
  std::nth_element(values.begin(), it, values.end());
  return *it;
}

inline double nearest_rank_copy(std::span<const double> values, double q) {
  std::vector<double> tmp(values.begin(), values.end());
  return nearest_rank(tmp, q);
}

inline double median(std::span<const double> values) { return nearest_rank_copy(values, 0.5); }

}  // namespace cgn
