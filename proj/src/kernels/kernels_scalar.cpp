#include <cmath>

#include "cgn/kernels.hpp"

namespace cgn::kernels {
namespace {

void min_of_scalar(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = b[i] < a[i] ? b[i] : a[i];
}

void min_into_scalar(double* acc, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] = x[i] < acc[i] ? x[i] : acc[i];
}

double sum_scalar(const double* x, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc[0] += x[i];
    acc[1] += x[i + 1];
    acc[2] += x[i + 2];
    acc[3] += x[i + 3];
  }
  double s = (acc[0] + acc[2]) + (acc[1] + acc[3]);
  for (; i < n; ++i) s += x[i];
  return s;
}

WeightedSums weighted_sums_scalar(const double* w, const double* x, std::size_t n) {
  double sw[4] = {0.0, 0.0, 0.0, 0.0};
  double swx[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (int j = 0; j < 4; ++j) {
      sw[j] += w[i + j];
      const double prod = w[i + j] * x[i + j];
      swx[j] += prod;
    }
  }
  WeightedSums r{(sw[0] + sw[2]) + (sw[1] + sw[3]), (swx[0] + swx[2]) + (swx[1] + swx[3])};
  for (; i < n; ++i) {
    r.weight += w[i];
    const double prod = w[i] * x[i];
    r.weighted_value += prod;
  }
  return r;
}

void abs_diff_scalar(double* out, const double* a, const double* b, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::fabs(a[i] - b[i]);
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{Isa::Scalar,     min_of_scalar,        min_into_scalar,
                               sum_scalar,      weighted_sums_scalar, abs_diff_scalar};
}  // namespace detail

}  // namespace cgn::kernels
