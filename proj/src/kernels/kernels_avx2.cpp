#include <immintrin.h>

#include <cmath>

#include "cgn/kernels.hpp"

namespace cgn::kernels {
namespace {

// Same lane combination as the scalar reference: (l0 + l2) + (l1 + l3).
inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d pair = _mm_add_pd(lo, hi);  // (l0 + l2, l1 + l3)
  return _mm_cvtsd_f64(pair) + _mm_cvtsd_f64(_mm_unpackhi_pd(pair, pair));
}

void min_of_avx2(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // _mm256_min_pd returns the second operand when the first is not smaller.
    _mm256_storeu_pd(out + i, _mm256_min_pd(_mm256_loadu_pd(b + i), _mm256_loadu_pd(a + i)));
  }
  for (; i < n; ++i) out[i] = b[i] < a[i] ? b[i] : a[i];
}

void min_into_avx2(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(acc + i, _mm256_min_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] = x[i] < acc[i] ? x[i] : acc[i];
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

WeightedSums weighted_sums_avx2(const double* w, const double* x, std::size_t n) {
  __m256d sw = _mm256_setzero_pd();
  __m256d swx = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d wv = _mm256_loadu_pd(w + i);
    sw = _mm256_add_pd(sw, wv);
    swx = _mm256_add_pd(swx, _mm256_mul_pd(wv, _mm256_loadu_pd(x + i)));
  }
  WeightedSums r{hsum(sw), hsum(swx)};
  for (; i < n; ++i) {
    r.weight += w[i];
    const double prod = w[i] * x[i];
    r.weighted_value += prod;
  }
  return r;
}

void abs_diff_avx2(double* out, const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    _mm256_storeu_pd(out + i, _mm256_andnot_pd(sign, d));
  }
  for (; i < n; ++i) out[i] = std::fabs(a[i] - b[i]);
}

}  // namespace

namespace detail {
const KernelTable kAvx2Table{Isa::Avx2,    min_of_avx2,        min_into_avx2,
                             sum_avx2,     weighted_sums_avx2, abs_diff_avx2};
}  // namespace detail

}  // namespace cgn::kernels
