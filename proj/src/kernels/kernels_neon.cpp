#include <arm_neon.h>

#include <cmath>

#include "cgn/kernels.hpp"

// Two float64x2 registers stand in for one four-lane accumulator so the
// reduction order matches the scalar reference.

namespace cgn::kernels {
namespace {

struct Quad {
  float64x2_t lo;  // lanes 0, 1
  float64x2_t hi;  // lanes 2, 3
};

inline double hsum(Quad q) {
  float64x2_t pair = vaddq_f64(q.lo, q.hi);  // (l0 + l2, l1 + l3)
  return vgetq_lane_f64(pair, 0) + vgetq_lane_f64(pair, 1);
}

inline float64x2_t min2(float64x2_t x, float64x2_t y) {
  // x < y ? x : y, matching the scalar tie and NaN behaviour.
  return vbslq_f64(vcltq_f64(x, y), x, y);
}

void min_of_neon(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, min2(vld1q_f64(b + i), vld1q_f64(a + i)));
  for (; i < n; ++i) out[i] = b[i] < a[i] ? b[i] : a[i];
}

void min_into_neon(double* acc, const double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(acc + i, min2(vld1q_f64(x + i), vld1q_f64(acc + i)));
  for (; i < n; ++i) acc[i] = x[i] < acc[i] ? x[i] : acc[i];
}

double sum_neon(const double* x, std::size_t n) {
  Quad acc{vdupq_n_f64(0.0), vdupq_n_f64(0.0)};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc.lo = vaddq_f64(acc.lo, vld1q_f64(x + i));
    acc.hi = vaddq_f64(acc.hi, vld1q_f64(x + i + 2));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

WeightedSums weighted_sums_neon(const double* w, const double* x, std::size_t n) {
  Quad sw{vdupq_n_f64(0.0), vdupq_n_f64(0.0)};
  Quad swx{vdupq_n_f64(0.0), vdupq_n_f64(0.0)};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    float64x2_t w0 = vld1q_f64(w + i);
    float64x2_t w1 = vld1q_f64(w + i + 2);
    sw.lo = vaddq_f64(sw.lo, w0);
    sw.hi = vaddq_f64(sw.hi, w1);
    swx.lo = vaddq_f64(swx.lo, vmulq_f64(w0, vld1q_f64(x + i)));
    swx.hi = vaddq_f64(swx.hi, vmulq_f64(w1, vld1q_f64(x + i + 2)));
  }
  WeightedSums r{hsum(sw), hsum(swx)};
  for (; i < n; ++i) {
    r.weight += w[i];
    const double prod = w[i] * x[i];
    r.weighted_value += prod;
  }
  return r;
}

void abs_diff_neon(double* out, const double* a, const double* b, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = std::fabs(a[i] - b[i]);
}

}  // namespace

namespace detail {
const KernelTable kNeonTable{Isa::Neon,    min_of_neon,        min_into_neon,
                             sum_neon,     weighted_sums_neon, abs_diff_neon};
}  // namespace detail

}  // namespace cgn::kernels
