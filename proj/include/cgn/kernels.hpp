#pragma once

// Data-parallel inner loops shared by site selection and the census
// aggregations. Every kernel has a scalar reference; AVX2 (x86-64) and NEON
// (aarch64) variants are selected once at runtime. Reductions use four
// lane-strided partial sums combined in a fixed order, in all variants, so
// results are bit-identical across ISAs.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace cgn::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

struct WeightedSums {
  double weight = 0.0;           // sum of w
  double weighted_value = 0.0;   // sum of w * x
};

struct KernelTable {
  Isa isa;
  // out[i] = min(a[i], b[i])
  void (*min_of)(double* out, const double* a, const double* b, std::size_t n);
  // acc[i] = min(acc[i], x[i])
  void (*min_into)(double* acc, const double* x, std::size_t n);
  double (*sum)(const double* x, std::size_t n);
  WeightedSums (*weighted_sums)(const double* w, const double* x, std::size_t n);
  // out[i] = |a[i] - b[i]|
  void (*abs_diff)(double* out, const double* a, const double* b, std::size_t n);
};

/// True when the variant was compiled in and the running CPU supports it.
bool supported(Isa isa);
/// Table for a specific variant; throws std::invalid_argument if unsupported.
const KernelTable& table(Isa isa);
/// The table in use. Picks the widest supported variant on first call unless
/// the CGN_SIMD environment variable names another one (scalar|avx2|neon).
const KernelTable& active();

// Convenience wrappers over active().
inline void min_of(std::span<double> out, std::span<const double> a, std::span<const double> b) {
  active().min_of(out.data(), a.data(), b.data(), out.size());
}
inline void min_into(std::span<double> acc, std::span<const double> x) {
  active().min_into(acc.data(), x.data(), acc.size());
}
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline WeightedSums weighted_sums(std::span<const double> w, std::span<const double> x) {
  return active().weighted_sums(w.data(), x.data(), w.size());
}
inline void abs_diff(std::span<double> out, std::span<const double> a, std::span<const double> b) {
  active().abs_diff(out.data(), a.data(), b.data(), out.size());
}

namespace detail {
extern const KernelTable kScalarTable;
#if defined(CGN_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(CGN_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

}  // namespace cgn::kernels
