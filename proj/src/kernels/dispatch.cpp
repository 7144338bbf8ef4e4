#include <cstdlib>
#include <stdexcept>
#include <string>

#include "cgn/kernels.hpp"

namespace cgn::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  if (name == "neon") return Isa::Neon;
  return std::nullopt;
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(CGN_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(CGN_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) {
    throw std::invalid_argument("kernel variant not available: " + std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(CGN_HAVE_AVX2)
    case Isa::Avx2: return detail::kAvx2Table;
#endif
#if defined(CGN_HAVE_NEON)
    case Isa::Neon: return detail::kNeonTable;
#endif
    default: return detail::kScalarTable;
  }
}

namespace {

const KernelTable& select() {
  if (const char* env = std::getenv("CGN_SIMD")) {
    if (auto isa = parse_isa(env); isa && supported(*isa)) return table(*isa);
  }
  if (supported(Isa::Avx2)) return table(Isa::Avx2);
  if (supported(Isa::Neon)) return table(Isa::Neon);
  return detail::kScalarTable;
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

}  // namespace cgn::kernels
