#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <vector>

#include "cgn/kernels.hpp"

using namespace cgn::kernels;

namespace {

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa i : {Isa::Scalar, Isa::Avx2, Isa::Neon}) {
    if (supported(i)) out.push_back(i);
  }
  return out;
}

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, bool with_inf) {
  std::uniform_real_distribution<double> u(0.0, 500.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  if (with_inf && n > 0) v[rng() % n] = std::numeric_limits<double>::infinity();
  return v;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST_CASE("scalar reference is always available") {
  CHECK(supported(Isa::Scalar));
  CHECK(table(Isa::Scalar).isa == Isa::Scalar);
  CHECK(parse_isa("avx2") == Isa::Avx2);
  CHECK_FALSE(parse_isa("sse9").has_value());
  CHECK(isa_name(active().isa).size() > 0);
}

TEST_CASE("unsupported variants are refused") {
  for (Isa i : {Isa::Avx2, Isa::Neon}) {
    if (!supported(i)) CHECK_THROWS(table(i));
  }
}

TEST_CASE("elementwise kernels match the naive loops in every variant") {
  std::mt19937_64 rng(11);
  for (Isa isa : available()) {
    const auto& k = table(isa);
    for (std::size_t n = 0; n <= 67; ++n) {
      auto a = random_values(rng, n, true), b = random_values(rng, n, true);
      std::vector<double> out(n), acc = a, diff(n);
      k.min_of(out.data(), a.data(), b.data(), n);
      k.min_into(acc.data(), b.data(), n);
      k.abs_diff(diff.data(), a.data(), b.data(), n);
      for (std::size_t i = 0; i < n; ++i) {
        const double m = a[i] < b[i] ? a[i] : b[i];
        CHECK(same_bits(out[i], m));
        CHECK(same_bits(acc[i], m));
        if (std::isfinite(a[i]) && std::isfinite(b[i])) CHECK(same_bits(diff[i], std::fabs(a[i] - b[i])));
      }
    }
  }
}

TEST_CASE("reductions are bit-identical across variants and close to a naive sum") {
  std::mt19937_64 rng(12);
  const auto& ref = table(Isa::Scalar);
  for (std::size_t n = 0; n <= 203; n += 1 + n / 8) {
    auto x = random_values(rng, n, false), w = random_values(rng, n, false);
    double naive = 0, naive_w = 0, naive_wx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      naive += x[i];
      naive_w += w[i];
      naive_wx += w[i] * x[i];
    }
    const double s = ref.sum(x.data(), n);
    const auto ws = ref.weighted_sums(w.data(), x.data(), n);
    CHECK(s == doctest::Approx(naive).epsilon(1e-12));
    CHECK(ws.weight == doctest::Approx(naive_w).epsilon(1e-12));
    CHECK(ws.weighted_value == doctest::Approx(naive_wx).epsilon(1e-12));
    for (Isa isa : available()) {
      const auto& k = table(isa);
      CHECK(same_bits(k.sum(x.data(), n), s));
      const auto kw = k.weighted_sums(w.data(), x.data(), n);
      CHECK(same_bits(kw.weight, ws.weight));
      CHECK(same_bits(kw.weighted_value, ws.weighted_value));
    }
  }
}

TEST_CASE("sum propagates infinity") {
  std::vector<double> x{1, 2, std::numeric_limits<double>::infinity(), 4, 5};
  for (Isa isa : available()) CHECK(std::isinf(table(isa).sum(x.data(), x.size())));
}

TEST_CASE("span wrappers route through the active table") {
  std::vector<double> a{3, 1, 2}, b{1, 5, 2}, out(3);
  min_of(out, a, b);
  CHECK(out == std::vector<double>{1, 1, 2});
  CHECK(sum(a) == 6);
}
