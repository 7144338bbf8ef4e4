#include "cgn/perfmodel.hpp"

#include <cmath>

namespace cgn::perfmodel {

LinearFit fit_linear(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw ValidationError("a line fit needs at least two points");
  const double n = double(points.size());
  double mx = 0, my = 0;
  for (const auto& [x, y] : points) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw ValidationError("non-finite point in fit input");
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw ValidationError("degenerate fit: all rtt values are equal");
  LinearFit fit{sxy / sxx, 0.0, std::nullopt};
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (const auto& [x, y] : points) {
    const double e = y - predict(fit, x);
    ss_res += e * e;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

double predict(const LinearFit& fit, double rtt_s) { return fit.slope * rtt_s + fit.intercept; }

double crossover_rtt(const LinearFit& a, const LinearFit& b) {
  if (a.slope == b.slope) throw NoCrossoverError("lines are parallel; no crossover");
  return (b.intercept - a.intercept) / (a.slope - b.slope);
}

CoefficientPreset preset(std::string_view name) {
  if (name == "final") return {"final", {18.6, 1.9, std::nullopt}, {4.8, 2.6, std::nullopt}};
  if (name == "workshop") return {"workshop", {36.4, 2.1, std::nullopt}, {3.8, 2.7, std::nullopt}};
  throw ValidationError("unknown coefficient preset '" + std::string(name) + "' (final|workshop)");
}

LatencyDecomposition::LatencyDecomposition(double lm, double delta)
    : rtt_lm_s(lm), delta_s(delta), rtt_s_s(lm + delta), rtt_g_s(lm + delta) {
  if (!(lm >= 0) || !std::isfinite(lm)) throw ValidationError("rtt_lm must be finite and >= 0");
  if (!(delta >= 0) || !std::isfinite(delta)) throw ValidationError("delta must be finite and >= 0");
}

Comparison normalized_comparison(const LatencyDecomposition& d, const CoefficientPreset& fits,
                                 const IdealModels& ideal) {
  return {predict(fits.cgn_fit, d.rtt_s_s) / predict(fits.default_fit, d.rtt_s_s),
          predict(ideal.fetch_star, d.rtt_s_s) / predict(ideal.cdn_star, d.rtt_lm_s)};
}

void CostInputs::validate() const {
  auto check = [](double v, const char* name, bool allow_zero) {
    if (!std::isfinite(v) || v < 0 || (!allow_zero && v == 0)) {
      throw ValidationError(std::string(name) + (allow_zero ? " must be >= 0" : " must be > 0"));
    }
  };
  check(pages_per_month, "pages_per_month", true);
  check(avg_page_bytes, "avg_page_bytes", false);
  check(service_time_s, "service_time_s", false);
  check(price_per_hour, "price_per_hour", false);
  check(price_per_gb, "price_per_gb", false);
  if (!(concurrency >= 1)) throw ValidationError("concurrency must be >= 1");
}

CostBreakdown cost_per_user_month(const CostInputs& c) {
  c.validate();
  const double network = c.pages_per_month * c.avg_page_bytes / 1e9 * c.price_per_gb;
  const double compute = c.pages_per_month * c.service_time_s / 3600.0 * c.price_per_hour / c.concurrency;
  return {network, compute, network + compute};
}

}  // namespace cgn::perfmodel
