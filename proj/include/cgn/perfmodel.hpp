#pragma once

// Linear load-time models over RTT, the idealized CDN/fetch comparison and the
// per-user monthly cost estimate.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cgn/error.hpp"

namespace cgn::perfmodel {

struct LinearFit {
  double slope;      // seconds of load time per second of RTT
  double intercept;  // seconds
  std::optional<double> r_squared;  // set by fit_linear
};

/// Ordinary least squares over (rtt_s, time_s) points.
LinearFit fit_linear(const std::vector<std::pair<double, double>>& points);

double predict(const LinearFit& fit, double rtt_s);

class NoCrossoverError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// RTT at which the two lines meet. Negative results mean the lines do not
/// cross at a positive RTT; parallel lines throw NoCrossoverError.
double crossover_rtt(const LinearFit& a, const LinearFit& b);

struct CoefficientPreset {
  std::string name;
  LinearFit default_fit;
  LinearFit cgn_fit;
};

/// "final" (default) or "workshop".
CoefficientPreset preset(std::string_view name);

struct IdealModels {
  LinearFit cdn_star{4.8, 1.9, std::nullopt};
  LinearFit fetch_star{4.8, 1.9, std::nullopt};
};

struct LatencyDecomposition {
  LatencyDecomposition(double rtt_lm_s, double delta_s);

  double rtt_lm_s;
  double delta_s;
  double rtt_s_s;  // rtt_lm + delta
  double rtt_g_s;  // assumed equal to rtt_s_s
};

struct Comparison {
  double fetch_vs_default;
  double fetch_star_vs_cdn_star;
};

Comparison normalized_comparison(const LatencyDecomposition& d, const CoefficientPreset& fits,
                                 const IdealModels& ideal = {});

struct CostInputs {
  double pages_per_month = 3000;
  double avg_page_bytes = 2'000'000;
  double service_time_s = 5.2;
  double price_per_hour = 0.431;
  double price_per_gb = 0.087;
  double concurrency = 1;

  void validate() const;
};

struct CostBreakdown {
  double network_usd;
  double compute_usd;
  double total_usd;
};

/// GB is 10^9 bytes.
CostBreakdown cost_per_user_month(const CostInputs& c);

}  // namespace cgn::perfmodel
