#include "cgn/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace cgn {
namespace {

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

void require_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string(name) + " must be a probability in [0,1], got " +
                          std::to_string(v));
  }
}

}  // namespace

Domain::Domain(std::string_view name) {
  if (name.empty()) throw ValidationError("domain must be non-empty");
  if (has_space(name)) throw ValidationError("domain contains whitespace: '" + std::string(name) + "'");
  if (name.front() == '.' || name.back() == '.') {
    throw ValidationError("domain has a leading or trailing dot: '" + std::string(name) + "'");
  }
  name_.reserve(name.size());
  for (unsigned char c : name) name_.push_back(char(std::tolower(c)));
}

VantageId::VantageId(std::string_view id) : id_(id) {
  if (id_.empty()) throw ValidationError("vantage id must be non-empty");
  if (has_space(id_)) throw ValidationError("vantage id contains whitespace: '" + id_ + "'");
}

RttSample::RttSample(Domain d, VantageId v, double rtt, std::int64_t at)
    : domain(std::move(d)), vantage(std::move(v)), rtt_ms(rtt), measured_at(at) {
  if (!(rtt_ms >= 0.0) || !std::isfinite(rtt_ms)) {
    throw ValidationError("rtt_ms must be finite and non-negative");
  }
  if (measured_at <= 0) throw ValidationError("measured_at must be positive");
}

void RttTable::add(RttSample sample) {
  auto key = std::make_tuple(sample.domain.str(), sample.vantage.str(), sample.measured_at);
  if (!keys_.insert(key).second) {
    throw ValidationError("duplicate sample for (" + sample.domain.str() + ", " +
                          sample.vantage.str() + ", " + std::to_string(sample.measured_at) + ")");
  }
  samples_.push_back(std::move(sample));
}

void RttTable::merge(const RttTable& other) {
  for (const auto& s : other.samples_) add(s);
}

std::vector<RttSample> RttTable::samples_for(const Domain& d) const {
  std::vector<RttSample> out;
  for (const auto& s : samples_) {
    if (s.domain == d) out.push_back(s);
  }
  return out;
}

std::vector<Domain> RttTable::domains() const {
  std::set<Domain> seen;
  for (const auto& s : samples_) seen.insert(s.domain);
  return {seen.begin(), seen.end()};
}

std::vector<VantageId> RttTable::vantages() const {
  std::set<VantageId> seen;
  for (const auto& s : samples_) seen.insert(s.vantage);
  return {seen.begin(), seen.end()};
}

GeParams::GeParams(double p_, double r_, double h, double k)
    : p(p_), r(r_), one_minus_h(h), one_minus_k(k) {
  require_probability(p, "p");
  require_probability(r, "r");
  require_probability(one_minus_h, "1-h");
  require_probability(one_minus_k, "1-k");
  if (p > 0.0 && p + r <= 0.0) throw ValidationError("p + r must be positive");
}

UniformLoss::UniformLoss(double r) : rate(r) { require_probability(rate, "loss rate"); }

LinkSpec::LinkSpec(double rtt, double bw, LossModel l, int cwnd, int mss)
    : rtt_s(rtt), bandwidth_bps(bw), loss(std::move(l)), init_cwnd_segments(cwnd), mss_bytes(mss) {
  if (!(rtt_s >= 0.0) || !std::isfinite(rtt_s)) throw ValidationError("rtt_s must be >= 0");
  if (!(bandwidth_bps > 0.0) || !std::isfinite(bandwidth_bps)) {
    throw ValidationError("bandwidth_bps must be > 0");
  }
  if (init_cwnd_segments < 1) throw ValidationError("init_cwnd_segments must be >= 1");
  if (mss_bytes < 1) throw ValidationError("mss_bytes must be >= 1");
}

double ge_stationary_loss(const GeParams& g) {
  if (g.p == 0.0) return g.one_minus_k;
  const double pi_bad = g.p / (g.p + g.r);
  return pi_bad * g.one_minus_h + (1.0 - pi_bad) * g.one_minus_k;
}

std::array<GeParams, 4> bursty_ge_sets() {
  return {GeParams{0.01096, 0.50, 0.70, 0.001}, GeParams{0.00877, 0.40, 0.70, 0.001},
          GeParams{0.00658, 0.30, 0.70, 0.001}, GeParams{0.00438, 0.20, 0.70, 0.001}};
}

}  // namespace cgn
