#pragma once

// Shared domain types. Measurement data is in milliseconds, model equations
// work in seconds; conversions happen explicitly where modules meet.

#include <array>
#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "cgn/error.hpp"

namespace cgn {

/// Registrable host name, lower-cased on construction.
class Domain {
 public:
  explicit Domain(std::string_view name);

  const std::string& str() const noexcept { return name_; }
  auto operator<=>(const Domain&) const = default;

 private:
  std::string name_;
};

/// Identifier of a measurement or proxy location.
class VantageId {
 public:
  explicit VantageId(std::string_view id);

  const std::string& str() const noexcept { return id_; }
  auto operator<=>(const VantageId&) const = default;

 private:
  std::string id_;
};

struct RttSample {
  RttSample(Domain d, VantageId v, double rtt, std::int64_t at);

  Domain domain;
  VantageId vantage;
  double rtt_ms;
  std::int64_t measured_at;  // unix seconds
};

/// Census substrate: at most one sample per (domain, vantage, measured_at).
class RttTable {
 public:
  RttTable() = default;

  void add(RttSample sample);
  /// Appends every sample of `other`; duplicates are rejected as in add().
  void merge(const RttTable& other);

  const std::vector<RttSample>& samples() const noexcept { return samples_; }
  std::vector<RttSample> samples_for(const Domain& d) const;
  std::vector<Domain> domains() const;
  std::vector<VantageId> vantages() const;
  bool empty() const noexcept { return samples_.empty(); }
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  std::vector<RttSample> samples_;
  std::set<std::tuple<std::string, std::string, std::int64_t>> keys_;
};

/// Gilbert-Elliott two-state loss chain parameters.
struct GeParams {
  GeParams(double p, double r, double one_minus_h, double one_minus_k);

  double p;            // good -> bad
  double r;            // bad -> good
  double one_minus_h;  // loss probability in the bad state
  double one_minus_k;  // loss probability in the good state
};

struct NoLoss {};

struct UniformLoss {
  explicit UniformLoss(double r);
  double rate;
};

using LossModel = std::variant<NoLoss, UniformLoss, GeParams>;

/// Emulated network path.
struct LinkSpec {
  LinkSpec(double rtt_s, double bandwidth_bps, LossModel loss = NoLoss{},
           int init_cwnd_segments = 10, int mss_bytes = 1460);

  double rtt_s;
  double bandwidth_bps;
  LossModel loss;
  int init_cwnd_segments;
  int mss_bytes;

  double init_cwnd_bytes() const { return double(init_cwnd_segments) * mss_bytes; }
  double bdp_bytes() const { return bandwidth_bps * rtt_s / 8.0; }
};

/// Stationary average loss probability of the chain. With p = 0 the chain
/// never leaves the good state and the result is one_minus_k.
double ge_stationary_loss(const GeParams& g);

/// The four bursty parameter sets that all average to 1.6% loss.
std::array<GeParams, 4> bursty_ge_sets();

}  // namespace cgn
