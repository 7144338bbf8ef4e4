#pragma once

// Latency census: handshake probing, min-over-vantage aggregation, stability
// diffs between measurement rounds, byte-weighted mean RTT, and hosting
// provider shares.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cgn/core.hpp"
#include "cgn/net.hpp"

namespace cgn::census {

class UnresolvableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every attempt failed or timed out.
class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingDomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class UndefinedWeightError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct ProbeConfig {
  int timeout_ms = 1000;
  int attempts = 3;
  std::uint16_t port = 80;
  int inter_probe_gap_ms = 0;

  void validate() const;
};

/// What probing needs from the outside world. Tests substitute fakes or
/// wrappers that inject delay.
class Network {
 public:
  virtual ~Network() = default;
  virtual std::vector<net::SocketAddress> resolve(const std::string& host, std::uint16_t port) = 0;
  /// Times one TCP handshake. nullopt when the attempt fails or times out.
  virtual std::optional<double> handshake_ms(const net::SocketAddress& addr,
                                             std::chrono::milliseconds timeout) = 0;
  virtual std::int64_t now_unix() = 0;
};

/// Real sockets and the system clock.
class SystemNetwork : public Network {
 public:
  std::vector<net::SocketAddress> resolve(const std::string& host, std::uint16_t port) override;
  std::optional<double> handshake_ms(const net::SocketAddress& addr,
                                     std::chrono::milliseconds timeout) override;
  std::int64_t now_unix() override;
};

/// Times up to cfg.attempts handshakes to the domain's first resolved
/// address. Failed attempts are omitted from the result.
std::vector<RttSample> probe_domain(const Domain& domain, const VantageId& vantage,
                                    const ProbeConfig& cfg, Network& net);

struct ProbeFailure {
  Domain domain;
  std::string reason;  // "unresolvable" or "unreachable"
};

struct CensusRun {
  RttTable table;  // one definitive sample per reachable domain
  std::vector<ProbeFailure> failures;
};

/// Probes every domain from one vantage with a bounded worker pool and keeps
/// the minimum of each domain's attempts.
CensusRun run_census(const std::vector<Domain>& domains, const VantageId& vantage,
                     const ProbeConfig& cfg, Network& net, int workers);

struct MinRtt {
  VantageId vantage;
  double rtt_ms;
};

/// Smallest sample for the domain across all vantages; ties go to the
/// lexicographically smallest vantage id.
MinRtt min_rtt(const RttTable& table, const Domain& domain);

/// Minimum of repeated samples for one (domain, vantage).
double definitive_rtt(const std::vector<RttSample>& samples);

struct DomainChange {
  Domain domain;
  double change_ms;
};

struct StabilityReport {
  std::vector<DomainChange> changes;  // sorted by domain
  std::vector<Domain> missing;        // paired domains absent from either table
  double median_ms = 0.0;
  double p80_ms = 0.0;
};

StabilityReport stability_diff(const RttTable& before, const RttTable& after,
                               const std::map<Domain, VantageId>& pairing);

struct WeightedRtt {
  Domain domain;
  std::uint64_t bytes;
  double rtt_ms;
};

/// Sum(bytes * rtt) / Sum(bytes).
double mean_weighted_rtt(const std::vector<WeightedRtt>& entries);

struct OrgTable {
  std::vector<std::pair<Domain, std::string>> rows;
  std::map<std::string, std::string> alias_map;  // alias -> canonical organization

  /// Throws if a canonical name is itself aliased to something else.
  void validate() const;
  std::string canonical(const std::string& org) const;
};

struct ProviderShare {
  std::string organization;
  double fraction;
};

/// Top-k organizations by share of domains with a non-empty orgname.
std::vector<ProviderShare> provider_share(const OrgTable& table, std::size_t top_k);

struct GeoPoint {
  double lat;
  double lon;
};

struct LocationAggregate {
  double lat;  // rounded to one decimal degree
  double lon;
  std::size_t domain_count;
  double mean_rtt_ms;
};

/// Groups domains by rounded location and averages their min RTT. Domains
/// without samples are skipped.
std::vector<LocationAggregate> location_aggregates(const RttTable& table,
                                                   const std::map<Domain, GeoPoint>& geo);

// File formats.
std::vector<Domain> parse_targets(std::string_view text);
RttTable parse_rtt_csv(std::string_view text);
std::string format_rtt_csv(const RttTable& table);
std::map<Domain, GeoPoint> parse_geo_csv(std::string_view text);
OrgTable parse_org_csv(std::string_view orgs, std::string_view aliases);
std::string format_location_csv(const std::vector<LocationAggregate>& rows);

}  // namespace cgn::census
