#pragma once

// Domain -> gathering proxy mapping: the small text file clients download.
//
//   cgnmap v1 built_at=<unix>
//   !proxy <id> <host:port>           (sorted by id)
//   <domain>,<proxy_id>,<rtt_ms>,<measured_at>   (sorted by domain, rtt 3dp)

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cgn/core.hpp"
#include "cgn/net.hpp"

namespace cgn::mapping {

inline constexpr int kFormatVersion = 1;

class VersionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct ProxyEndpoint {
  VantageId proxy_id;
  net::HostPort address;

  bool operator==(const ProxyEndpoint& o) const {
    return proxy_id == o.proxy_id && address.host == o.address.host && address.port == o.address.port;
  }
};

struct MappingEntry {
  Domain domain;
  VantageId proxy_id;
  double rtt_ms;
  std::int64_t measured_at;

  bool operator==(const MappingEntry&) const = default;
};

class MappingTable {
 public:
  MappingTable(std::int64_t built_at, std::vector<ProxyEndpoint> endpoints,
               std::vector<MappingEntry> entries, int version = kFormatVersion);

  int version() const noexcept { return version_; }
  std::int64_t built_at() const noexcept { return built_at_; }
  const std::vector<ProxyEndpoint>& endpoints() const noexcept { return endpoints_; }
  const std::vector<MappingEntry>& entries() const noexcept { return entries_; }

  const ProxyEndpoint* endpoint(const VantageId& id) const;
  const MappingEntry* entry(const Domain& d) const;

  bool operator==(const MappingTable&) const = default;

 private:
  int version_;
  std::int64_t built_at_;
  std::vector<ProxyEndpoint> endpoints_;  // sorted by id
  std::vector<MappingEntry> entries_;     // sorted by domain
};

/// One entry per domain: the vantage with the smallest definitive RTT
/// (ties to the smaller id), stamped with that pair's latest measurement.
/// RTTs are rounded to the file's 3-decimal resolution.
MappingTable build(const RttTable& table, std::vector<ProxyEndpoint> endpoints, std::int64_t now);

std::string serialize(const MappingTable& table);
/// Strict parse: any malformed line (including an unterminated last line) is
/// a ParseError carrying its line number.
MappingTable parse(std::string_view text);

struct Fresh {
  ProxyEndpoint endpoint;
};
struct Stale {
  ProxyEndpoint endpoint;
};
struct Miss {};
using LookupResult = std::variant<Fresh, Stale, Miss>;

/// Exact-domain lookup; entries older than max_age_s are Stale but still usable.
LookupResult lookup(const MappingTable& table, const Domain& host, std::int64_t max_age_s,
                    std::int64_t now);

/// Endpoint list CSV: proxy_id,address
std::vector<ProxyEndpoint> parse_endpoints_csv(std::string_view text);

}  // namespace cgn::mapping
