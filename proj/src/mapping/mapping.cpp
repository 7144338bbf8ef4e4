#include "cgn/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cgn/io.hpp"

namespace cgn::mapping {

MappingTable::MappingTable(std::int64_t built_at, std::vector<ProxyEndpoint> endpoints,
                           std::vector<MappingEntry> entries, int version)
    : version_(version), built_at_(built_at), endpoints_(std::move(endpoints)), entries_(std::move(entries)) {
  std::sort(endpoints_.begin(), endpoints_.end(),
            [](const auto& a, const auto& b) { return a.proxy_id < b.proxy_id; });
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.domain < b.domain; });
  for (std::size_t i = 0; i < endpoints_.size(); ++i) {
    if (endpoints_[i].address.port == 0) {
      throw ValidationError("proxy " + endpoints_[i].proxy_id.str() + " has port 0");
    }
    if (i > 0 && endpoints_[i].proxy_id == endpoints_[i - 1].proxy_id) {
      throw ValidationError("duplicate proxy id " + endpoints_[i].proxy_id.str());
    }
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (i > 0 && e.domain == entries_[i - 1].domain) throw ValidationError("duplicate entry for " + e.domain.str());
    if (!(e.rtt_ms >= 0.0)) throw ValidationError("negative rtt for " + e.domain.str());
    if (endpoint(e.proxy_id) == nullptr) {
      throw ValidationError("entry " + e.domain.str() + " names unknown proxy " + e.proxy_id.str());
    }
  }
}

const ProxyEndpoint* MappingTable::endpoint(const VantageId& id) const {
  auto it = std::lower_bound(endpoints_.begin(), endpoints_.end(), id,
                             [](const ProxyEndpoint& e, const VantageId& v) { return e.proxy_id < v; });
  return it != endpoints_.end() && it->proxy_id == id ? &*it : nullptr;
}

const MappingEntry* MappingTable::entry(const Domain& d) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), d,
                             [](const MappingEntry& e, const Domain& x) { return e.domain < x; });
  return it != entries_.end() && it->domain == d ? &*it : nullptr;
}

MappingTable build(const RttTable& table, std::vector<ProxyEndpoint> endpoints, std::int64_t now) {
  if (table.empty()) throw ValidationError("cannot build a mapping from an empty RTT table");
  std::set<VantageId> known;
  for (const auto& e : endpoints) known.insert(e.proxy_id);
  // (domain, vantage) -> (definitive rtt, latest measured_at)
  std::map<std::pair<Domain, VantageId>, std::pair<double, std::int64_t>> pairs;
  for (const auto& s : table.samples()) {
    if (!known.count(s.vantage)) throw ValidationError("vantage " + s.vantage.str() + " has no endpoint");
    auto [it, inserted] = pairs.try_emplace({s.domain, s.vantage}, s.rtt_ms, s.measured_at);
    if (!inserted) {
      it->second.first = std::min(it->second.first, s.rtt_ms);
      it->second.second = std::max(it->second.second, s.measured_at);
    }
  }
  std::vector<MappingEntry> entries;
  double best_raw = 0.0;
  // Map order visits one domain's vantages in id order, so strict '<' keeps the smaller id on ties.
  for (const auto& [key, val] : pairs) {
    const auto& [domain, vantage] = key;
    const MappingEntry e{domain, vantage, std::round(val.first * 1000.0) / 1000.0, val.second};
    if (entries.empty() || entries.back().domain != domain) {
      entries.push_back(e);
      best_raw = val.first;
    } else if (val.first < best_raw) {
      entries.back() = e;
      best_raw = val.first;
    }
  }
  return MappingTable(now, std::move(endpoints), std::move(entries));
}

std::string serialize(const MappingTable& table) {
  std::string out = "cgnmap v" + std::to_string(table.version()) + " built_at=" + std::to_string(table.built_at()) + "\n";
  for (const auto& e : table.endpoints()) out += "!proxy " + e.proxy_id.str() + " " + e.address.str() + "\n";
  for (const auto& e : table.entries()) {
    out += e.domain.str() + "," + e.proxy_id.str() + "," + io::fixed(e.rtt_ms, 3) + "," +
           std::to_string(e.measured_at) + "\n";
  }
  return out;
}

MappingTable parse(std::string_view text) {
  if (text.empty()) throw ParseError(1, "empty mapping file");
  if (text.back() != '\n') {
    auto lines = std::size_t(std::count(text.begin(), text.end(), '\n')) + 1;
    throw ParseError(lines, "unterminated last line (truncated file?)");
  }
  std::vector<ProxyEndpoint> endpoints;
  std::vector<MappingEntry> entries;
  std::int64_t built_at = 0;
  int version = 0;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      constexpr std::string_view kMagic = "cgnmap v";
      if (line.substr(0, kMagic.size()) != kMagic) throw ParseError(1, "missing cgnmap header");
      auto sp = line.find(' ', kMagic.size());
      if (sp == std::string_view::npos) throw ParseError(1, "malformed header");
      version = int(io::parse_int(line.substr(kMagic.size(), sp - kMagic.size()), 1));
      if (version != kFormatVersion) throw VersionError("unsupported mapping version " + std::to_string(version));
      auto rest = line.substr(sp + 1);
      constexpr std::string_view kBuilt = "built_at=";
      if (rest.substr(0, kBuilt.size()) != kBuilt) throw ParseError(1, "missing built_at");
      built_at = io::parse_int(rest.substr(kBuilt.size()), 1);
      continue;
    }
    try {
      if (!line.empty() && line.front() == '!') {
        constexpr std::string_view kProxy = "!proxy ";
        if (line.substr(0, kProxy.size()) != kProxy) throw ParseError(line_no, "unknown directive");
        auto rest = line.substr(kProxy.size());
        auto sp = rest.find(' ');
        if (sp == std::string_view::npos || rest.find(' ', sp + 1) != std::string_view::npos) {
          throw ParseError(line_no, "expected '!proxy <id> <host:port>'");
        }
        endpoints.push_back({VantageId(rest.substr(0, sp)), net::HostPort::parse(rest.substr(sp + 1))});
        continue;
      }
      auto f = io::split_csv_line(line);
      if (f.size() != 4) throw ParseError(line_no, "expected domain,proxy_id,rtt_ms,measured_at");
      entries.push_back({Domain(f[0]), VantageId(f[1]), io::parse_double(f[2], line_no),
                         io::parse_int(f[3], line_no)});
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  try {
    return MappingTable(built_at, std::move(endpoints), std::move(entries), version);
  } catch (const ParseError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ParseError(line_no, e.what());
  }
}

LookupResult lookup(const MappingTable& table, const Domain& host, std::int64_t max_age_s, std::int64_t now) {
  const auto* e = table.entry(host);
  if (e == nullptr) return Miss{};
  const auto* ep = table.endpoint(e->proxy_id);
  if (ep == nullptr) return Miss{};
  if (now - e->measured_at <= max_age_s) return Fresh{*ep};
  return Stale{*ep};
}

std::vector<ProxyEndpoint> parse_endpoints_csv(std::string_view text) {
  auto doc = io::parse_csv(text, {"proxy_id", "address"});
  auto ci = doc.column("proxy_id"), ca = doc.column("address");
  std::vector<ProxyEndpoint> out;
  for (const auto& row : doc.rows) {
    try {
      out.push_back({VantageId(row.fields[ci]), net::HostPort::parse(row.fields[ca])});
    } catch (const ValidationError& e) {
      throw ParseError(row.line, e.what());
    }
  }
  return out;
}

}  // namespace cgn::mapping
