#include "cgn/census.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>

#include "cgn/io.hpp"
#include "cgn/kernels.hpp"
#include "cgn/stats.hpp"

namespace cgn::census {

void ProbeConfig::validate() const {
  if (timeout_ms < 1) throw ValidationError("timeout_ms must be >= 1");
  if (attempts < 1) throw ValidationError("attempts must be >= 1");
  if (inter_probe_gap_ms < 0) throw ValidationError("inter_probe_gap_ms must be >= 0");
}

std::vector<net::SocketAddress> SystemNetwork::resolve(const std::string& host, std::uint16_t port) {
  return net::resolve(host, port);
}

std::optional<double> SystemNetwork::handshake_ms(const net::SocketAddress& addr,
                                                  std::chrono::milliseconds timeout) {
  auto t0 = std::chrono::steady_clock::now();
  try {
    auto s = net::connect(addr, timeout);
  } catch (const net::NetError&) {
    return std::nullopt;
  }
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::int64_t SystemNetwork::now_unix() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::vector<RttSample> probe_domain(const Domain& domain, const VantageId& vantage,
                                    const ProbeConfig& cfg, Network& net) {
  cfg.validate();
  auto addrs = net.resolve(domain.str(), cfg.port);
  if (addrs.empty()) throw UnresolvableError("cannot resolve " + domain.str());
  std::vector<RttSample> out;
  for (int i = 0; i < cfg.attempts; ++i) {
    if (i > 0 && cfg.inter_probe_gap_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg.inter_probe_gap_ms));
    }
    if (auto ms = net.handshake_ms(addrs.front(), std::chrono::milliseconds(cfg.timeout_ms))) {
      out.emplace_back(domain, vantage, *ms, net.now_unix());
    }
  }
  if (out.empty()) throw UnreachableError(domain.str() + ": all " + std::to_string(cfg.attempts) +
                                          " attempts failed");
  return out;
}

CensusRun run_census(const std::vector<Domain>& domains, const VantageId& vantage,
                     const ProbeConfig& cfg, Network& net, int workers) {
  cfg.validate();
  if (workers < 1) throw ValidationError("workers must be >= 1");
  // Slots keep the merged result in input order regardless of scheduling.
  std::vector<std::optional<RttSample>> results(domains.size());
  std::vector<std::optional<std::string>> errors(domains.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < domains.size(); i = next++) {
      try {
        auto samples = probe_domain(domains[i], vantage, cfg, net);
        RttSample best = samples.front();
        best.rtt_ms = definitive_rtt(samples);
        best.measured_at = samples.back().measured_at;
        results[i] = best;
      } catch (const UnresolvableError&) {
        errors[i] = "unresolvable";
      } catch (const UnreachableError&) {
        errors[i] = "unreachable";
      }
    }
  };
  std::vector<std::jthread> pool;
  int n = std::min<int>(workers, int(std::max<std::size_t>(1, domains.size())));
  for (int w = 0; w < n; ++w) pool.emplace_back(work);
  pool.clear();

  CensusRun run;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (results[i]) {
      run.table.add(*results[i]);
    } else if (errors[i]) {
      run.failures.push_back({domains[i], *errors[i]});
    }
  }
  return run;
}

MinRtt min_rtt(const RttTable& table, const Domain& domain) {
  const RttSample* best = nullptr;
  for (const auto& s : table.samples()) {
    if (s.domain != domain) continue;
    if (best == nullptr || s.rtt_ms < best->rtt_ms ||
        (s.rtt_ms == best->rtt_ms && s.vantage < best->vantage)) {
      best = &s;
    }
  }
  if (best == nullptr) throw MissingDomainError("no samples for " + domain.str());
  return {best->vantage, best->rtt_ms};
}

double definitive_rtt(const std::vector<RttSample>& samples) {
  if (samples.empty()) throw ValidationError("definitive_rtt of an empty sample list");
  const auto& first = samples.front();
  double best = first.rtt_ms;
  for (const auto& s : samples) {
    if (s.domain != first.domain || s.vantage != first.vantage) {
      throw ValidationError("definitive_rtt expects samples of a single (domain, vantage)");
    }
    best = std::min(best, s.rtt_ms);
  }
  return best;
}

namespace {

std::optional<double> paired_value(const RttTable& t, const Domain& d, const VantageId& v) {
  std::optional<double> best;
  for (const auto& s : t.samples()) {
    if (s.domain == d && s.vantage == v) best = best ? std::min(*best, s.rtt_ms) : s.rtt_ms;
  }
  return best;
}

}  // namespace

StabilityReport stability_diff(const RttTable& before, const RttTable& after,
                               const std::map<Domain, VantageId>& pairing) {
  StabilityReport report;
  std::vector<double> b, a;
  std::vector<Domain> present;
  for (const auto& [domain, vantage] : pairing) {
    auto vb = paired_value(before, domain, vantage);
    auto va = paired_value(after, domain, vantage);
    if (!vb || !va) {
      report.missing.push_back(domain);
      continue;
    }
    b.push_back(*vb);
    a.push_back(*va);
    present.push_back(domain);
  }
  if (present.empty()) throw ValidationError("stability_diff: no domain measured in both tables");
  std::vector<double> change(present.size());
  kernels::abs_diff(change, a, b);
  for (std::size_t i = 0; i < present.size(); ++i) report.changes.push_back({present[i], change[i]});
  report.median_ms = nearest_rank(change, 0.5);
  report.p80_ms = nearest_rank(change, 0.8);
  return report;
}

double mean_weighted_rtt(const std::vector<WeightedRtt>& entries) {
  std::vector<double> w, x;
  w.reserve(entries.size());
  x.reserve(entries.size());
  for (const auto& e : entries) {
    if (!(e.rtt_ms >= 0.0)) throw ValidationError("rtt_ms must be non-negative");
    w.push_back(double(e.bytes));
    x.push_back(e.rtt_ms);
  }
  auto sums = kernels::weighted_sums(w, x);
  if (!(sums.weight > 0.0)) throw UndefinedWeightError("mean_weighted_rtt: total bytes is zero");
  return sums.weighted_value / sums.weight;
}

void OrgTable::validate() const {
  for (const auto& [alias, canon] : alias_map) {
    auto it = alias_map.find(canon);
    if (it != alias_map.end() && it->second != canon) {
      throw ValidationError("alias map is not idempotent: '" + canon + "' maps to '" + it->second + "'");
    }
  }
}

std::string OrgTable::canonical(const std::string& org) const {
  auto it = alias_map.find(org);
  return it == alias_map.end() ? org : it->second;
}

std::vector<ProviderShare> provider_share(const OrgTable& table, std::size_t top_k) {
  if (top_k == 0) throw ValidationError("top_k must be positive");
  table.validate();
  std::map<std::string, std::size_t> counts;
  std::set<Domain> seen;
  std::size_t valid = 0;
  for (const auto& [domain, org] : table.rows) {
    if (org.empty() || !seen.insert(domain).second) continue;
    ++counts[table.canonical(org)];
    ++valid;
  }
  if (valid == 0) throw ValidationError("provider_share: no domains with a valid orgname");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  std::vector<ProviderShare> out;
  for (std::size_t i = 0; i < ranked.size() && i < top_k; ++i) {
    out.push_back({ranked[i].first, double(ranked[i].second) / double(valid)});
  }
  return out;
}

std::vector<LocationAggregate> location_aggregates(const RttTable& table,
                                                   const std::map<Domain, GeoPoint>& geo) {
  // Keyed by tenths of a degree to avoid floating-point grouping surprises.
  std::map<std::pair<long, long>, std::pair<std::size_t, double>> groups;
  for (const auto& domain : table.domains()) {
    auto it = geo.find(domain);
    if (it == geo.end()) continue;
    double rtt = min_rtt(table, domain).rtt_ms;
    auto key = std::make_pair(std::lround(it->second.lat * 10.0), std::lround(it->second.lon * 10.0));
    auto& g = groups[key];
    g.first += 1;
    g.second += rtt;
  }
  std::vector<LocationAggregate> out;
  for (const auto& [key, g] : groups) {
    out.push_back({double(key.first) / 10.0, double(key.second) / 10.0, g.first, g.second / double(g.first)});
  }
  return out;
}

std::vector<Domain> parse_targets(std::string_view text) {
  std::vector<Domain> out;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    if (line.empty()) continue;
    try {
      out.emplace_back(line);
    } catch (const ValidationError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

RttTable parse_rtt_csv(std::string_view text) {
  auto doc = io::parse_csv(text, {"domain", "vantage", "rtt_ms", "measured_at"});
  auto cd = doc.column("domain"), cv = doc.column("vantage"), cr = doc.column("rtt_ms"),
       ct = doc.column("measured_at");
  RttTable table;
  for (const auto& row : doc.rows) {
    try {
      table.add(RttSample(Domain(row.fields[cd]), VantageId(row.fields[cv]),
                          io::parse_double(row.fields[cr], row.line),
                          io::parse_int(row.fields[ct], row.line)));
    } catch (const ParseError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ParseError(row.line, e.what());
    }
  }
  return table;
}

std::string format_rtt_csv(const RttTable& table) {
  auto rows = table.samples();
  std::sort(rows.begin(), rows.end(), [](const RttSample& x, const RttSample& y) {
    return std::tie(x.domain, x.vantage, x.measured_at) < std::tie(y.domain, y.vantage, y.measured_at);
  });
  std::string out = "domain,vantage,rtt_ms,measured_at\n";
  for (const auto& s : rows) {
    out += s.domain.str() + "," + s.vantage.str() + "," + io::fixed(s.rtt_ms, 3) + "," +
           std::to_string(s.measured_at) + "\n";
  }
  return out;
}

std::map<Domain, GeoPoint> parse_geo_csv(std::string_view text) {
  auto doc = io::parse_csv(text, {"domain", "lat", "lon"});
  auto cd = doc.column("domain"), ca = doc.column("lat"), co = doc.column("lon");
  std::map<Domain, GeoPoint> out;
  for (const auto& row : doc.rows) {
    out.insert_or_assign(Domain(row.fields[cd]), GeoPoint{io::parse_double(row.fields[ca], row.line),
                                                          io::parse_double(row.fields[co], row.line)});
  }
  return out;
}

OrgTable parse_org_csv(std::string_view orgs, std::string_view aliases) {
  OrgTable t;
  auto doc = io::parse_csv(orgs, {"domain", "orgname"});
  auto cd = doc.column("domain"), co = doc.column("orgname");
  for (const auto& row : doc.rows) t.rows.emplace_back(Domain(row.fields[cd]), row.fields[co]);
  if (!aliases.empty()) {
    auto ad = io::parse_csv(aliases, {"alias", "canonical"});
    auto ca = ad.column("alias"), cc = ad.column("canonical");
    for (const auto& row : ad.rows) t.alias_map[row.fields[ca]] = row.fields[cc];
  }
  t.validate();
  return t;
}

std::string format_location_csv(const std::vector<LocationAggregate>& rows) {
  std::string out = "lat,lon,domain_count,mean_rtt_ms\n";
  for (const auto& r : rows) {
    out += io::fixed(r.lat, 1) + "," + io::fixed(r.lon, 1) + "," + std::to_string(r.domain_count) + "," +
           io::fixed(r.mean_rtt_ms, 3) + "\n";
  }
  return out;
}

}  // namespace cgn::census
