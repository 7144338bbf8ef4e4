#include "cgn/pagesim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

#include "cgn/stats.hpp"

namespace cgn::pagesim {
namespace {

std::string host_of(const std::string& url) {
  auto start = url.find("://");
  start = start == std::string::npos ? 0 : start + 3;
  auto end = url.find_first_of(":/?#", start);
  return url.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

struct Graph {
  std::vector<std::optional<std::size_t>> parent;
  std::vector<std::vector<std::size_t>> children;
  std::vector<int> depth;
  std::size_t root = 0;
  std::vector<std::size_t> bfs;  // depth-major, page order within a level
};

Graph analyze(const PageSpec& page) {
  page.validate();
  Graph g;
  const std::size_t n = page.resources.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[page.resources[i].url] = i;
  g.parent.resize(n);
  g.children.resize(n);
  g.depth.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (const auto& p = page.resources[i].depends_on) {
      g.parent[i] = index.at(*p);
      g.children[*g.parent[i]].push_back(i);
    } else {
      g.root = i;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    int d = 0;
    for (auto p = g.parent[i]; p; p = g.parent[*p]) ++d;
    g.depth[i] = d;
  }
  g.bfs.resize(n);
  std::iota(g.bfs.begin(), g.bfs.end(), 0);
  std::stable_sort(g.bfs.begin(), g.bfs.end(), [&](auto a, auto b) { return g.depth[a] < g.depth[b]; });
  return g;
}

void finish_metrics(const PageSpec& page, LoadTrace& trace) {
  trace.full_load_s = 0.0;
  std::vector<std::pair<double, std::uint64_t>> visual;
  std::uint64_t visual_total = 0;
  trace.total_bytes = 0;
  for (std::size_t i = 0; i < page.resources.size(); ++i) {
    const auto& r = page.resources[i];
    trace.full_load_s = std::max(trace.full_load_s, trace.timings[i].complete_t);
    trace.total_bytes += r.size_bytes;
    if (r.visual) {
      visual.emplace_back(trace.timings[i].complete_t, r.size_bytes);
      visual_total += r.size_bytes;
    }
  }
  if (visual_total == 0) {
    trace.viz85_s = trace.full_load_s;
    return;
  }
  std::sort(visual.begin(), visual.end());
  const double target = kVisualThreshold * double(visual_total);
  double cum = 0.0;
  for (const auto& [t, b] : visual) {
    cum += double(b);
    if (cum >= target) {
      trace.viz85_s = t;
      return;
    }
  }
  trace.viz85_s = visual.back().first;
}

// Connection-pool simulation shared by the default and CDN modes. Every
// connection steps its transfer round by round; a round waits one rtt and
// then sends its bytes. With a shared link the bytes queue behind other
// connections' rounds in arrival order; otherwise they go out at once.
LoadTrace simulate_pools(const PageSpec& page, const Scenario& sc, const Graph& g,
                         const std::vector<bool>& via_cdn) {
  struct Link {
    const LinkSpec* spec;
    netem::LossStream* loss;
    double free_at = 0.0;
  };
  // Connections are capped per hostname, as in a browser. Each connection is
  // bound to the link it was opened on; reusing an idle one for the other link
  // means reopening it, which costs a fresh handshake.
  struct Pool {
    std::vector<Link*> conn_link;
    std::vector<bool> busy;
    std::deque<std::size_t> queue;
  };
  const std::size_t n = page.resources.size();
  netem::LossStream server_loss(sc.client_server.loss, sc.seed);
  std::optional<netem::LossStream> cdn_loss;
  if (sc.client_cdn) cdn_loss.emplace(sc.client_cdn->loss, sc.seed);
  Link server_link{&sc.client_server, &server_loss};
  Link cdn_link{sc.client_cdn ? &*sc.client_cdn : nullptr, cdn_loss ? &*cdn_loss : nullptr};

  std::map<std::string, Pool> pools;
  std::vector<std::string> pool_of(n);
  std::vector<Link*> link_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    pool_of[i] = host_of(page.resources[i].url);
    link_of[i] = via_cdn[i] ? &cdn_link : &server_link;
    pools[pool_of[i]];
  }

  LoadTrace trace;
  trace.timings.assign(n, ResourceTiming{0, 0, 0});
  std::vector<std::optional<netem::RoundModel>> transfer(n);
  std::vector<std::size_t> conn_of(n, 0);
  std::vector<bool> started(n, false);

  enum class Kind { RoundReady, Complete };
  using Event = std::tuple<double, std::uint64_t, Kind, std::size_t>;  // time, tie-break, kind, resource
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::uint64_t seq = 0;

  auto dispatch = [&](const std::string& key, double now) {
    Pool& pool = pools[key];
    while (!pool.queue.empty()) {
      const std::size_t r = pool.queue.front();
      Link* link = link_of[r];
      std::optional<std::size_t> slot;
      bool handshake = false;
      for (std::size_t c = 0; c < pool.busy.size() && !slot; ++c) {
        if (!pool.busy[c] && pool.conn_link[c] == link) slot = c;
      }
      if (!slot && int(pool.busy.size()) < sc.parallel_conns_per_origin) {
        pool.busy.push_back(false);
        pool.conn_link.push_back(link);
        slot = pool.busy.size() - 1;
        handshake = true;
      }
      for (std::size_t c = 0; c < pool.busy.size() && !slot; ++c) {
        if (!pool.busy[c]) {
          pool.conn_link[c] = link;
          slot = c;
          handshake = true;
        }
      }
      if (!slot) break;
      pool.busy[*slot] = true;
      pool.queue.pop_front();
      conn_of[r] = *slot;
      const auto& spec = *link->spec;
      const double start = now + (handshake ? spec.rtt_s : 0.0);
      transfer[r].emplace(page.resources[r].size_bytes, spec, sc.origin_congestion, spec.init_cwnd_bytes());
      events.emplace(start + spec.rtt_s, seq++, Kind::RoundReady, r);
    }
  };

  trace.timings[g.root].request_t = 0.0;
  pools[pool_of[g.root]].queue.push_back(g.root);
  dispatch(pool_of[g.root], 0.0);
  while (!events.empty()) {
    auto [t, tie, kind, r] = events.top();
    events.pop();
    Pool& pool = pools[pool_of[r]];
    if (kind == Kind::RoundReady) {
      Link& link = *link_of[r];
      const auto round = transfer[r]->next(*link.loss);
      const double begin = sc.shared_link ? std::max(t, link.free_at) : t;
      const double end = begin + round.bytes * 8.0 / link.spec->bandwidth_bps;
      link.free_at = end;
      if (!started[r]) {
        started[r] = true;
        trace.timings[r].first_byte_t = begin;
      }
      if (transfer[r]->done()) {
        events.emplace(end + round.penalty_s, seq++, Kind::Complete, r);
      } else {
        events.emplace(end + round.penalty_s + link.spec->rtt_s, seq++, Kind::RoundReady, r);
      }
      continue;
    }
    trace.timings[r].complete_t = t;
    pool.busy[conn_of[r]] = false;
    std::set<std::string> touched{pool_of[r]};
    for (auto c : g.children[r]) {
      trace.timings[c].request_t = t;
      pools[pool_of[c]].queue.push_back(c);
      touched.insert(pool_of[c]);
    }
    for (const auto& key : touched) dispatch(key, t);
  }
  finish_metrics(page, trace);
  return trace;
}

LoadTrace simulate_cgn(const PageSpec& page, const Scenario& sc, const Graph& g) {
  const LinkSpec& link = sc.client_proxy ? *sc.client_proxy : sc.client_server;
  const std::size_t n = page.resources.size();
  const std::uint64_t total = page.total_bytes();
  const int levels = 1 + *std::max_element(g.depth.begin(), g.depth.end());

  double start = sc.zero_rtt ? 0.0 : link.rtt_s;  // handshake unless resumed
  start += 0.5 * link.rtt_s;                       // request reaches the proxy
  start += levels * sc.proxy_server_rtt_s + sc.proxy_overhead_s;
  start += sc.compression.compute_s_per_mb * double(total) / 1e6;

  const auto wire = std::uint64_t(std::ceil(double(total) * sc.compression.ratio));
  const double cwnd = sc.cwnd_hint_bytes > 0 ? double(sc.cwnd_hint_bytes) : link.init_cwnd_bytes();
  netem::LossStream loss(link.loss, sc.seed);
  const double xfer = netem::transfer_time(wire, link, loss, sc.congestion, cwnd);

  LoadTrace trace;
  trace.timings.assign(n, ResourceTiming{0, 0, 0});
  std::vector<double> arrive_first(n), arrive_done(n);
  std::uint64_t cum = 0;
  for (auto r : g.bfs) {
    arrive_first[r] = start + xfer * double(cum) / double(total);
    cum += page.resources[r].size_bytes;
    arrive_done[r] = start + xfer * double(cum) / double(total);
  }
  // The browser asks for a child once its parent is complete; by then the
  // bytes are usually already in the local store.
  for (auto r : g.bfs) {
    const double req = g.parent[r] ? trace.timings[*g.parent[r]].complete_t : 0.0;
    trace.timings[r].request_t = req;
    trace.timings[r].first_byte_t = std::max(req, arrive_first[r]);
    trace.timings[r].complete_t = std::max(req, arrive_done[r]);
  }
  finish_metrics(page, trace);
  return trace;
}

double lognormal_weight(netem::Rng& rng, double sigma) {
  double u1 = netem::unit(rng), u2 = netem::unit(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  return std::exp(sigma * z);
}

}  // namespace

std::string_view kind_name(ResourceKind k) {
  switch (k) {
    case ResourceKind::Html: return "html";
    case ResourceKind::Css: return "css";
    case ResourceKind::Js: return "js";
    case ResourceKind::Img: return "img";
    case ResourceKind::Ad: return "ad";
  }
  return "?";
}

ResourceKind parse_kind(std::string_view s) {
  for (auto k : {ResourceKind::Html, ResourceKind::Css, ResourceKind::Js, ResourceKind::Img, ResourceKind::Ad}) {
    if (kind_name(k) == s) return k;
  }
  throw ValidationError("unknown resource kind '" + std::string(s) + "'");
}

std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::Default: return "default";
    case Mode::Cgn: return "cgn";
    case Mode::CdnImages: return "cdn_images";
    case Mode::Cdn90: return "cdn_90";
    case Mode::CdnAll: return "cdn_all";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  for (auto m : {Mode::Default, Mode::Cgn, Mode::CdnImages, Mode::Cdn90, Mode::CdnAll}) {
    if (mode_name(m) == s) return m;
  }
  throw ValidationError("unknown mode '" + std::string(s) + "' (default|cgn|cdn_images|cdn_90|cdn_all)");
}

void PageSpec::validate() const {
  if (resources.empty()) throw ValidationError("page has no resources");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < resources.size(); ++i) {
    if (!index.emplace(resources[i].url, i).second) throw ValidationError("duplicate url " + resources[i].url);
    if (resources[i].size_bytes == 0) throw ValidationError("zero-size resource " + resources[i].url);
  }
  std::size_t roots = 0;
  for (const auto& r : resources) {
    if (!r.depends_on) {
      ++roots;
      if (r.kind != ResourceKind::Html) throw ValidationError("page root must be html: " + r.url);
    } else if (!index.count(*r.depends_on)) {
      throw ValidationError(r.url + " depends on unknown url " + *r.depends_on);
    }
  }
  if (roots != 1) throw ValidationError("page must have exactly one root, found " + std::to_string(roots));
  for (const auto& r : resources) {
    const Resource* cur = &r;
    for (std::size_t steps = 0; cur->depends_on; ++steps) {
      if (steps > resources.size()) throw ValidationError("dependency cycle through " + r.url);
      cur = &resources[index.at(*cur->depends_on)];
    }
  }
}

std::uint64_t PageSpec::total_bytes() const {
  std::uint64_t t = 0;
  for (const auto& r : resources) t += r.size_bytes;
  return t;
}

void Scenario::validate() const {
  if (parallel_conns_per_origin < 1) throw ValidationError("parallel_conns_per_origin must be >= 1");
  if (proxy_server_rtt_s < 0 || proxy_overhead_s < 0) throw ValidationError("proxy times must be >= 0");
  if (!(compression.ratio > 0) || compression.compute_s_per_mb < 0) throw ValidationError("bad compression knob");
  const bool cdn = mode == Mode::CdnImages || mode == Mode::Cdn90 || mode == Mode::CdnAll;
  if (cdn && !client_cdn) throw ValidationError("CDN modes need a client_cdn link");
  if (mode == Mode::Cgn) {
    const LinkSpec& l = client_proxy ? *client_proxy : client_server;
    if (cwnd_hint_bytes > 0 && cwnd_hint_bytes < std::uint64_t(l.mss_bytes)) {
      throw ValidationError("cwnd_hint_bytes must be at least one MSS");
    }
  }
}

LoadTrace simulate(const PageSpec& page, const Scenario& sc) {
  sc.validate();
  const Graph g = analyze(page);
  const std::size_t n = page.resources.size();
  if (sc.mode == Mode::Cgn) return simulate_cgn(page, sc, g);
  std::vector<bool> via_cdn(n, false);
  switch (sc.mode) {
    case Mode::CdnImages:
      for (std::size_t i = 0; i < n; ++i) via_cdn[i] = page.resources[i].kind == ResourceKind::Img;
      break;
    case Mode::Cdn90: {
      std::vector<std::size_t> idx(n);
      std::iota(idx.begin(), idx.end(), 0);
      netem::Rng rng(sc.seed ^ 0x9e3779b97f4a7c15ULL);
      for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng() % i]);
      const auto k = std::size_t(std::llround(0.9 * double(n)));
      for (std::size_t i = 0; i < k; ++i) via_cdn[idx[i]] = true;
      break;
    }
    case Mode::CdnAll: via_cdn.assign(n, true); break;
    default: break;
  }
  return simulate_pools(page, sc, g, via_cdn);
}

void validate_trace(const PageSpec& page, const LoadTrace& trace) {
  if (trace.timings.size() != page.resources.size()) throw ValidationError("trace size mismatch");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < page.resources.size(); ++i) index[page.resources[i].url] = i;
  for (std::size_t i = 0; i < page.resources.size(); ++i) {
    const auto& t = trace.timings[i];
    if (!(t.request_t <= t.first_byte_t && t.first_byte_t <= t.complete_t)) {
      throw ValidationError("timing order violated for " + page.resources[i].url);
    }
    if (const auto& p = page.resources[i].depends_on) {
      if (t.request_t < trace.timings[index.at(*p)].complete_t) {
        throw ValidationError(page.resources[i].url + " requested before its parent completed");
      }
    }
  }
}

PageSpec generate_page(const PageGenConfig& cfg) {
  if (cfg.n_resources < 1) throw ValidationError("n_resources must be >= 1");
  if (cfg.depth < 1) throw ValidationError("depth must be >= 1");
  if (cfg.total_bytes < cfg.n_resources) throw ValidationError("total_bytes is smaller than n_resources");
  if (cfg.ad_fraction < 0 || cfg.ad_fraction > 1) throw ValidationError("ad_fraction must be in [0,1]");

  netem::Rng rng(cfg.seed);
  PageSpec page;
  page.origin = "site" + std::to_string(cfg.seed) + ".test";
  const std::string origin = "http://" + page.origin;
  const std::string statics = "http://static." + page.origin;

  struct Draft {
    ResourceKind kind;
    int level;
    std::optional<std::size_t> parent;
    double weight;
  };
  std::vector<Draft> drafts{{ResourceKind::Html, 0, std::nullopt, 1.0}};
  const std::size_t rest = cfg.n_resources - 1;
  const auto n_ads = std::size_t(std::llround(cfg.ad_fraction * double(rest)));
  std::vector<ResourceKind> kinds;
  for (std::size_t i = 0; i < rest - n_ads; ++i) {
    const double u = netem::unit(rng);
    kinds.push_back(u < 0.10 ? ResourceKind::Css : u < 0.35 ? ResourceKind::Js : ResourceKind::Img);
  }
  // Containers first so every level has candidate parents before images pick.
  std::stable_sort(kinds.begin(), kinds.end(), [](auto a, auto b) {
    auto rank = [](ResourceKind k) { return k == ResourceKind::Img ? 1 : 0; };
    return rank(a) < rank(b);
  });
  auto pick_parent = [&](int level) -> std::optional<std::size_t> {
    std::vector<std::size_t> cands;
    for (std::size_t i = 0; i < drafts.size(); ++i) {
      auto k = drafts[i].kind;
      if (drafts[i].level == level && (k == ResourceKind::Html || k == ResourceKind::Css || k == ResourceKind::Js)) {
        cands.push_back(i);
      }
    }
    if (cands.empty()) return std::nullopt;
    return cands[rng() % cands.size()];
  };
  for (auto kind : kinds) {
    int level = 1;
    if (cfg.depth > 1 && netem::unit(rng) >= 0.5) level = 2 + int(rng() % std::uint64_t(cfg.depth - 1));
    std::optional<std::size_t> parent;
    while (!(parent = pick_parent(level - 1))) --level;
    drafts.push_back({kind, level, parent, lognormal_weight(rng, 0.8)});
  }
  for (std::size_t i = 0; i < n_ads; ++i) {
    int level = cfg.depth;
    std::optional<std::size_t> parent;
    while (!(parent = pick_parent(level - 1))) --level;
    drafts.push_back({ResourceKind::Ad, level, parent, lognormal_weight(rng, 0.8)});
  }

  // Byte budget: one byte each, the remainder split by category share and
  // then by weight within the category. Empty categories donate their share.
  const std::map<ResourceKind, double> share{{ResourceKind::Html, 0.05}, {ResourceKind::Css, 0.06},
                                             {ResourceKind::Js, 0.14},   {ResourceKind::Img, 0.72},
                                             {ResourceKind::Ad, 0.03}};
  std::map<ResourceKind, double> cat_weight;
  for (const auto& d : drafts) cat_weight[d.kind] += d.weight;
  double present_share = 0.0;
  for (const auto& [k, w] : cat_weight) present_share += share.at(k);
  const double spare = double(cfg.total_bytes - cfg.n_resources);
  std::vector<std::uint64_t> sizes(drafts.size(), 1);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::uint64_t assigned = cfg.n_resources;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    const double exact = spare * (share.at(drafts[i].kind) / present_share) *
                         (drafts[i].weight / cat_weight[drafts[i].kind]);
    const auto whole = std::uint64_t(std::floor(exact));
    sizes[i] += whole;
    assigned += whole;
    remainders.emplace_back(exact - double(whole), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < cfg.total_bytes; ++j, ++assigned) ++sizes[remainders[j % remainders.size()].second];

  // Emit in level order so parents precede children.
  std::vector<std::size_t> order(drafts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return drafts[a].level < drafts[b].level; });
  std::vector<std::string> urls(drafts.size());
  std::map<ResourceKind, int> counter;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    const int c = counter[drafts[i].kind]++;
    switch (drafts[i].kind) {
      case ResourceKind::Html: urls[i] = origin + "/"; break;
      case ResourceKind::Css: urls[i] = origin + "/css/s" + std::to_string(c) + ".css"; break;
      case ResourceKind::Js: urls[i] = origin + "/js/a" + std::to_string(c) + ".js"; break;
      case ResourceKind::Img:
        urls[i] = (c % 2 == 0 ? statics : origin) + "/img/i" + std::to_string(c) + ".jpg";
        break;
      case ResourceKind::Ad: urls[i] = "http://ads.adnet.test/slot" + std::to_string(c) + "?p=" + page.origin; break;
    }
  }
  for (auto i : order) {
    const auto& d = drafts[i];
    const bool visual = d.kind == ResourceKind::Html || d.kind == ResourceKind::Css || d.kind == ResourceKind::Img;
    page.resources.push_back({urls[i], d.kind, sizes[i], visual,
                              d.parent ? std::optional<std::string>(urls[*d.parent]) : std::nullopt});
  }
  return page;
}

std::vector<PageSpec> generate_pages(const PageGenConfig& cfg, std::size_t count) {
  std::vector<PageSpec> out;
  for (std::size_t i = 0; i < count; ++i) {
    PageGenConfig c = cfg;
    c.seed = cfg.seed + i;
    out.push_back(generate_page(c));
  }
  return out;
}

std::vector<double> RttGrid::points_ms() const {
  if (!(step_ms > 0) || stop_ms < start_ms || start_ms < 0) throw ValidationError("bad rtt grid");
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double v = start_ms + step_ms * i;
    if (v > stop_ms + 1e-9) break;
    out.push_back(v);
  }
  return out;
}

std::vector<SweepRow> sweep(const std::vector<PageSpec>& pages, const Scenario& base, const std::vector<Mode>& modes,
                            const RttGrid& grid, GridTarget target) {
  if (pages.empty()) throw ValidationError("sweep needs at least one page");
  if (modes.empty()) throw ValidationError("sweep needs at least one mode");
  const auto points = grid.points_ms();
  if (points.empty()) throw ValidationError("empty rtt grid");
  std::vector<SweepRow> rows;
  for (auto mode : modes) {
    for (double rtt_ms : points) {
      Scenario sc = base;
      sc.mode = mode;
      const double rtt = rtt_ms / 1000.0;
      if (target == GridTarget::Server) {
        sc.client_server.rtt_s = rtt;
        LinkSpec proxy = base.client_proxy ? *base.client_proxy : base.client_server;
        proxy.rtt_s = rtt;
        sc.client_proxy = proxy;
      } else {
        if (!sc.client_cdn) throw ValidationError("a CDN grid needs a client_cdn link");
        sc.client_cdn->rtt_s = rtt;
      }
      std::vector<double> viz, full;
      for (std::size_t i = 0; i < pages.size(); ++i) {
        sc.seed = base.seed + i;
        auto trace = simulate(pages[i], sc);
        viz.push_back(trace.viz85_s);
        full.push_back(trace.full_load_s);
      }
      rows.push_back({mode, rtt_ms, median(viz), median(full)});
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "mode,rtt_ms,median_viz85_s,median_full_load_s\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.3f,%.6f,%.6f\n", std::string(mode_name(r.mode)).c_str(), r.rtt_ms,
                  r.median_viz85_s, r.median_full_load_s);
    out += buf;
  }
  return out;
}

std::string trace_csv(const PageSpec& page, const LoadTrace& trace) {
  std::string out = "url,kind,size_bytes,request_t,first_byte_t,complete_t\n";
  char buf[128];
  for (std::size_t i = 0; i < page.resources.size(); ++i) {
    const auto& r = page.resources[i];
    const auto& t = trace.timings[i];
    std::snprintf(buf, sizeof buf, ",%s,%llu,%.6f,%.6f,%.6f\n", std::string(kind_name(r.kind)).c_str(),
                  static_cast<unsigned long long>(r.size_bytes), t.request_t, t.first_byte_t, t.complete_t);
    out += r.url + buf;
  }
  std::snprintf(buf, sizeof buf, "# viz85_s=%.6f full_load_s=%.6f\n", trace.viz85_s, trace.full_load_s);
  out += buf;
  return out;
}

}  // namespace cgn::pagesim
