#include <json.hpp>

#include "cgn/pagesim.hpp"

namespace cgn::pagesim {

using nlohmann::json;

namespace {

json loss_to_json(const LossModel& loss) {
  return std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NoLoss>) {
          return {{"type", "none"}};
        } else if constexpr (std::is_same_v<T, UniformLoss>) {
          return {{"type", "uniform"}, {"rate", m.rate}};
        } else {
          return {{"type", "ge"}, {"p", m.p}, {"r", m.r}, {"one_minus_h", m.one_minus_h}, {"one_minus_k", m.one_minus_k}};
        }
      },
      loss);
}

LossModel loss_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "none") return NoLoss{};
  if (type == "uniform") return UniformLoss(j.at("rate").get<double>());
  if (type == "ge") {
    if (j.contains("set")) {
      const int set = j.at("set").get<int>();
      if (set < 1 || set > 4) throw ValidationError("ge set must be 1..4");
      return bursty_ge_sets()[std::size_t(set - 1)];
    }
    return GeParams(j.at("p").get<double>(), j.at("r").get<double>(), j.at("one_minus_h").get<double>(),
                    j.at("one_minus_k").get<double>());
  }
  throw ValidationError("unknown loss type '" + type + "'");
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ValidationError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json page_to_json(const PageSpec& page) {
  json res = json::array();
  for (const auto& r : page.resources) {
    json o{{"url", r.url}, {"kind", kind_name(r.kind)}, {"size", r.size_bytes}, {"visual", r.visual}};
    o["depends_on"] = r.depends_on ? json(*r.depends_on) : json(nullptr);
    res.push_back(std::move(o));
  }
  return {{"origin", page.origin}, {"resources", std::move(res)}};
}

PageSpec page_from_json(const json& j) {
  return guarded("page", [&] {
    PageSpec page;
    page.origin = j.at("origin").get<std::string>();
    for (const auto& o : j.at("resources")) {
      Resource r{o.at("url").get<std::string>(), parse_kind(o.at("kind").get<std::string>()),
                 o.at("size").get<std::uint64_t>(), false, std::nullopt};
      r.visual = o.contains("visual") ? o.at("visual").get<bool>()
                                      : r.kind == ResourceKind::Html || r.kind == ResourceKind::Css ||
                                            r.kind == ResourceKind::Img;
      if (o.contains("depends_on") && !o.at("depends_on").is_null()) r.depends_on = o.at("depends_on").get<std::string>();
      page.resources.push_back(std::move(r));
    }
    page.validate();
    return page;
  });
}

std::vector<PageSpec> pages_from_json(const json& j) {
  std::vector<PageSpec> out;
  if (j.is_array()) {
    for (const auto& p : j) out.push_back(page_from_json(p));
  } else {
    out.push_back(page_from_json(j));
  }
  return out;
}

json link_to_json(const LinkSpec& l) {
  return {{"rtt_s", l.rtt_s},
          {"bandwidth_bps", l.bandwidth_bps},
          {"loss", loss_to_json(l.loss)},
          {"init_cwnd_segments", l.init_cwnd_segments},
          {"mss_bytes", l.mss_bytes}};
}

LinkSpec link_from_json(const json& j) {
  return guarded("link", [&] {
    return LinkSpec(j.at("rtt_s").get<double>(), j.at("bandwidth_bps").get<double>(),
                    j.contains("loss") ? loss_from_json(j.at("loss")) : LossModel{NoLoss{}},
                    j.value("init_cwnd_segments", 10), j.value("mss_bytes", 1460));
  });
}

ScenarioFile scenario_from_json(const json& j) {
  return guarded("scenario", [&] {
    ScenarioFile f;
    Scenario& s = f.scenario;
    if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("client_server")) s.client_server = link_from_json(j.at("client_server"));
    if (j.contains("client_proxy")) s.client_proxy = link_from_json(j.at("client_proxy"));
    if (j.contains("client_cdn")) s.client_cdn = link_from_json(j.at("client_cdn"));
    s.proxy_server_rtt_s = j.value("proxy_server_rtt_s", s.proxy_server_rtt_s);
    s.proxy_overhead_s = j.value("proxy_overhead_s", s.proxy_overhead_s);
    if (j.contains("congestion")) s.congestion = netem::parse_congestion(j.at("congestion").get<std::string>());
    if (j.contains("origin_congestion")) {
      s.origin_congestion = netem::parse_congestion(j.at("origin_congestion").get<std::string>());
    }
    s.parallel_conns_per_origin = j.value("parallel_conns_per_origin", s.parallel_conns_per_origin);
    s.zero_rtt = j.value("zero_rtt", s.zero_rtt);
    s.shared_link = j.value("shared_link", s.shared_link);
    s.cwnd_hint_bytes = j.value("cwnd_hint_bytes", s.cwnd_hint_bytes);
    s.seed = j.value("seed", s.seed);
    if (j.contains("compression")) {
      s.compression.ratio = j.at("compression").value("ratio", 1.0);
      s.compression.compute_s_per_mb = j.at("compression").value("compute_s_per_mb", 0.0);
    }
    if (j.contains("modes")) {
      for (const auto& m : j.at("modes")) f.modes.push_back(parse_mode(m.get<std::string>()));
    } else {
      f.modes.push_back(s.mode);
    }
    if (j.contains("rtt_grid")) {
      const auto& g = j.at("rtt_grid");
      f.rtt_grid = RttGrid{g.at("start_ms").get<double>(), g.at("stop_ms").get<double>(), g.at("step_ms").get<double>()};
      (void)f.rtt_grid->points_ms();
    }
    if (j.contains("grid_target")) {
      const auto t = j.at("grid_target").get<std::string>();
      if (t == "server") f.grid_target = GridTarget::Server;
      else if (t == "cdn") f.grid_target = GridTarget::Cdn;
      else throw ValidationError("grid_target must be server or cdn");
    }
    // Links required by every listed mode must be present.
    for (auto m : f.modes) {
      Scenario probe = s;
      probe.mode = m;
      probe.validate();
    }
    return f;
  });
}

json scenario_to_json(const ScenarioFile& f) {
  const Scenario& s = f.scenario;
  json j{{"mode", mode_name(s.mode)},
         {"client_server", link_to_json(s.client_server)},
         {"proxy_server_rtt_s", s.proxy_server_rtt_s},
         {"proxy_overhead_s", s.proxy_overhead_s},
         {"congestion", netem::congestion_name(s.congestion)},
         {"origin_congestion", netem::congestion_name(s.origin_congestion)},
         {"parallel_conns_per_origin", s.parallel_conns_per_origin},
         {"zero_rtt", s.zero_rtt},
         {"shared_link", s.shared_link},
         {"cwnd_hint_bytes", s.cwnd_hint_bytes},
         {"seed", s.seed},
         {"compression", {{"ratio", s.compression.ratio}, {"compute_s_per_mb", s.compression.compute_s_per_mb}}}};
  if (s.client_proxy) j["client_proxy"] = link_to_json(*s.client_proxy);
  if (s.client_cdn) j["client_cdn"] = link_to_json(*s.client_cdn);
  json modes = json::array();
  for (auto m : f.modes) modes.push_back(mode_name(m));
  j["modes"] = modes;
  if (f.rtt_grid) {
    j["rtt_grid"] = {{"start_ms", f.rtt_grid->start_ms}, {"stop_ms", f.rtt_grid->stop_ms}, {"step_ms", f.rtt_grid->step_ms}};
  }
  j["grid_target"] = f.grid_target == GridTarget::Server ? "server" : "cdn";
  return j;
}

}  // namespace cgn::pagesim
