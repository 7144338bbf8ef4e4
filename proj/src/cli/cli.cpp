#include "cgn/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iostream>
#include <sstream>

#include "cgn/census.hpp"
#include "cgn/clientproxy.hpp"
#include "cgn/gatherproxy.hpp"
#include "cgn/io.hpp"
#include "cgn/kernels.hpp"
#include "cgn/mapping.hpp"
#include "cgn/pagesim.hpp"
#include "cgn/perfmodel.hpp"
#include "cgn/siteselect.hpp"
#include "cgn/stats.hpp"

namespace cgn::cli {
namespace {

using nlohmann::json;

// Output goes to --out atomically, or to stdout when no path is given.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    io::write_file_atomic(path, text);
  }
}

std::string json_text(const json& j) { return j.dump(2) + "\n"; }

std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::map<std::string, net::HostPort> parse_resolves(const std::vector<std::string>& specs) {
  std::map<std::string, net::HostPort> out;
  for (const auto& s : specs) {
    // host:port:addr[:port], like curl's --resolve
    const auto first = s.find(':');
    const auto second = first == std::string::npos ? std::string::npos : s.find(':', first + 1);
    if (second == std::string::npos) throw ValidationError("--resolve expects host:port:addr, got '" + s + "'");
    std::string target = s.substr(second + 1);
    if (target.find(':') == std::string::npos) target += s.substr(first, second - first);
    out[lower(s.substr(0, second))] = net::HostPort::parse(target);
  }
  return out;
}

RttTable read_rtt_tables(const std::vector<std::string>& paths) {
  RttTable table;
  for (const auto& p : paths) table.merge(census::parse_rtt_csv(io::read_file(p)));
  return table;
}

// Blocks until SIGINT or SIGTERM. The signals must already be blocked.
void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

struct Common {
  std::string out;
  std::uint64_t seed = 1;
};

void add_out(CLI::App* app, Common& c) { app->add_option("--out,-o", c.out, "Output file (default: stdout)"); }
void add_seed(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

pagesim::PageGenConfig gen_defaults() { return {}; }

void add_gen_options(CLI::App* app, pagesim::PageGenConfig& g) {
  app->add_option("--resources", g.n_resources, "Resources per generated page")->capture_default_str();
  app->add_option("--total-bytes", g.total_bytes, "Bytes per generated page")->capture_default_str();
  app->add_option("--depth", g.depth, "Maximum dependency depth")->capture_default_str();
  app->add_option("--ad-fraction", g.ad_fraction, "Fraction of resources that are ads")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Content gathering network toolkit", "cgn"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read option values from a TOML/INI file");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // probe
  Common probe_c;
  census::ProbeConfig probe_cfg;
  std::string probe_targets, probe_vantage, probe_failures;
  int probe_workers = 16;
  auto* probe = app.add_subcommand("probe", "Measure TCP handshake RTTs to a list of domains");
  probe->add_option("--targets", probe_targets, "Targets file, one domain per line")->required();
  probe->add_option("--vantage", probe_vantage, "Id of this vantage point")->required();
  probe->add_option("--timeout-ms", probe_cfg.timeout_ms, "Per-handshake timeout")->capture_default_str();
  probe->add_option("--attempts", probe_cfg.attempts, "Handshakes per domain")->capture_default_str();
  probe->add_option("--port", probe_cfg.port, "TCP port")->capture_default_str();
  probe->add_option("--gap-ms", probe_cfg.inter_probe_gap_ms, "Pause between attempts")->capture_default_str();
  probe->add_option("--workers", probe_workers, "Domains probed concurrently")->capture_default_str();
  probe->add_option("--failures", probe_failures, "Write unresolvable/unreachable domains to this CSV");
  add_out(probe, probe_c);

  // census-report
  Common rep_c;
  std::string rep_kind = "summary", rep_geo, rep_orgs, rep_aliases, rep_weights, rep_before, rep_after;
  std::vector<std::string> rep_rtt;
  std::size_t rep_top_k = 10;
  auto* report = app.add_subcommand("census-report", "Summaries over RTT census CSVs");
  report->add_option("--kind", rep_kind, "summary|min|locations|providers|stability|mwrtt")
      ->check(CLI::IsMember({"summary", "min", "locations", "providers", "stability", "mwrtt"}))
      ->capture_default_str();
  report->add_option("--rtt", rep_rtt, "RTT CSV files (merged)");
  report->add_option("--geo", rep_geo, "domain,lat,lon CSV (locations)");
  report->add_option("--orgs", rep_orgs, "domain,orgname CSV (providers)");
  report->add_option("--aliases", rep_aliases, "alias,canonical CSV (providers)");
  report->add_option("--top-k", rep_top_k, "Organizations listed (providers)")->capture_default_str();
  report->add_option("--weights", rep_weights, "domain,bytes CSV of non-origin domains (mwrtt)");
  report->add_option("--before", rep_before, "Earlier RTT CSV (stability)");
  report->add_option("--after", rep_after, "Later RTT CSV (stability)");
  add_out(report, rep_c);

  // select
  Common sel_c;
  std::string sel_matrix, sel_objective = "average", sel_method = "auto";
  std::vector<std::string> sel_rtt;
  std::size_t sel_budget = 12, sel_curve = 0;
  siteselect::HeuristicParams sel_params;
  auto* select = app.add_subcommand("select", "Choose proxy locations minimizing an RTT objective");
  select->add_option("--matrix", sel_matrix, "Matrix CSV domain,loc1,loc2,... (empty cell = missing)");
  select->add_option("--rtt", sel_rtt, "RTT CSV files to pivot instead of a matrix");
  select->add_option("--budget,-l", sel_budget, "Number of locations to choose")->capture_default_str();
  select->add_option("--objective", sel_objective, "median|average|p95")
      ->check(CLI::IsMember({"median", "average", "p95"}))
      ->capture_default_str();
  select->add_option("--method", sel_method, "auto|brute|heuristic")
      ->check(CLI::IsMember({"auto", "brute", "heuristic"}))
      ->capture_default_str();
  select->add_option("--pool", sel_params.pool_size, "Heuristic pool size")->capture_default_str();
  select->add_option("--keep", sel_params.keep_size, "Locations kept between rounds")->capture_default_str();
  select->add_option("--rounds", sel_params.rounds, "Heuristic rounds")->capture_default_str();
  select->add_option("--cap", sel_params.cap, "Largest subset count searched exhaustively")->capture_default_str();
  select->add_option("--curve", sel_curve, "Emit objective CSV for budgets 1..N instead");
  add_out(select, sel_c);
  add_seed(select, sel_c);

  // map
  Common map_c;
  std::vector<std::string> map_rtt;
  std::string map_endpoints;
  std::int64_t map_now = 0;
  auto* mapcmd = app.add_subcommand("map", "Build the domain -> gathering proxy mapping file");
  mapcmd->add_option("--rtt", map_rtt, "RTT CSV files (merged)")->required();
  mapcmd->add_option("--endpoints", map_endpoints, "proxy_id,address CSV")->required();
  mapcmd->add_option("--built-at", map_now, "Build timestamp (default: now)");
  add_out(mapcmd, map_c);

  // gatherd
  gatherproxy::GatherConfig gd_cfg;
  std::string gd_listen = "127.0.0.1:9000";
  std::vector<std::string> gd_resolve;
  auto* gatherd = app.add_subcommand("gatherd", "Run a gathering node");
  gatherd->add_option("--listen", gd_listen, "HOST:PORT to listen on")->capture_default_str();
  gatherd->add_option("--parallelism", gd_cfg.fetch_parallelism, "Fetches in flight per session")
      ->capture_default_str();
  gatherd->add_option("--timeout-ms", gd_cfg.per_resource_timeout_ms, "Per-resource fetch timeout")
      ->capture_default_str();
  gatherd->add_option("--max-resources", gd_cfg.max_resources, "Resources per session")->capture_default_str();
  gatherd->add_option("--max-total-bytes", gd_cfg.max_total_bytes, "Body bytes per session")->capture_default_str();
  gatherd->add_option("--css-depth", gd_cfg.css_nesting_depth, "Stylesheet nesting followed")->capture_default_str();
  gatherd->add_option("--resolve", gd_resolve, "host:port:addr override for origin connections");

  // gatherc
  clientproxy::ClientConfig gc_cfg;
  std::string gc_listen = "127.0.0.1:8080", gc_mapping, gc_hints;
  std::vector<std::string> gc_resolve;
  auto* gatherc = app.add_subcommand("gatherc", "Run the local browser-facing proxy");
  gatherc->add_option("--listen", gc_listen, "HOST:PORT to listen on")->capture_default_str();
  gatherc->add_option("--mapping", gc_mapping, "Mapping file")->required();
  gatherc->add_option("--max-age-s", gc_cfg.mapping_max_age_s, "Mapping freshness")->capture_default_str();
  gatherc->add_option("--hints", gc_hints, "Hint store CSV");
  gatherc->add_option("--gather-timeout-ms", gc_cfg.gather_timeout_ms, "Gather session timeout")
      ->capture_default_str();
  gatherc->add_option("--direct-timeout-ms", gc_cfg.direct_timeout_ms, "Direct fetch timeout")
      ->capture_default_str();
  gatherc->add_option("--resolve", gc_resolve, "host:port:addr override for direct fetches");

  // simulate
  Common sim_c;
  std::string sim_page, sim_scenario, sim_mode;
  pagesim::PageGenConfig sim_gen = gen_defaults();
  auto* simulate = app.add_subcommand("simulate", "Simulate one page load and write its timeline CSV");
  simulate->add_option("--page", sim_page, "PageSpec JSON (default: a generated page)");
  simulate->add_option("--scenario", sim_scenario, "Scenario JSON")->required();
  simulate->add_option("--mode", sim_mode, "Override the scenario mode");
  add_gen_options(simulate, sim_gen);
  add_out(simulate, sim_c);
  add_seed(simulate, sim_c);

  // sweep
  Common sw_c;
  std::string sw_pages, sw_scenario;
  std::size_t sw_count = 100;
  pagesim::PageGenConfig sw_gen = gen_defaults();
  std::vector<std::string> sw_modes;
  double sw_start = 10, sw_stop = 320, sw_step = 10;
  auto* sweep = app.add_subcommand("sweep", "Median load metrics over an RTT grid");
  sweep->add_option("--pages", sw_pages, "PageSpec JSON array (default: generated pages)");
  sweep->add_option("--count", sw_count, "Generated pages")->capture_default_str();
  sweep->add_option("--scenario", sw_scenario, "Scenario JSON (links, modes, rtt_grid)");
  sweep->add_option("--modes", sw_modes, "Modes to sweep (default: default cgn)");
  sweep->add_option("--start-ms", sw_start, "Grid start")->capture_default_str();
  sweep->add_option("--stop-ms", sw_stop, "Grid stop")->capture_default_str();
  sweep->add_option("--step-ms", sw_step, "Grid step")->capture_default_str();
  add_gen_options(sweep, sw_gen);
  add_out(sweep, sw_c);
  add_seed(sweep, sw_c);

  // model
  Common mod_c;
  auto* model = app.add_subcommand("model", "Linear load-time models");
  model->require_subcommand(1);
  std::string fit_csv, fit_mode = "default";
  auto* fit = model->add_subcommand("fit", "Fit median viz85 against RTT from a sweep CSV");
  fit->add_option("--csv", fit_csv, "Sweep CSV")->required();
  fit->add_option("--mode", fit_mode, "Mode rows to fit")->capture_default_str();
  std::string fit_metric = "viz85";
  fit->add_option("--metric", fit_metric, "viz85|full_load")
      ->check(CLI::IsMember({"viz85", "full_load"}))
      ->capture_default_str();
  add_out(fit, mod_c);

  std::string preset_name = "final";
  double cmp_lm = 100, cmp_delta = 100, grid_stop = 300, grid_step = 10;
  bool cmp_grid = false;
  auto* compare = model->add_subcommand("compare", "Normalized fetch vs default and fetch* vs CDN*");
  compare->add_option("--rtt-lm-ms", cmp_lm, "Last-mile RTT")->capture_default_str();
  compare->add_option("--delta-ms", cmp_delta, "Extra RTT to the server")->capture_default_str();
  compare->add_flag("--grid", cmp_grid, "Emit CSV over rtt_lm = step..stop at fixed delta");
  compare->add_option("--grid-stop-ms", grid_stop, "Grid end")->capture_default_str();
  compare->add_option("--grid-step-ms", grid_step, "Grid step")->capture_default_str();
  compare->add_option("--preset", preset_name, "Coefficient preset final|workshop")->capture_default_str();
  add_out(compare, mod_c);

  std::string cross_csv;
  auto* crossover = model->add_subcommand("crossover", "RTT above which gathering beats the default load");
  crossover->add_option("--preset", preset_name, "Coefficient preset final|workshop")->capture_default_str();
  crossover->add_option("--csv", cross_csv, "Fit both lines from a sweep CSV instead");
  add_out(crossover, mod_c);

  double predict_rtt_ms = 160;
  auto* predictcmd = model->add_subcommand("predict", "Evaluate the preset lines at an RTT");
  predictcmd->add_option("--rtt-ms", predict_rtt_ms, "RTT")->capture_default_str();
  predictcmd->add_option("--preset", preset_name, "Coefficient preset final|workshop")->capture_default_str();
  add_out(predictcmd, mod_c);

  perfmodel::CostInputs cost_in;
  auto add_cost = [&](CLI::App* a) {
    a->add_option("--pages", cost_in.pages_per_month, "Pages per user per month")->capture_default_str();
    a->add_option("--page-bytes", cost_in.avg_page_bytes, "Average page size")->capture_default_str();
    a->add_option("--service-time-s", cost_in.service_time_s, "Proxy time per page")->capture_default_str();
    a->add_option("--price-per-hour", cost_in.price_per_hour, "Instance price")->capture_default_str();
    a->add_option("--price-per-gb", cost_in.price_per_gb, "Egress price")->capture_default_str();
    a->add_option("--concurrency", cost_in.concurrency, "Pages served concurrently")->capture_default_str();
    add_out(a, mod_c);
  };
  auto* model_cost = model->add_subcommand("cost", "Per-user monthly cost");
  add_cost(model_cost);
  auto* cost = app.add_subcommand("cost", "Per-user monthly cost");
  add_cost(cost);

  // gen-pages
  Common gp_c;
  std::size_t gp_count = 100;
  pagesim::PageGenConfig gp_gen = gen_defaults();
  auto* genpages = app.add_subcommand("gen-pages", "Generate synthetic PageSpec JSON");
  genpages->add_option("--count", gp_count, "Pages")->capture_default_str();
  add_gen_options(genpages, gp_gen);
  add_out(genpages, gp_c);
  add_seed(genpages, gp_c);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  auto log_config = [&](CLI::App* sub) {
    err << "cgn " << sub->get_name() << " resolved config:\n" << app.config_to_str(true, false) << std::flush;
  };

  try {
    for (auto* sub : app.get_subcommands()) log_config(sub);

    if (probe->parsed()) {
      probe_cfg.validate();
      if (probe_workers < 1) throw ValidationError("--workers must be >= 1");
      const auto targets = census::parse_targets(io::read_file(probe_targets));
      census::SystemNetwork net;
      auto run = census::run_census(targets, VantageId(probe_vantage), probe_cfg, net, probe_workers);
      for (const auto& f : run.failures) err << "probe: " << f.domain.str() << " " << f.reason << "\n";
      if (!probe_failures.empty()) {
        std::string text = "domain,reason\n";
        for (const auto& f : run.failures) text += f.domain.str() + "," + f.reason + "\n";
        io::write_file_atomic(probe_failures, text);
      }
      emit(probe_c.out, census::format_rtt_csv(run.table), out);
      return 0;
    }

    if (report->parsed()) {
      if (rep_kind == "summary" || rep_kind == "min") {
        if (rep_rtt.empty()) throw ValidationError("--rtt is required");
        const auto table = read_rtt_tables(rep_rtt);
        std::vector<double> mins;
        std::string csv = "domain,vantage,rtt_ms\n";
        for (const auto& d : table.domains()) {
          auto m = census::min_rtt(table, d);
          mins.push_back(m.rtt_ms);
          csv += d.str() + "," + m.vantage.str() + "," + io::fixed(m.rtt_ms, 3) + "\n";
        }
        if (rep_kind == "min") {
          emit(rep_c.out, csv, out);
        } else {
          if (mins.empty()) throw ValidationError("no samples");
          json j{{"domains", table.domains().size()},
                 {"vantages", table.vantages().size()},
                 {"samples", table.size()},
                 {"min_rtt_ms", {{"median", median(mins)}, {"p80", nearest_rank_copy(mins, 0.8)},
                                 {"p95", nearest_rank_copy(mins, 0.95)}}}};
          emit(rep_c.out, json_text(j), out);
        }
      } else if (rep_kind == "locations") {
        if (rep_rtt.empty() || rep_geo.empty()) throw ValidationError("--rtt and --geo are required");
        auto rows = census::location_aggregates(read_rtt_tables(rep_rtt), census::parse_geo_csv(io::read_file(rep_geo)));
        emit(rep_c.out, census::format_location_csv(rows), out);
      } else if (rep_kind == "providers") {
        if (rep_orgs.empty()) throw ValidationError("--orgs is required");
        auto orgs = census::parse_org_csv(io::read_file(rep_orgs), rep_aliases.empty() ? "alias,canonical\n"
                                                                                          : io::read_file(rep_aliases));
        std::string csv = "organization,fraction\n";
        for (const auto& s : census::provider_share(orgs, rep_top_k)) {
          csv += io::csv_field(s.organization) + "," + io::fixed(s.fraction, 6) + "\n";
        }
        emit(rep_c.out, csv, out);
      } else if (rep_kind == "stability") {
        if (rep_before.empty() || rep_after.empty()) throw ValidationError("--before and --after are required");
        const auto before = census::parse_rtt_csv(io::read_file(rep_before));
        const auto after = census::parse_rtt_csv(io::read_file(rep_after));
        std::map<Domain, VantageId> pairing;
        for (const auto& d : before.domains()) pairing.emplace(d, census::min_rtt(before, d).vantage);
        auto rep = census::stability_diff(before, after, pairing);
        json missing = json::array();
        for (const auto& d : rep.missing) missing.push_back(d.str());
        emit(rep_c.out,
             json_text({{"domains", rep.changes.size()}, {"median_ms", rep.median_ms}, {"p80_ms", rep.p80_ms},
                        {"missing", missing}}),
             out);
      } else {
        if (rep_rtt.empty() || rep_weights.empty()) throw ValidationError("--rtt and --weights are required");
        const auto table = read_rtt_tables(rep_rtt);
        auto doc = io::parse_csv(io::read_file(rep_weights), {"domain", "bytes"});
        std::vector<census::WeightedRtt> entries;
        for (const auto& row : doc.rows) {
          Domain d(row.fields.at(doc.column("domain")));
          const auto bytes = io::parse_int(row.fields.at(doc.column("bytes")), row.line);
          if (bytes < 0) throw ParseError(row.line, "negative byte count");
          entries.push_back({d, std::uint64_t(bytes), census::min_rtt(table, d).rtt_ms});
        }
        emit(rep_c.out, json_text({{"mwrtt_ms", census::mean_weighted_rtt(entries)}, {"domains", entries.size()}}),
             out);
      }
      return 0;
    }

    if (select->parsed()) {
      const auto objective = siteselect::parse_objective(sel_objective);
      if (sel_matrix.empty() == sel_rtt.empty()) throw ValidationError("give exactly one of --matrix or --rtt");
      auto problem = sel_matrix.empty()
                         ? siteselect::from_rtt_table(read_rtt_tables(sel_rtt), sel_budget, objective)
                         : siteselect::parse_matrix_csv(io::read_file(sel_matrix), sel_budget, objective);
      sel_params.seed = sel_c.seed;
      if (sel_curve > 0) {
        auto curve = siteselect::objective_curve(problem, sel_curve, sel_params);
        std::string csv = "budget,value_ms\n";
        for (std::size_t i = 0; i < curve.size(); ++i) csv += std::to_string(i + 1) + "," + io::fixed(curve[i], 3) + "\n";
        emit(sel_c.out, csv, out);
        return 0;
      }
      bool brute = sel_method == "brute";
      if (sel_method == "auto") {
        brute = siteselect::binomial(problem.location_count(), problem.budget()) <= sel_params.cap;
      }
      auto result = brute ? siteselect::select_brute_force(problem, sel_params.cap)
                          : siteselect::select_heuristic(problem, sel_params);
      emit(sel_c.out, siteselect::result_json(problem, result, brute ? std::nullopt : std::optional(sel_c.seed)),
           out);
      return 0;
    }

    if (mapcmd->parsed()) {
      const auto endpoints = mapping::parse_endpoints_csv(io::read_file(map_endpoints));
      const auto now = map_now > 0 ? map_now : std::int64_t(std::time(nullptr));
      emit(map_c.out, mapping::serialize(mapping::build(read_rtt_tables(map_rtt), endpoints, now)), out);
      return 0;
    }

    if (gatherd->parsed()) {
      gd_cfg.listen = net::HostPort::parse(gd_listen);
      auto fetcher = std::make_shared<gatherproxy::HttpFetcher>(parse_resolves(gd_resolve));
      block_signals();
      gatherproxy::GatherServer server(gd_cfg, fetcher);
      server.start();
      out << "gatherd listening on " << gd_cfg.listen.host << ":" << server.port() << std::endl;
      wait_for_signal();
      server.stop();
      return 0;
    }

    if (gatherc->parsed()) {
      gc_cfg.listen = net::HostPort::parse(gc_listen);
      gc_cfg.mapping_path = gc_mapping;
      gc_cfg.hint_store_path = gc_hints;
      auto fetcher = std::make_shared<gatherproxy::HttpFetcher>(parse_resolves(gc_resolve));
      block_signals();
      clientproxy::ClientProxy proxy(gc_cfg, fetcher);
      proxy.start();
      out << "gatherc listening on " << gc_cfg.listen.host << ":" << proxy.port() << std::endl;
      // SIGHUP-free refresh: the mapping is re-read once per max-age period.
      std::jthread refresher([&](std::stop_token st) {
        auto next = std::chrono::steady_clock::now() + std::chrono::seconds(gc_cfg.mapping_max_age_s);
        while (!st.stop_requested()) {
          std::this_thread::sleep_for(std::chrono::milliseconds(200));
          if (std::chrono::steady_clock::now() >= next) {
            proxy.refresh_mapping();
            next = std::chrono::steady_clock::now() + std::chrono::seconds(gc_cfg.mapping_max_age_s);
          }
        }
      });
      wait_for_signal();
      refresher.request_stop();
      proxy.stop();
      return 0;
    }

    if (simulate->parsed()) {
      auto file = pagesim::scenario_from_json(json::parse(io::read_file(sim_scenario), nullptr, true, true));
      auto sc = file.scenario;
      if (!sim_mode.empty()) sc.mode = pagesim::parse_mode(sim_mode);
      sc.seed = sim_c.seed;
      pagesim::PageSpec page;
      if (sim_page.empty()) {
        sim_gen.seed = sim_c.seed;
        page = pagesim::generate_page(sim_gen);
      } else {
        auto pages = pagesim::pages_from_json(json::parse(io::read_file(sim_page)));
        if (pages.size() != 1) throw ValidationError("--page must hold exactly one page");
        page = pages.front();
      }
      auto trace = pagesim::simulate(page, sc);
      pagesim::validate_trace(page, trace);
      emit(sim_c.out, pagesim::trace_csv(page, trace), out);
      return 0;
    }

    if (sweep->parsed()) {
      pagesim::ScenarioFile file;
      if (!sw_scenario.empty()) {
        file = pagesim::scenario_from_json(json::parse(io::read_file(sw_scenario)));
      } else {
        file.modes = {pagesim::Mode::Default, pagesim::Mode::Cgn};
      }
      if (!sw_modes.empty()) {
        file.modes.clear();
        for (const auto& m : sw_modes) file.modes.push_back(pagesim::parse_mode(m));
      }
      pagesim::RttGrid grid = file.rtt_grid.value_or(pagesim::RttGrid{sw_start, sw_stop, sw_step});
      if (sweep->count("--start-ms") || sweep->count("--stop-ms") || sweep->count("--step-ms")) {
        grid = {sw_start, sw_stop, sw_step};
      }
      std::vector<pagesim::PageSpec> pages;
      if (sw_pages.empty()) {
        sw_gen.seed = sw_c.seed;
        pages = pagesim::generate_pages(sw_gen, sw_count);
      } else {
        pages = pagesim::pages_from_json(json::parse(io::read_file(sw_pages)));
      }
      file.scenario.seed = sw_c.seed;
      auto rows = pagesim::sweep(pages, file.scenario, file.modes, grid, file.grid_target);
      emit(sw_c.out, pagesim::sweep_csv(rows), out);
      return 0;
    }

    if (model->parsed()) {
      if (fit->parsed()) {
        auto doc = io::parse_csv(io::read_file(fit_csv), {"mode", "rtt_ms", "median_viz85_s", "median_full_load_s"});
        const auto mode = std::string(pagesim::mode_name(pagesim::parse_mode(fit_mode)));
        const auto col = doc.column(fit_metric == "viz85" ? "median_viz85_s" : "median_full_load_s");
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : doc.rows) {
          if (row.fields.at(doc.column("mode")) != mode) continue;
          pts.emplace_back(io::parse_double(row.fields.at(doc.column("rtt_ms")), row.line) / 1000.0,
                           io::parse_double(row.fields.at(col), row.line));
        }
        auto f = perfmodel::fit_linear(pts);
        emit(mod_c.out,
             json_text({{"mode", mode}, {"metric", fit_metric}, {"points", pts.size()}, {"slope", f.slope},
                        {"intercept", f.intercept}, {"r_squared", *f.r_squared}}),
             out);
        return 0;
      }
      const auto coeffs = perfmodel::preset(preset_name);
      if (compare->parsed()) {
        if (cmp_grid) {
          if (!(grid_step > 0) || grid_stop < grid_step) throw ValidationError("bad comparison grid");
          std::string csv = "rtt_lm_ms,delta_ms,fetch_vs_default,fetch_star_vs_cdn_star\n";
          for (int i = 1; grid_step * i <= grid_stop + 1e-9; ++i) {
            const double lm = grid_step * i;
            auto c = perfmodel::normalized_comparison({lm / 1000.0, cmp_delta / 1000.0}, coeffs);
            csv += io::fixed(lm, 3) + "," + io::fixed(cmp_delta, 3) + "," + io::fixed(c.fetch_vs_default, 6) + "," +
                   io::fixed(c.fetch_star_vs_cdn_star, 6) + "\n";
          }
          emit(mod_c.out, csv, out);
        } else {
          auto c = perfmodel::normalized_comparison({cmp_lm / 1000.0, cmp_delta / 1000.0}, coeffs);
          emit(mod_c.out,
               json_text({{"preset", coeffs.name}, {"rtt_lm_ms", cmp_lm}, {"delta_ms", cmp_delta},
                          {"fetch_vs_default", c.fetch_vs_default},
                          {"fetch_star_vs_cdn_star", c.fetch_star_vs_cdn_star}}),
               out);
        }
        return 0;
      }
      if (crossover->parsed()) {
        perfmodel::LinearFit a = coeffs.default_fit, b = coeffs.cgn_fit;
        std::string source = coeffs.name;
        if (!cross_csv.empty()) {
          auto doc = io::parse_csv(io::read_file(cross_csv), {"mode", "rtt_ms", "median_viz85_s"});
          std::vector<std::pair<double, double>> pd, pc;
          for (const auto& row : doc.rows) {
            const auto& m = row.fields.at(doc.column("mode"));
            const double x = io::parse_double(row.fields.at(doc.column("rtt_ms")), row.line) / 1000.0;
            const double y = io::parse_double(row.fields.at(doc.column("median_viz85_s")), row.line);
            if (m == "default") pd.emplace_back(x, y);
            if (m == "cgn") pc.emplace_back(x, y);
          }
          a = perfmodel::fit_linear(pd);
          b = perfmodel::fit_linear(pc);
          source = cross_csv;
        }
        const double x = perfmodel::crossover_rtt(a, b);
        json j{{"source", source}, {"crossover_rtt_s", x}, {"crossover_ms", x * 1000.0},
               {"positive", x > 0}};
        emit(mod_c.out, json_text(j), out);
        return 0;
      }
      if (predictcmd->parsed()) {
        const double r = predict_rtt_ms / 1000.0;
        perfmodel::IdealModels ideal;
        emit(mod_c.out,
             json_text({{"preset", coeffs.name}, {"rtt_ms", predict_rtt_ms},
                        {"default_s", perfmodel::predict(coeffs.default_fit, r)},
                        {"cgn_s", perfmodel::predict(coeffs.cgn_fit, r)},
                        {"cdn_star_s", perfmodel::predict(ideal.cdn_star, r)},
                        {"fetch_star_s", perfmodel::predict(ideal.fetch_star, r)}}),
             out);
        return 0;
      }
    }

    if (cost->parsed() || model_cost->parsed()) {
      auto c = perfmodel::cost_per_user_month(cost_in);
      emit(mod_c.out,
           json_text({{"inputs",
                       {{"pages_per_month", cost_in.pages_per_month}, {"avg_page_bytes", cost_in.avg_page_bytes},
                        {"service_time_s", cost_in.service_time_s}, {"price_per_hour", cost_in.price_per_hour},
                        {"price_per_gb", cost_in.price_per_gb}, {"concurrency", cost_in.concurrency}}},
                      {"network_usd", c.network_usd},
                      {"compute_usd", c.compute_usd},
                      {"total_usd", c.total_usd}}),
           out);
      return 0;
    }

    if (genpages->parsed()) {
      gp_gen.seed = gp_c.seed;
      json arr = json::array();
      for (const auto& p : pagesim::generate_pages(gp_gen, gp_count)) arr.push_back(pagesim::page_to_json(p));
      emit(gp_c.out, arr.dump(1) + "\n", out);
      return 0;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << std::endl;
    return 1;
  } catch (const json::exception& e) {
    err << "error: malformed JSON: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << std::endl;
    return 2;
  }
  err << "error: no command ran" << std::endl;
  return 1;
}

int main_entry(int argc, char** argv, const std::vector<std::string>& prefix) {
  std::vector<std::string> args(prefix);
  args.insert(args.end(), argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace cgn::cli
