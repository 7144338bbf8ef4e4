#pragma once

// Page-load simulator: synthetic dependency graphs, load timelines under
// default, gathering-proxy and CDN delivery, and RTT sweeps.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cgn/core.hpp"
#include "cgn/netem.hpp"

namespace cgn::pagesim {

enum class ResourceKind { Html, Css, Js, Img, Ad };
enum class Mode { Default, Cgn, CdnImages, Cdn90, CdnAll };

std::string_view kind_name(ResourceKind k);
ResourceKind parse_kind(std::string_view s);
std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view s);

struct Resource {
  std::string url;
  ResourceKind kind;
  std::uint64_t size_bytes;
  bool visual;
  std::optional<std::string> depends_on;  // parent url; empty for the root
};

struct PageSpec {
  std::string origin;
  std::vector<Resource> resources;

  /// Forest rooted at exactly one html resource, positive sizes, known
  /// parents, unique urls, no cycles.
  void validate() const;
  std::uint64_t total_bytes() const;
};

struct Compression {
  double ratio = 1.0;             // wire bytes / content bytes
  double compute_s_per_mb = 0.0;  // serial proxy-side compute before streaming
};

struct Scenario {
  Mode mode = Mode::Default;
  LinkSpec client_server{0.1, 10e6};
  std::optional<LinkSpec> client_proxy;  // Cgn
  std::optional<LinkSpec> client_cdn;    // Cdn*
  double proxy_server_rtt_s = 0.0;
  double proxy_overhead_s = 0.7;
  netem::Congestion congestion = netem::Congestion::BbrLike;          // client <-> proxy
  netem::Congestion origin_congestion = netem::Congestion::CubicLike;  // servers and CDN
  int parallel_conns_per_origin = 6;
  bool zero_rtt = true;
  // Default and CDN modes: when set, all connections to the server (and
  // separately to the CDN) queue their rounds on one link of the given
  // bandwidth. Off, every connection runs at the full link rate.
  bool shared_link = false;
  std::uint64_t cwnd_hint_bytes = 0;  // 0: the proxy link's initial window
  std::uint64_t seed = 1;
  Compression compression;

  void validate() const;
};

struct ResourceTiming {
  double request_t;
  double first_byte_t;
  double complete_t;
};

struct LoadTrace {
  std::vector<ResourceTiming> timings;  // parallel to PageSpec::resources
  double viz85_s = 0.0;
  double full_load_s = 0.0;
  std::uint64_t total_bytes = 0;
};

inline constexpr double kVisualThreshold = 0.85;

LoadTrace simulate(const PageSpec& page, const Scenario& scenario);

/// Throws ValidationError if the trace breaks an ordering invariant.
void validate_trace(const PageSpec& page, const LoadTrace& trace);

struct PageGenConfig {
  std::uint64_t seed = 1;
  std::size_t n_resources = 50;
  std::uint64_t total_bytes = 2'000'000;
  int depth = 3;
  double ad_fraction = 0.05;
};

PageSpec generate_page(const PageGenConfig& cfg);
/// `count` pages with seeds cfg.seed, cfg.seed + 1, ...
std::vector<PageSpec> generate_pages(const PageGenConfig& cfg, std::size_t count);

struct RttGrid {
  double start_ms;
  double stop_ms;
  double step_ms;
  std::vector<double> points_ms() const;
};

enum class GridTarget { Server, Cdn };

struct SweepRow {
  Mode mode;
  double rtt_ms;
  double median_viz85_s;
  double median_full_load_s;
};

/// Medians over pages per (mode, grid point). With GridTarget::Server the grid
/// sets the client-server RTT and the client-proxy RTT to the same value; with
/// GridTarget::Cdn it sets the client-CDN RTT. Page i runs with seed base + i.
std::vector<SweepRow> sweep(const std::vector<PageSpec>& pages, const Scenario& base,
                            const std::vector<Mode>& modes, const RttGrid& grid,
                            GridTarget target = GridTarget::Server);
std::string sweep_csv(const std::vector<SweepRow>& rows);

// JSON files.
nlohmann::json page_to_json(const PageSpec& page);
PageSpec page_from_json(const nlohmann::json& j);
/// Accepts a single page object or an array of them.
std::vector<PageSpec> pages_from_json(const nlohmann::json& j);
nlohmann::json link_to_json(const LinkSpec& link);
LinkSpec link_from_json(const nlohmann::json& j);

struct ScenarioFile {
  Scenario scenario;
  std::vector<Mode> modes;
  std::optional<RttGrid> rtt_grid;
  GridTarget grid_target = GridTarget::Server;
};

ScenarioFile scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioFile& s);
std::string trace_csv(const PageSpec& page, const LoadTrace& trace);

}  // namespace cgn::pagesim
