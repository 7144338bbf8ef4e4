#pragma once

// The gathering node: fetches a page and its static subresources close to the
// origin and streams them to the client as gatherwire frames.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "cgn/gatherwire.hpp"
#include "cgn/net.hpp"

namespace cgn::gatherproxy {

struct ResourceRef {
  std::string url;
  std::string kind;  // html | css | js | img | other
  std::string discovered_from;
};

/// Resolves `ref` against an absolute http base url. Returns an empty string
/// for non-http schemes (data:, javascript:, https:, mailto:, ...). The
/// fragment is dropped.
std::string resolve_url(std::string_view base_url, std::string_view ref);

/// Best-effort static discovery. kind "html" looks at src on img/script/iframe
/// and href on link tags; kind "css" looks at url(...) and @import. Output is
/// deduplicated in first-seen order.
std::vector<ResourceRef> extract_resources(std::string_view body, std::string_view base_url, std::string_view kind);

/// Guess of a resource kind from its url path extension.
std::string kind_from_url(std::string_view url);

struct UrlParts {
  std::string host;  // lower case
  std::uint16_t port = 80;
  std::string target;  // path + query, at least "/"

  /// host, or host:port when the port is not 80
  std::string authority() const;
};

/// Parses an absolute http url. Throws ValidationError.
UrlParts parse_http_url(std::string_view url);

struct FetchRequest {
  std::string method = "GET";
  std::string url;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string body;
  std::chrono::milliseconds timeout{10000};
};

struct FetchResult {
  int status = 0;
  std::vector<std::pair<std::string, std::string>> headers;  // end-to-end headers only
  std::string body;

  std::string header(std::string_view name) const;
};

class FetchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Upstream HTTP capability. Implementations must be safe for concurrent use.
class Fetcher {
 public:
  virtual ~Fetcher() = default;
  /// Throws FetchError when no HTTP response was obtained.
  virtual FetchResult fetch(const FetchRequest& request) = 0;
};

/// Plain HTTP/1.1 fetcher with per-authority keep-alive connection reuse.
/// `overrides` maps "host:port" to the address actually dialed while the Host
/// header keeps the original authority. At most `max_active_per_host`
/// requests run against one origin at a time; others wait for a slot.
class HttpFetcher final : public Fetcher {
 public:
  explicit HttpFetcher(std::map<std::string, net::HostPort> overrides = {}, std::size_t max_idle_per_host = 8,
                       std::size_t max_active_per_host = 6);
  ~HttpFetcher() override;

  FetchResult fetch(const FetchRequest& request) override;
  std::uint64_t connections_opened() const noexcept { return opened_.load(); }

 private:
  struct Pool;
  std::map<std::string, net::HostPort> overrides_;
  std::size_t max_idle_;
  std::size_t max_active_;
  std::unique_ptr<Pool> pool_;
  std::atomic<std::uint64_t> opened_{0};
};

/// Hop-by-hop headers are not forwarded by either proxy.
bool is_hop_by_hop(std::string_view header_name);
std::string format_header_block(const std::vector<std::pair<std::string, std::string>>& headers);
std::vector<std::pair<std::string, std::string>> parse_header_block(std::string_view block);

struct GatherConfig {
  net::HostPort listen{"127.0.0.1", 0};
  int fetch_parallelism = 16;
  int per_resource_timeout_ms = 10000;
  std::size_t max_resources = 256;
  std::uint64_t max_total_bytes = 64ull * 1024 * 1024;
  int css_nesting_depth = 2;

  void validate() const;
};

struct GatherOutcome {
  std::uint64_t resources = 0;
  std::uint64_t bytes = 0;
  std::uint64_t gather_ms = 0;
  bool truncated = false;
  bool failed = false;  // ended with an ERROR frame
};

using FrameSink = std::function<void(const gatherwire::Frame&)>;

/// Runs one gather session, calling `sink` once per frame from whichever
/// thread produced it (calls are serialized). The last frame is END or ERROR.
GatherOutcome gather(const gatherwire::RequestPayload& request, const GatherConfig& cfg, Fetcher& fetcher,
                     const FrameSink& sink);

struct SessionRecord {
  std::uint64_t session_id;
  std::string url;
  std::uint64_t cwnd_hint_bytes;
  GatherOutcome outcome;
};

std::string format_session_log(const SessionRecord& r);

struct ServerMetrics {
  std::atomic<std::uint64_t> connections{0};
  std::atomic<std::uint64_t> sessions{0};
  std::atomic<std::uint64_t> errors{0};
  std::atomic<std::uint64_t> bytes{0};
};

class GatherServer {
 public:
  using SessionObserver = std::function<void(const SessionRecord&)>;

  /// The default observer writes format_session_log lines to stderr.
  GatherServer(GatherConfig cfg, std::shared_ptr<Fetcher> fetcher, SessionObserver observer = {});
  ~GatherServer();
  GatherServer(const GatherServer&) = delete;
  GatherServer& operator=(const GatherServer&) = delete;

  /// Binds and starts accepting in the background.
  void start();
  std::uint16_t port() const noexcept;
  /// Stops accepting and joins all session threads.
  void stop();
  const ServerMetrics& metrics() const noexcept { return metrics_; }

 private:
  void accept_loop(std::stop_token st);
  void serve(net::Socket sock, std::stop_token st);

  GatherConfig cfg_;
  std::shared_ptr<Fetcher> fetcher_;
  SessionObserver observer_;
  std::unique_ptr<net::Listener> listener_;
  std::jthread acceptor_;
  std::mutex workers_mu_;
  struct Worker {
    std::shared_ptr<std::atomic<bool>> done;
    std::jthread thread;
  };
  std::vector<Worker> workers_;
  ServerMetrics metrics_;
  std::atomic<std::uint64_t> next_session_{1};
};

}  // namespace cgn::gatherproxy
