#pragma once

// Local forward proxy run next to the browser. Page loads for mapped domains
// are gathered through the chosen node; everything else is relayed directly.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cgn/gatherproxy.hpp"
#include "cgn/mapping.hpp"

namespace cgn::clientproxy {

struct ClientConfig {
  net::HostPort listen{"127.0.0.1", 8080};
  std::filesystem::path mapping_path;
  std::int64_t mapping_max_age_s = 86400;
  int gather_timeout_ms = 10000;
  int direct_timeout_ms = 10000;
  std::filesystem::path hint_store_path;  // empty: in memory only
  std::uint64_t store_capacity_bytes = 256ull * 1024 * 1024;

  void validate() const;
};

/// proxy_id -> last negotiated initial window, persisted as CSV
/// `proxy_id,cwnd_hint_bytes,updated_at`.
class HintStore {
 public:
  /// Loads an existing file; a missing file starts empty.
  explicit HintStore(std::filesystem::path path = {});

  std::uint64_t read(const std::string& proxy_id) const;
  void update(const std::string& proxy_id, std::uint64_t bytes, std::int64_t now);
  /// False once a write has failed; the store then keeps hints in memory.
  bool persistent() const noexcept { return persistent_; }

 private:
  struct Entry {
    std::uint64_t bytes;
    std::int64_t updated_at;
  };
  void save();

  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, Entry> hints_;
  bool persistent_;
};

/// How the top-level heuristic classifies a request path.
bool looks_like_page(const std::string& url);
std::string strip_fragment(std::string url);

struct StoredResource {
  int status = 0;
  std::string header_block;
  std::string body;
};

/// Resources gathered per page load. Lookups block until the resource
/// arrives, its session ends, or the deadline passes. A finished page stays
/// servable for `retention` after its session closes.
class PageStore {
 public:
  explicit PageStore(std::uint64_t capacity_bytes,
                     std::chrono::steady_clock::duration retention = std::chrono::seconds(60));

  using SessionId = std::uint64_t;
  SessionId open_session(const std::string& root_url);
  /// Registers urls the session promises to deliver.
  void expect(SessionId id, const std::vector<std::string>& urls);
  /// Appends a chunk. `final_chunk` marks the resource complete.
  void put(SessionId id, const std::string& url, int status, const std::string& header_block, const std::string& body,
           bool final_chunk);
  /// Marks the session over; failed sessions release all waiters.
  void close_session(SessionId id, bool failed);
  bool session_failed(SessionId id) const;

  enum class Lookup { Hit, NotHere, Failed };
  /// NotHere: no session holds or still promises this url. Failed: the
  /// session this call waited on gave up (or the deadline passed) first.
  Lookup wait_for(const std::string& url, std::chrono::steady_clock::time_point deadline, StoredResource& out);

  std::uint64_t bytes() const;
  std::size_t sessions() const;

 private:
  struct Slot {
    bool ready = false;
    StoredResource res;
  };
  struct Session {
    std::string root;
    bool open = true;
    std::chrono::steady_clock::time_point closed_at;
    bool failed = false;
    std::uint64_t bytes = 0;
    std::map<std::string, Slot> slots;
  };
  void evict_locked();
  void expire_locked();
  void drop_locked(std::map<SessionId, Session>::iterator s);
  void touch_locked(SessionId id);

  std::uint64_t capacity_;
  std::chrono::steady_clock::duration retention_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<SessionId, Session> sessions_;
  std::map<std::string, SessionId> index_;  // url -> newest session carrying it
  std::list<SessionId> lru_;                // front = most recent
  std::uint64_t total_ = 0;
  SessionId next_ = 1;
};

struct ClientMetrics {
  std::atomic<std::uint64_t> requests{0};
  std::atomic<std::uint64_t> gather_sessions{0};
  std::atomic<std::uint64_t> store_hits{0};
  std::atomic<std::uint64_t> direct_fetches{0};
  std::atomic<std::uint64_t> fallbacks{0};
  std::atomic<std::uint64_t> bad_gateway{0};
};

class ClientProxy {
 public:
  /// Loads the mapping file; throws ValidationError when it cannot be parsed.
  ClientProxy(ClientConfig cfg, std::shared_ptr<gatherproxy::Fetcher> direct);
  ~ClientProxy();
  ClientProxy(const ClientProxy&) = delete;
  ClientProxy& operator=(const ClientProxy&) = delete;

  void start();
  std::uint16_t port() const noexcept { return port_; }
  void stop();

  /// Reloads the mapping file. On failure the current table stays in use and
  /// false is returned.
  bool refresh_mapping();
  std::shared_ptr<const mapping::MappingTable> mapping() const;
  void set_mapping(std::shared_ptr<const mapping::MappingTable> table);

  HintStore& hints() noexcept { return hints_; }
  PageStore& store() noexcept { return store_; }
  const ClientMetrics& metrics() const noexcept { return metrics_; }

 private:
  struct Impl;
  struct Response {
    int status;
    std::string header_block;
    std::string body;
  };
  Response handle_get(const std::string& url, const std::string& cgn_header,
                      const std::vector<std::pair<std::string, std::string>>& headers);
  std::optional<PageStore::SessionId> start_gather(const std::string& url, const mapping::ProxyEndpoint& ep);
  Response direct(const gatherproxy::FetchRequest& req);

  ClientConfig cfg_;
  std::shared_ptr<gatherproxy::Fetcher> direct_;
  HintStore hints_;
  PageStore store_;
  ClientMetrics metrics_;
  mutable std::mutex map_mu_;
  std::shared_ptr<const mapping::MappingTable> mapping_;
  std::unique_ptr<Impl> impl_;
  std::uint16_t port_ = 0;
  std::mutex sessions_mu_;
  struct SessionThread {
    std::shared_ptr<std::atomic<bool>> done;
    std::jthread thread;
  };
  std::vector<SessionThread> session_threads_;
};

}  // namespace cgn::clientproxy
