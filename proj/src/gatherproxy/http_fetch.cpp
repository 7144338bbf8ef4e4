#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <condition_variable>

#include "cgn/gatherproxy.hpp"

namespace cgn::gatherproxy {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

bool is_hop_by_hop(std::string_view name) {
  static const char* const kHop[] = {"connection", "keep-alive",        "proxy-authenticate", "proxy-authorization",
                                     "te",         "trailer",           "transfer-encoding",  "upgrade",
                                     "proxy-connection", "content-length"};
  const auto n = lower(name);
  return std::any_of(std::begin(kHop), std::end(kHop), [&](const char* h) { return n == h; });
}

std::string format_header_block(const std::vector<std::pair<std::string, std::string>>& headers) {
  std::string out;
  for (const auto& [k, v] : headers) {
    out += k;
    out += ": ";
    out += v;
    out += "\r\n";
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_header_block(std::string_view block) {
  std::vector<std::pair<std::string, std::string>> out;
  while (!block.empty()) {
    auto eol = block.find("\r\n");
    auto line = block.substr(0, eol);
    block.remove_prefix(eol == std::string_view::npos ? block.size() : eol + 2);
    auto colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) continue;
    auto value = line.substr(colon + 1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    out.emplace_back(std::string(line.substr(0, colon)), std::string(value));
  }
  return out;
}

std::string FetchResult::header(std::string_view name) const {
  const auto n = lower(name);
  for (const auto& [k, v] : headers) {
    if (lower(k) == n) return v;
  }
  return "";
}

struct HttpFetcher::Pool {
  std::mutex mu;
  std::condition_variable slot_freed;
  std::map<std::string, std::vector<std::unique_ptr<httplib::Client>>> idle;
  std::map<std::string, std::size_t> active;
};

HttpFetcher::HttpFetcher(std::map<std::string, net::HostPort> overrides, std::size_t max_idle_per_host,
                         std::size_t max_active_per_host)
    : overrides_(std::move(overrides)),
      max_idle_(max_idle_per_host),
      max_active_(std::max<std::size_t>(1, max_active_per_host)),
      pool_(std::make_unique<Pool>()) {}

HttpFetcher::~HttpFetcher() = default;

namespace {

template <class Pool>
struct SlotRelease {
  Pool& pool;
  const std::string& key;
  ~SlotRelease() {
    {
      std::lock_guard lk(pool.mu);
      --pool.active[key];
    }
    pool.slot_freed.notify_one();
  }
};

}  // namespace

FetchResult HttpFetcher::fetch(const FetchRequest& request) {
  UrlParts url;
  try {
    url = parse_http_url(request.url);
  } catch (const std::exception& e) {
    throw FetchError(e.what());
  }
  net::HostPort dial{url.host, url.port};
  const std::string key = url.host + ":" + std::to_string(url.port);
  if (auto it = overrides_.find(key); it != overrides_.end()) dial = it->second;
  const std::string pool_key = dial.host + ":" + std::to_string(dial.port) + "|" + url.authority();

  std::unique_ptr<httplib::Client> cli;
  {
    std::unique_lock lk(pool_->mu);
    if (!pool_->slot_freed.wait_for(lk, request.timeout, [&] { return pool_->active[pool_key] < max_active_; })) {
      throw FetchError("fetch " + request.url + " failed: no free connection slot within the timeout");
    }
    ++pool_->active[pool_key];
    auto& v = pool_->idle[pool_key];
    if (!v.empty()) {
      cli = std::move(v.back());
      v.pop_back();
    }
  }
  SlotRelease release{*pool_, pool_key};
  if (!cli) {
    cli = std::make_unique<httplib::Client>(dial.host, dial.port);
    cli->set_keep_alive(true);
    ++opened_;
  }
  cli->set_connection_timeout(request.timeout);
  cli->set_read_timeout(request.timeout);
  cli->set_write_timeout(request.timeout);

  httplib::Request req;
  req.method = request.method;
  req.path = url.target;
  req.body = request.body;
  bool has_host = false;
  for (const auto& [k, v] : request.headers) {
    if (is_hop_by_hop(k)) continue;
    if (lower(k) == "host") has_host = true;
    req.headers.emplace(k, v);
  }
  if (!has_host) req.headers.emplace("Host", url.authority());

  auto res = cli->send(req);
  if (!res) {
    throw FetchError("fetch " + request.url + " failed: " + httplib::to_string(res.error()));
  }
  FetchResult out;
  out.status = res->status;
  out.body = std::move(res->body);
  for (const auto& [k, v] : res->headers) {
    if (!is_hop_by_hop(k)) out.headers.emplace_back(k, v);
  }
  const bool reusable = lower(res->get_header_value("Connection")) != "close";
  if (reusable) {
    std::lock_guard lk(pool_->mu);
    auto& v = pool_->idle[pool_key];
    if (v.size() < max_idle_) v.push_back(std::move(cli));
  }
  return out;
}

}  // namespace cgn::gatherproxy
