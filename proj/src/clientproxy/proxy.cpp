#include <httplib.h>

#include <ctime>
#include <iostream>

#include "cgn/clientproxy.hpp"
#include "cgn/io.hpp"

namespace cgn::clientproxy {

namespace gw = gatherwire;
using Clock = std::chrono::steady_clock;

namespace {

std::int64_t unix_now() { return std::int64_t(std::time(nullptr)); }

std::string lower(std::string s) {
  for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

void ClientConfig::validate() const {
  if (mapping_max_age_s <= 0) throw ValidationError("mapping max age must be > 0");
  if (gather_timeout_ms <= 0 || direct_timeout_ms <= 0) throw ValidationError("timeouts must be > 0");
  if (store_capacity_bytes == 0) throw ValidationError("store capacity must be > 0");
}

std::string strip_fragment(std::string url) {
  if (auto hash = url.find('#'); hash != std::string::npos) url.erase(hash);
  return url;
}

bool looks_like_page(const std::string& url) {
  std::string target;
  try {
    target = gatherproxy::parse_http_url(url).target;
  } catch (const ValidationError&) {
    return false;
  }
  const auto path = lower(target.substr(0, target.find('?')));
  if (path == "/" || path.back() == '/') return true;
  const auto last = path.substr(path.rfind('/') + 1);
  if (last.find('.') == std::string::npos) return true;
  auto ends_with = [&](std::string_view suf) {
    return last.size() >= suf.size() && last.compare(last.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends_with(".html") || ends_with(".htm");
}

struct ClientProxy::Impl {
  httplib::Server server;
  std::thread thread;
};

ClientProxy::ClientProxy(ClientConfig cfg, std::shared_ptr<gatherproxy::Fetcher> direct)
    : cfg_(std::move(cfg)),
      direct_(std::move(direct)),
      hints_(cfg_.hint_store_path),
      store_(cfg_.store_capacity_bytes),
      impl_(std::make_unique<Impl>()) {
  cfg_.validate();
  if (cfg_.mapping_path.empty()) {
    mapping_ = std::make_shared<mapping::MappingTable>(0, std::vector<mapping::ProxyEndpoint>{},
                                                        std::vector<mapping::MappingEntry>{});
  } else {
    mapping_ = std::make_shared<mapping::MappingTable>(mapping::parse(io::read_file(cfg_.mapping_path)));
  }
}

ClientProxy::~ClientProxy() { stop(); }

bool ClientProxy::refresh_mapping() {
  try {
    auto table = std::make_shared<const mapping::MappingTable>(mapping::parse(io::read_file(cfg_.mapping_path)));
    set_mapping(std::move(table));
    return true;
  } catch (const std::exception& e) {
    std::clog << "gatherc: mapping refresh failed, keeping the current table: " << e.what() << std::endl;
    return false;
  }
}

std::shared_ptr<const mapping::MappingTable> ClientProxy::mapping() const {
  std::lock_guard lk(map_mu_);
  return mapping_;
}

void ClientProxy::set_mapping(std::shared_ptr<const mapping::MappingTable> table) {
  std::lock_guard lk(map_mu_);
  mapping_ = std::move(table);
}

ClientProxy::Response ClientProxy::direct(const gatherproxy::FetchRequest& req) {
  ++metrics_.direct_fetches;
  try {
    auto res = direct_->fetch(req);
    return {res.status, gatherproxy::format_header_block(res.headers), std::move(res.body)};
  } catch (const gatherproxy::FetchError& e) {
    ++metrics_.bad_gateway;
    return {502, "Content-Type: text/plain\r\n", std::string("upstream fetch failed: ") + e.what() + "\n"};
  }
}

std::optional<PageStore::SessionId> ClientProxy::start_gather(const std::string& url,
                                                                const mapping::ProxyEndpoint& ep) {
  const auto id = store_.open_session(url);
  ++metrics_.gather_sessions;
  const std::uint64_t hint = hints_.read(ep.proxy_id.str());
  auto done = std::make_shared<std::atomic<bool>>(false);
  auto body = [this, id, url, ep, hint, done](std::stop_token st) {
    bool failed = true;
    try {
      const auto timeout = std::chrono::milliseconds(cfg_.gather_timeout_ms);
      auto sock = net::connect(ep.address, timeout);
      sock.write_all(gw::encode(gw::RequestPayload{url, hint, false}));
      gw::Decoder decoder;
      std::vector<std::uint8_t> buf(64 * 1024);
      auto idle_deadline = Clock::now() + timeout;
      while (!decoder.finished() && !st.stop_requested()) {
        std::size_t n = 0;
        try {
          n = sock.read_some(buf, std::chrono::milliseconds(100));
        } catch (const net::TimeoutError&) {
          if (Clock::now() >= idle_deadline) throw;
          if (store_.session_failed(id)) break;  // the browser side gave up
          continue;
        }
        if (n == 0) {
          decoder.finish();
          throw gw::TruncationError("gather session closed before END");
        }
        idle_deadline = Clock::now() + timeout;
        decoder.feed(std::span(buf.data(), n));
        while (auto frame = decoder.next()) {
          if (auto* m = std::get_if<gw::ManifestPayload>(&*frame)) {
            std::vector<std::string> urls;
            for (const auto& e : m->resources) urls.push_back(e.url);
            store_.expect(id, urls);
          } else if (auto* r = std::get_if<gw::ResourcePayload>(&*frame)) {
            store_.put(id, r->url, r->status, r->header_block, r->body, r->final_chunk);
          } else if (auto* end = std::get_if<gw::EndPayload>(&*frame)) {
            const std::uint64_t observed = sock.observed_receive_window();
            hints_.update(ep.proxy_id.str(), std::max<std::uint64_t>(end->cwnd_hint_bytes, observed), unix_now());
            failed = false;
          } else if (auto* err = std::get_if<gw::ErrorPayload>(&*frame)) {
            std::clog << "gatherc: node " << ep.proxy_id.str() << " reported: " << err->message << std::endl;
          }
        }
      }
    } catch (const std::exception& e) {
      std::clog << "gatherc: gather of " << url << " via " << ep.proxy_id.str() << " failed: " << e.what()
                << std::endl;
    }
    store_.close_session(id, failed);
    done->store(true);
  };
  std::lock_guard lk(sessions_mu_);
  std::erase_if(session_threads_, [](const SessionThread& t) { return t.done->load(); });
  session_threads_.push_back({done, std::jthread(body)});
  return id;
}

ClientProxy::Response ClientProxy::handle_get(const std::string& raw_url, const std::string& cgn_header,
                                              const std::vector<std::pair<std::string, std::string>>& headers) {
  ++metrics_.requests;
  const std::string url = strip_fragment(raw_url);
  gatherproxy::FetchRequest req;
  req.url = url;
  req.headers = headers;
  req.timeout = std::chrono::milliseconds(cfg_.direct_timeout_ms);

  auto serve_from_store = [&](const StoredResource& r) -> std::optional<Response> {
    if (r.status == 0) return std::nullopt;  // the node could not fetch it
    ++metrics_.store_hits;
    return Response{r.status, r.header_block, r.body};
  };

  const auto deadline = Clock::now() + std::chrono::milliseconds(cfg_.gather_timeout_ms);
  StoredResource stored;
  switch (store_.wait_for(url, deadline, stored)) {
    case PageStore::Lookup::Hit:
      if (auto r = serve_from_store(stored)) return *r;
      return direct(req);
    case PageStore::Lookup::Failed:
      ++metrics_.fallbacks;
      return direct(req);
    case PageStore::Lookup::NotHere: break;
  }

  if (cgn_header == "direct") return direct(req);
  const bool want = cgn_header == "gather" || looks_like_page(url);
  if (!want) return direct(req);

  std::optional<mapping::ProxyEndpoint> endpoint;
  try {
    const auto host = gatherproxy::parse_http_url(url).host;
    auto table = mapping();
    auto hit = mapping::lookup(*table, Domain(host), cfg_.mapping_max_age_s, unix_now());
    if (auto* f = std::get_if<mapping::Fresh>(&hit)) endpoint = f->endpoint;
    if (auto* s = std::get_if<mapping::Stale>(&hit)) endpoint = s->endpoint;
  } catch (const ValidationError&) {
  }
  if (!endpoint) return direct(req);

  const auto id = start_gather(url, *endpoint);
  switch (store_.wait_for(url, deadline, stored)) {
    case PageStore::Lookup::Hit:
      if (auto r = serve_from_store(stored)) return *r;
      return direct(req);
    default:
      store_.close_session(*id, true);
      ++metrics_.fallbacks;
      std::clog << "gatherc: falling back to a direct fetch of " << url << std::endl;
      return direct(req);
  }
}

void ClientProxy::start() {
  auto& svr = impl_->server;
  auto to_response = [](const Response& r, httplib::Response& res) {
    res.status = r.status;
    std::string content_type = "application/octet-stream";
    for (const auto& [k, v] : gatherproxy::parse_header_block(r.header_block)) {
      if (gatherproxy::is_hop_by_hop(k)) continue;
      if (lower(k) == "content-type") {
        content_type = v;
        continue;
      }
      res.set_header(k, v);
    }
    res.set_content(r.body, content_type);
  };
  auto forward_headers = [](const httplib::Request& req) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, v] : req.headers) {
      const auto n = lower(k);
      if (gatherproxy::is_hop_by_hop(k) || n == "host" || n == "x-cgn" || n.rfind("remote_", 0) == 0 ||
          n.rfind("local_", 0) == 0) {
        continue;
      }
      out.emplace_back(k, v);
    }
    return out;
  };
  auto absolute = [](const httplib::Request& req, httplib::Response& res) -> std::optional<std::string> {
    if (req.target.size() < 7 || lower(req.target.substr(0, 7)) != "http://") {
      res.status = 400;
      res.set_content("this is a forward proxy: send absolute http:// request targets\n", "text/plain");
      return std::nullopt;
    }
    return req.target;
  };

  svr.Get(".*", [=, this](const httplib::Request& req, httplib::Response& res) {
    auto url = absolute(req, res);
    if (!url) return;
    to_response(handle_get(*url, lower(req.get_header_value("X-CGN")), forward_headers(req)), res);
  });
  auto relay = [=, this](const httplib::Request& req, httplib::Response& res) {
    auto url = absolute(req, res);
    if (!url) return;
    ++metrics_.requests;
    gatherproxy::FetchRequest f;
    f.method = req.method;
    f.url = strip_fragment(*url);
    f.headers = forward_headers(req);
    f.body = req.body;
    f.timeout = std::chrono::milliseconds(cfg_.direct_timeout_ms);
    to_response(direct(f), res);
  };
  svr.Post(".*", relay);
  svr.Put(".*", relay);
  svr.Patch(".*", relay);
  svr.Delete(".*", relay);
  svr.Options(".*", relay);

  if (cfg_.listen.port == 0) {
    const int p = svr.bind_to_any_port(cfg_.listen.host);
    if (p <= 0) throw net::NetError("cannot bind " + cfg_.listen.host);
    port_ = std::uint16_t(p);
  } else {
    if (!svr.bind_to_port(cfg_.listen.host, cfg_.listen.port)) throw net::NetError("cannot bind " + cfg_.listen.str());
    port_ = cfg_.listen.port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
}

void ClientProxy::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
  std::vector<SessionThread> threads;
  {
    std::lock_guard lk(sessions_mu_);
    threads.swap(session_threads_);
  }
  for (auto& t : threads) t.thread.request_stop();
}

}  // namespace cgn::clientproxy
