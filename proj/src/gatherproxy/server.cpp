#include <iostream>

#include "cgn/gatherproxy.hpp"

namespace cgn::gatherproxy {

namespace gw = gatherwire;

GatherServer::GatherServer(GatherConfig cfg, std::shared_ptr<Fetcher> fetcher, SessionObserver observer)
    : cfg_(std::move(cfg)), fetcher_(std::move(fetcher)), observer_(std::move(observer)) {
  cfg_.validate();
  if (!observer_) {
    observer_ = [](const SessionRecord& r) { std::clog << "gatherd " << format_session_log(r) << std::endl; };
  }
}

GatherServer::~GatherServer() { stop(); }

void GatherServer::start() {
  listener_ = std::make_unique<net::Listener>(cfg_.listen);
  acceptor_ = std::jthread([this](std::stop_token st) { accept_loop(st); });
}

std::uint16_t GatherServer::port() const noexcept { return listener_ ? listener_->port() : 0; }

void GatherServer::stop() {
  if (!listener_) return;
  listener_->stop();
  acceptor_.request_stop();
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<Worker> workers;
  {
    std::lock_guard lk(workers_mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.thread.request_stop();
  workers.clear();  // joins
  listener_.reset();
}

void GatherServer::accept_loop(std::stop_token st) {
  while (!st.stop_requested()) {
    auto sock = listener_->accept(std::chrono::milliseconds(200));
    if (!sock) continue;
    ++metrics_.connections;
    std::lock_guard lk(workers_mu_);
    std::erase_if(workers_, [](const Worker& w) { return w.done->load(); });
    auto done = std::make_shared<std::atomic<bool>>(false);
    workers_.push_back({done, std::jthread([this, done, s = std::move(*sock)](std::stop_token wst) mutable {
                          try {
                            serve(std::move(s), wst);
                          } catch (const std::exception& e) {
                            ++metrics_.errors;
                            std::clog << "gatherd connection error: " << e.what() << std::endl;
                          }
                          done->store(true);
                        })});
  }
}

void GatherServer::serve(net::Socket sock, std::stop_token st) {
  gw::Decoder decoder;
  std::vector<std::uint8_t> buf(64 * 1024);
  std::vector<std::uint8_t> out;
  auto send_frame = [&](const gw::Frame& f) {
    out.clear();
    gw::encode_into(f, out);
    sock.write_all(out);
  };
  while (!st.stop_requested()) {
    std::size_t n = 0;
    try {
      n = sock.read_some(buf, std::chrono::milliseconds(250));
    } catch (const net::TimeoutError&) {
      continue;
    }
    if (n == 0) {
      decoder.finish();  // a half-sent request is worth a log line
      return;
    }
    decoder.feed(std::span(buf.data(), n));
    while (true) {
      std::optional<gw::Frame> frame;
      try {
        frame = decoder.next();
      } catch (const gw::ProtocolError& e) {
        send_frame(gw::ErrorPayload{std::string("protocol error: ") + e.what()});
        return;
      }
      if (!frame) break;
      const auto* req = std::get_if<gw::RequestPayload>(&*frame);
      if (!req) {
        send_frame(gw::ErrorPayload{"expected a REQUEST frame"});
        return;
      }
      const auto id = next_session_++;
      if (req->cwnd_hint_bytes > 0) {
        sock.set_send_buffer(int(std::min<std::uint64_t>(req->cwnd_hint_bytes, 64u * 1024 * 1024)));
      }
      ++metrics_.sessions;
      auto outcome = gather(*req, cfg_, *fetcher_, send_frame);
      metrics_.bytes += outcome.bytes;
      if (outcome.failed) ++metrics_.errors;
      observer_(SessionRecord{id, req->url, req->cwnd_hint_bytes, outcome});
      decoder.restart();
    }
  }
}

}  // namespace cgn::gatherproxy
