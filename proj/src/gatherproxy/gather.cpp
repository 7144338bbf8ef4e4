#include <condition_variable>
#include <deque>
#include <exception>
#include <set>

#include "cgn/error.hpp"
#include "cgn/gatherproxy.hpp"

namespace cgn::gatherproxy {

namespace gw = gatherwire;
using Clock = std::chrono::steady_clock;

void GatherConfig::validate() const {
  if (fetch_parallelism < 1) throw ValidationError("fetch_parallelism must be >= 1");
  if (per_resource_timeout_ms < 1) throw ValidationError("per_resource_timeout_ms must be >= 1");
  if (max_resources < 1) throw ValidationError("max_resources must be >= 1");
  if (max_total_bytes < 1) throw ValidationError("max_total_bytes must be >= 1");
  if (css_nesting_depth < 0) throw ValidationError("css_nesting_depth must be >= 0");
}

namespace {

std::uint32_t elapsed_ms(Clock::time_point since) {
  return std::uint32_t(std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count());
}

bool looks_like(const FetchResult& r, std::string_view url, std::string_view kind) {
  const auto ct = r.header("Content-Type");
  if (kind == "html" && ct.find("html") != std::string::npos) return true;
  if (kind == "css" && ct.find("css") != std::string::npos) return true;
  return ct.empty() && kind_from_url(url) == kind;
}

class Session {
 public:
  Session(const gw::RequestPayload& req, const GatherConfig& cfg, Fetcher& fetcher, const FrameSink& sink)
      : req_(req), cfg_(cfg), fetcher_(fetcher), sink_(sink), start_(Clock::now()) {}

  GatherOutcome run() {
    FetchResult root;
    const auto t0 = Clock::now();
    try {
      parse_http_url(req_.url);
      root = fetcher_.fetch(request_for(req_.url));
    } catch (const std::exception& e) {
      emit(gw::ErrorPayload{std::string("root fetch failed: ") + e.what()});
      out_.failed = true;
      out_.gather_ms = elapsed_ms(start_);
      rethrow_sink_error();
      return out_;
    }
    const std::uint32_t root_ms = elapsed_ms(t0);

    std::vector<ResourceRef> refs;
    if (looks_like(root, req_.url, "html")) refs = extract_resources(root.body, req_.url, "html");
    else if (looks_like(root, req_.url, "css")) refs = extract_resources(root.body, req_.url, "css");

    {
      std::lock_guard lk(mu_);
      manifested_.insert(req_.url);
      gw::ManifestPayload manifest{{{req_.url, "html"}}};
      for (auto& e : admit(refs, 1)) manifest.resources.push_back(std::move(e));
      emit(manifest);
      deliver(req_.url, root, root_ms);
    }

    const int n_workers = std::max(1, cfg_.fetch_parallelism);
    {
      std::vector<std::jthread> workers;
      for (int i = 0; i < n_workers; ++i) workers.emplace_back([this] { work(); });
    }

    out_.gather_ms = elapsed_ms(start_);
    emit(gw::EndPayload{out_.resources, out_.bytes, out_.gather_ms, req_.cwnd_hint_bytes, out_.truncated});
    rethrow_sink_error();
    return out_;
  }

 private:
  struct Task {
    std::string url;
    std::string kind;
    int css_depth;  // nesting level of this resource if it is a stylesheet
  };

  FetchRequest request_for(const std::string& url) const {
    FetchRequest r;
    r.url = url;
    r.timeout = std::chrono::milliseconds(cfg_.per_resource_timeout_ms);
    return r;
  }

  // Caller holds mu_. Returns the manifest entries for newly admitted refs.
  std::vector<gw::ManifestEntry> admit(const std::vector<ResourceRef>& refs, int css_depth) {
    std::vector<gw::ManifestEntry> added;
    for (const auto& r : refs) {
      if (manifested_.count(r.url)) continue;
      if (stopped_ || manifested_.size() >= cfg_.max_resources) {
        out_.truncated = true;
        break;
      }
      manifested_.insert(r.url);
      queue_.push_back({r.url, r.kind, css_depth});
      added.push_back({r.url, r.kind});
    }
    if (!added.empty()) cv_.notify_all();
    return added;
  }

  // Caller holds mu_.
  void deliver(const std::string& url, const FetchResult& res, std::uint32_t fetch_ms) {
    if (stopped_) {
      out_.truncated = true;
      return;
    }
    if (out_.bytes + res.body.size() > cfg_.max_total_bytes && out_.resources > 0) {
      stopped_ = true;
      out_.truncated = true;
      queue_.clear();
      cv_.notify_all();
      return;
    }
    gw::ResourcePayload whole;
    whole.url = url;
    whole.status = std::uint16_t(res.status);
    whole.fetch_ms = fetch_ms;
    whole.header_block = format_header_block(res.headers);
    whole.body = res.body;
    for (auto& chunk : gw::chunk_resource(whole)) emit(chunk);
    out_.bytes += res.body.size();
    ++out_.resources;
  }

  void work() {
    while (true) {
      Task task;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return stopped_ || !queue_.empty() || in_flight_ == 0; });
        if (stopped_ || queue_.empty()) {
          cv_.notify_all();
          return;
        }
        task = std::move(queue_.front());
        queue_.pop_front();
        ++in_flight_;
      }
      const auto t0 = Clock::now();
      FetchResult res;
      try {
        res = fetcher_.fetch(request_for(task.url));
      } catch (const FetchError&) {
        res = FetchResult{};  // status 0, empty body
      }
      const auto ms = elapsed_ms(t0);
      std::vector<ResourceRef> nested;
      const bool parse_css = res.status >= 200 && res.status < 300 && task.css_depth <= cfg_.css_nesting_depth &&
                             (task.kind == "css" || looks_like(res, task.url, "css"));
      if (parse_css) nested = extract_resources(res.body, task.url, "css");

      std::lock_guard lk(mu_);
      if (!nested.empty()) {
        auto added = admit(nested, task.css_depth + 1);
        if (!added.empty()) emit(gw::ManifestPayload{std::move(added)});
      }
      deliver(task.url, res, ms);
      --in_flight_;
      cv_.notify_all();
    }
  }

  void emit(const gw::Frame& f) {
    std::lock_guard lk(sink_mu_);
    if (sink_error_) return;
    try {
      sink_(f);
    } catch (...) {
      // Callers hold mu_ (or run before the workers start).
      sink_error_ = std::current_exception();
      stopped_ = true;
    }
  }

  void rethrow_sink_error() {
    if (sink_error_) std::rethrow_exception(sink_error_);
  }

  const gw::RequestPayload& req_;
  const GatherConfig& cfg_;
  Fetcher& fetcher_;
  const FrameSink& sink_;
  const Clock::time_point start_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Task> queue_;
  std::set<std::string> manifested_;
  int in_flight_ = 0;
  bool stopped_ = false;
  GatherOutcome out_;

  std::mutex sink_mu_;
  std::exception_ptr sink_error_;
};

}  // namespace

GatherOutcome gather(const gw::RequestPayload& request, const GatherConfig& cfg, Fetcher& fetcher,
                     const FrameSink& sink) {
  cfg.validate();
  Session s(request, cfg, fetcher, sink);
  return s.run();
}

std::string format_session_log(const SessionRecord& r) {
  std::string url = r.url;
  for (auto& c : url) {
    if (c == ' ' || c == '\n' || c == '\r') c = '_';
  }
  return "session_id=" + std::to_string(r.session_id) + " url=" + url +
         " resources=" + std::to_string(r.outcome.resources) + " bytes=" + std::to_string(r.outcome.bytes) +
         " gather_ms=" + std::to_string(r.outcome.gather_ms) + " truncated=" + (r.outcome.truncated ? "true" : "false") +
         " error=" + (r.outcome.failed ? "true" : "false") + " cwnd_hint_bytes=" + std::to_string(r.cwnd_hint_bytes);
}

}  // namespace cgn::gatherproxy
