#include <iostream>

#include "cgn/clientproxy.hpp"
#include "cgn/io.hpp"

namespace cgn::clientproxy {

HintStore::HintStore(std::filesystem::path path) : path_(std::move(path)), persistent_(!path_.empty()) {
  if (path_.empty() || !std::filesystem::exists(path_)) return;
  try {
    auto doc = io::read_csv(path_, {"proxy_id", "cwnd_hint_bytes", "updated_at"});
    const auto c_id = doc.column("proxy_id"), c_b = doc.column("cwnd_hint_bytes"), c_t = doc.column("updated_at");
    for (const auto& row : doc.rows) {
      const auto bytes = io::parse_int(row.fields.at(c_b), row.line);
      if (bytes < 0) throw ParseError(row.line, "negative cwnd hint");
      hints_[row.fields.at(c_id)] = {std::uint64_t(bytes), io::parse_int(row.fields.at(c_t), row.line)};
    }
  } catch (const std::exception& e) {
    std::clog << "gatherc: ignoring unreadable hint store " << path_ << ": " << e.what() << std::endl;
    hints_.clear();
  }
}

std::uint64_t HintStore::read(const std::string& proxy_id) const {
  std::lock_guard lk(mu_);
  auto it = hints_.find(proxy_id);
  return it == hints_.end() ? 0 : it->second.bytes;
}

void HintStore::update(const std::string& proxy_id, std::uint64_t bytes, std::int64_t now) {
  std::lock_guard lk(mu_);
  hints_[proxy_id] = {bytes, now};
  save();
}

void HintStore::save() {
  if (!persistent_) return;
  std::string text = "proxy_id,cwnd_hint_bytes,updated_at\n";
  for (const auto& [id, e] : hints_) {
    text += io::csv_field(id) + "," + std::to_string(e.bytes) + "," + std::to_string(e.updated_at) + "\n";
  }
  try {
    io::write_file_atomic(path_, text);
  } catch (const std::exception& e) {
    persistent_ = false;
    std::clog << "gatherc: hint store " << path_ << " is not writable, keeping hints in memory: " << e.what()
              << std::endl;
  }
}

PageStore::PageStore(std::uint64_t capacity_bytes, std::chrono::steady_clock::duration retention)
    : capacity_(capacity_bytes), retention_(retention) {}

PageStore::SessionId PageStore::open_session(const std::string& root_url) {
  std::lock_guard lk(mu_);
  expire_locked();
  const SessionId id = next_++;
  sessions_[id].root = root_url;
  sessions_[id].slots[root_url];
  index_[root_url] = id;
  lru_.push_front(id);
  return id;
}

void PageStore::expect(SessionId id, const std::vector<std::string>& urls) {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end() || !it->second.open) return;
  for (const auto& u : urls) {
    it->second.slots[u];
    index_[u] = id;
  }
}

void PageStore::put(SessionId id, const std::string& url, int status, const std::string& header_block,
                    const std::string& body, bool final_chunk) {
  {
    std::lock_guard lk(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end() || !it->second.open) return;
    auto& slot = it->second.slots[url];
    if (slot.ready) return;
    index_[url] = id;
    if (slot.res.header_block.empty()) slot.res.header_block = header_block;
    slot.res.status = status;
    slot.res.body += body;
    slot.ready = final_chunk;
    it->second.bytes += body.size();
    total_ += body.size();
    evict_locked();
  }
  if (final_chunk) cv_.notify_all();
}

void PageStore::close_session(SessionId id, bool failed) {
  {
    std::lock_guard lk(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end() || !it->second.open) return;
    it->second.open = false;
    it->second.failed = failed;
    it->second.closed_at = std::chrono::steady_clock::now();
    evict_locked();
  }
  cv_.notify_all();
}

bool PageStore::session_failed(SessionId id) const {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(id);
  return it != sessions_.end() && it->second.failed;
}

PageStore::Lookup PageStore::wait_for(const std::string& url, std::chrono::steady_clock::time_point deadline,
                                      StoredResource& out) {
  std::unique_lock lk(mu_);
  expire_locked();
  bool waited = false;
  while (true) {
    auto ix = index_.find(url);
    if (ix == index_.end()) return waited ? Lookup::Failed : Lookup::NotHere;
    const SessionId id = ix->second;
    auto& session = sessions_.at(id);
    auto& slot = session.slots.at(url);
    if (slot.ready) {
      out = slot.res;
      touch_locked(id);
      return Lookup::Hit;
    }
    if (!session.open) return waited ? Lookup::Failed : Lookup::NotHere;
    waited = true;
    if (cv_.wait_until(lk, deadline) == std::cv_status::timeout) {
      // One last look: the resource may have landed together with the timeout.
      auto again = index_.find(url);
      if (again != index_.end()) {
        auto& s = sessions_.at(again->second);
        if (s.slots.at(url).ready) {
          out = s.slots.at(url).res;
          return Lookup::Hit;
        }
      }
      return Lookup::Failed;
    }
  }
}

std::uint64_t PageStore::bytes() const {
  std::lock_guard lk(mu_);
  return total_;
}

std::size_t PageStore::sessions() const {
  std::lock_guard lk(mu_);
  return sessions_.size();
}

void PageStore::touch_locked(SessionId id) {
  lru_.remove(id);
  lru_.push_front(id);
}

void PageStore::drop_locked(std::map<SessionId, Session>::iterator s) {
  for (const auto& [url, slot] : s->second.slots) {
    auto ix = index_.find(url);
    if (ix != index_.end() && ix->second == s->first) index_.erase(ix);
  }
  total_ -= s->second.bytes;
  lru_.remove(s->first);
  sessions_.erase(s);
}

void PageStore::evict_locked() {
  // Whole pages go, least recently used first; pages still loading stay.
  auto it = lru_.end();
  while (total_ > capacity_ && it != lru_.begin()) {
    --it;
    auto s = sessions_.find(*it);
    if (s->second.open) continue;
    it = std::next(it);
    drop_locked(s);
  }
}

void PageStore::expire_locked() {
  const auto now = std::chrono::steady_clock::now();
  for (auto s = sessions_.begin(); s != sessions_.end();) {
    auto next = std::next(s);
    if (!s->second.open && now - s->second.closed_at >= retention_) drop_locked(s);
    s = next;
  }
}

}  // namespace cgn::clientproxy
