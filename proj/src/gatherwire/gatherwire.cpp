#include "cgn/gatherwire.hpp"

#include <map>
#include <set>

#include <json.hpp>

namespace cgn::gatherwire {
namespace {

using nlohmann::json;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(std::uint8_t(v >> 8));
  out.push_back(std::uint8_t(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(std::uint8_t(v >> shift));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) | (std::uint32_t(p[2]) << 8) | p[3];
}

std::uint16_t get_u16(const std::uint8_t* p) { return std::uint16_t((p[0] << 8) | p[1]); }

bool valid_status(std::uint16_t s) { return s == 0 || (s >= 100 && s <= 599); }

std::string control_json(const Frame& f) {
  json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RequestPayload>) {
          if (p.url.rfind("http://", 0) != 0) throw ProtocolError("REQUEST url must be http://");
          j = {{"url", p.url}, {"cwnd_hint_bytes", p.cwnd_hint_bytes}, {"want_compression", p.want_compression}};
        } else if constexpr (std::is_same_v<T, ManifestPayload>) {
          j["resources"] = json::array();
          for (const auto& e : p.resources) j["resources"].push_back({{"url", e.url}, {"kind", e.kind}});
        } else if constexpr (std::is_same_v<T, EndPayload>) {
          j = {{"resource_count", p.resource_count},
               {"total_body_bytes", p.total_body_bytes},
               {"gather_ms", p.gather_ms},
               {"cwnd_hint_bytes", p.cwnd_hint_bytes},
               {"truncated", p.truncated}};
        } else if constexpr (std::is_same_v<T, ErrorPayload>) {
          j = {{"message", p.message}};
        }
      },
      f);
  return j.dump();
}

Frame parse_control(FrameType type, const std::uint8_t* data, std::size_t len) {
  json j;
  try {
    j = json::parse(data, data + len);
    switch (type) {
      case FrameType::Request: {
        RequestPayload p{j.at("url").get<std::string>(), j.at("cwnd_hint_bytes").get<std::uint64_t>(),
                         j.at("want_compression").get<bool>()};
        if (p.url.rfind("http://", 0) != 0) throw ProtocolError("REQUEST url must be http://");
        return p;
      }
      case FrameType::Manifest: {
        ManifestPayload p;
        for (const auto& e : j.at("resources")) {
          p.resources.push_back({e.at("url").get<std::string>(), e.at("kind").get<std::string>()});
        }
        return p;
      }
      case FrameType::End:
        return EndPayload{j.at("resource_count").get<std::uint64_t>(), j.at("total_body_bytes").get<std::uint64_t>(),
                          j.at("gather_ms").get<std::uint64_t>(), j.at("cwnd_hint_bytes").get<std::uint64_t>(),
                          j.at("truncated").get<bool>()};
      case FrameType::Error:
        return ErrorPayload{j.at("message").get<std::string>()};
      default:
        break;
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad control payload: ") + e.what());
  }
  throw ProtocolError("not a control frame");
}

Frame parse_resource(const std::uint8_t* p, std::size_t len) {
  std::size_t off = 0;
  auto need = [&](std::size_t n) {
    if (len - off < n) throw ProtocolError("RESOURCE payload too short");
  };
  ResourcePayload r;
  need(2);
  std::size_t url_len = get_u16(p + off);
  off += 2;
  need(url_len);
  r.url.assign(reinterpret_cast<const char*>(p + off), url_len);
  off += url_len;
  need(2 + 2 + 4 + 4);
  r.status = get_u16(p + off);
  if (!valid_status(r.status)) throw ProtocolError("RESOURCE status out of range");
  std::uint16_t seq = get_u16(p + off + 2);
  r.final_chunk = (seq & 0x8000u) != 0;
  r.seq = std::uint16_t(seq & 0x7fffu);
  r.fetch_ms = get_u32(p + off + 4);
  std::size_t header_len = get_u32(p + off + 8);
  off += 12;
  need(header_len);
  r.header_block.assign(reinterpret_cast<const char*>(p + off), header_len);
  off += header_len;
  r.body.assign(reinterpret_cast<const char*>(p + off), len - off);
  return r;
}

}  // namespace

FrameType type_of(const Frame& f) {
  return std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RequestPayload>) return FrameType::Request;
        if constexpr (std::is_same_v<T, ManifestPayload>) return FrameType::Manifest;
        if constexpr (std::is_same_v<T, ResourcePayload>) return FrameType::Resource;
        if constexpr (std::is_same_v<T, EndPayload>) return FrameType::End;
        return FrameType::Error;
      },
      f);
}

bool is_terminal(const Frame& f) {
  auto t = type_of(f);
  return t == FrameType::End || t == FrameType::Error;
}

std::size_t max_body_per_frame(std::size_t url_len, std::size_t header_len) {
  std::size_t fixed = 2 + url_len + 2 + 2 + 4 + 4 + header_len;
  return fixed >= kMaxPayload ? 0 : kMaxPayload - fixed;
}

void encode_into(const Frame& f, std::vector<std::uint8_t>& out) {
  const std::size_t start = out.size();
  out.resize(start + kHeaderSize);
  if (const auto* r = std::get_if<ResourcePayload>(&f)) {
    if (r->url.size() > 0xffff) throw ProtocolError("RESOURCE url longer than 65535 bytes");
    if (!valid_status(r->status)) throw ProtocolError("RESOURCE status out of range");
    if (r->seq > 0x7fff) throw ProtocolError("RESOURCE seq exceeds 15 bits");
    if (r->header_block.size() > 0xffffffffu) throw FrameTooLargeError("header block too large");
    const std::size_t payload = 2 + r->url.size() + 2 + 2 + 4 + 4 + r->header_block.size() + r->body.size();
    if (payload > kMaxPayload) {
      out.resize(start);
      throw FrameTooLargeError("RESOURCE payload of " + std::to_string(payload) + " bytes exceeds the 16 MiB cap");
    }
    out.reserve(start + kHeaderSize + payload);
    put_u16(out, std::uint16_t(r->url.size()));
    out.insert(out.end(), r->url.begin(), r->url.end());
    put_u16(out, r->status);
    put_u16(out, std::uint16_t(r->seq | (r->final_chunk ? 0x8000u : 0u)));
    put_u32(out, r->fetch_ms);
    put_u32(out, std::uint32_t(r->header_block.size()));
    out.insert(out.end(), r->header_block.begin(), r->header_block.end());
    out.insert(out.end(), r->body.begin(), r->body.end());
  } else {
    std::string text = control_json(f);
    if (text.size() > kMaxPayload) {
      out.resize(start);
      throw FrameTooLargeError("control payload exceeds the 16 MiB cap");
    }
    out.insert(out.end(), text.begin(), text.end());
  }
  const std::uint32_t len = std::uint32_t(out.size() - start - kHeaderSize);
  for (int i = 0; i < 4; ++i) out[start + std::size_t(i)] = std::uint8_t(len >> (24 - 8 * i));
  out[start + 4] = std::uint8_t(type_of(f));
}

std::vector<std::uint8_t> encode(const Frame& f) {
  std::vector<std::uint8_t> out;
  encode_into(f, out);
  return out;
}

std::vector<ResourcePayload> chunk_resource(const ResourcePayload& whole) {
  const std::size_t cap = max_body_per_frame(whole.url.size(), whole.header_block.size());
  if (cap == 0) throw FrameTooLargeError("url and headers alone exceed the frame cap");
  std::vector<ResourcePayload> out;
  std::size_t off = 0;
  do {
    ResourcePayload c = whole;
    c.body = whole.body.substr(off, cap);
    c.seq = std::uint16_t(out.size());
    if (out.size() > 0x7fff) throw FrameTooLargeError("resource needs more than 32768 chunks");
    off += c.body.size();
    c.final_chunk = off >= whole.body.size();
    if (!out.empty()) c.header_block.clear();
    out.push_back(std::move(c));
  } while (off < whole.body.size());
  return out;
}

void Decoder::feed(std::span<const std::uint8_t> bytes) {
  if (head_ > 0 && head_ == buf_.size()) {
    buf_.clear();
    head_ = 0;
  }
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> Decoder::next() {
  if (finished_) return std::nullopt;
  const std::size_t avail = buf_.size() - head_;
  if (avail < kHeaderSize) return std::nullopt;
  const std::uint8_t* p = buf_.data() + head_;
  const std::size_t len = get_u32(p);
  const std::uint8_t type = p[4];
  if (type < 0x01 || type > 0x05) throw ProtocolError("unknown frame type " + std::to_string(type));
  if (len > kMaxPayload) throw ProtocolError("frame length " + std::to_string(len) + " exceeds cap");
  if (avail < kHeaderSize + len) return std::nullopt;
  const std::uint8_t* payload = p + kHeaderSize;
  Frame f = FrameType(type) == FrameType::Resource ? parse_resource(payload, len)
                                                   : parse_control(FrameType(type), payload, len);
  head_ += kHeaderSize + len;
  if (head_ == buf_.size()) {
    buf_.clear();
    head_ = 0;
  } else if (head_ > (1u << 20) && head_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + std::ptrdiff_t(head_));
    head_ = 0;
  }
  if (is_terminal(f)) finished_ = true;
  return f;
}

void Decoder::finish() const {
  if (!finished_ && buffered() > 0) {
    throw TruncationError("stream ended inside a frame (" + std::to_string(buffered()) + " bytes buffered)");
  }
}

std::vector<Frame> decode_all(std::span<const std::uint8_t> bytes) {
  Decoder d;
  d.feed(bytes);
  std::vector<Frame> out;
  while (auto f = d.next()) out.push_back(std::move(*f));
  d.finish();
  if (!d.finished()) throw TruncationError("stream ended before END or ERROR");
  return out;
}

void check_transcript(const std::vector<Frame>& frames) {
  if (frames.empty()) throw ProtocolError("empty transcript");
  if (!is_terminal(frames.back())) throw ProtocolError("transcript does not end with END or ERROR");
  bool seen_manifest = false;
  std::map<std::string, int> manifested;  // url -> final chunks delivered
  std::set<std::string> resource_urls;
  std::uint64_t bytes = 0, delivered = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (is_terminal(f) && i + 1 != frames.size()) throw ProtocolError("terminal frame before the end");
    switch (type_of(f)) {
      case FrameType::Request: throw ProtocolError("REQUEST frame in a proxy transcript");
      case FrameType::Manifest:
        seen_manifest = true;
        for (const auto& e : std::get<ManifestPayload>(f).resources) {
          if (!manifested.emplace(e.url, 0).second) throw ProtocolError("url manifested twice: " + e.url);
        }
        break;
      case FrameType::Resource: {
        if (!seen_manifest) throw ProtocolError("RESOURCE before MANIFEST");
        const auto& r = std::get<ResourcePayload>(f);
        auto it = manifested.find(r.url);
        if (it == manifested.end()) throw ProtocolError("RESOURCE for unmanifested url " + r.url);
        bytes += r.body.size();
        if (r.final_chunk) {
          if (++it->second > 1) throw ProtocolError("url delivered twice: " + r.url);
          ++delivered;
        }
        break;
      }
      case FrameType::End: {
        if (!seen_manifest) throw ProtocolError("END without MANIFEST");
        const auto& e = std::get<EndPayload>(f);
        if (e.total_body_bytes != bytes) throw ProtocolError("END total_body_bytes does not match frames");
        if (e.resource_count != delivered) throw ProtocolError("END resource_count does not match frames");
        if (!e.truncated) {
          for (const auto& [url, n] : manifested) {
            if (n != 1) throw ProtocolError("manifested url never delivered: " + url);
          }
        }
        break;
      }
      case FrameType::Error: break;
    }
  }
}

}  // namespace cgn::gatherwire
