#pragma once

// Batched client <-> gathering proxy wire protocol.
//
// frame    := u32 payload_length (big-endian) || u8 type || payload
// REQUEST, MANIFEST, END, ERROR payloads are canonical JSON (sorted keys,
// no whitespace). RESOURCE is binary:
//   u16 url_len || url || u16 status || u16 seq (bit 15 = final chunk)
//   || u32 fetch_ms || u32 header_len || header_block || body
// See docs/protocol.md.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cgn::gatherwire {

inline constexpr std::size_t kMaxPayload = 16u * 1024u * 1024u;
inline constexpr std::size_t kHeaderSize = 5;

enum class FrameType : std::uint8_t { Request = 0x01, Manifest = 0x02, Resource = 0x03, End = 0x04, Error = 0x05 };

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TruncationError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class FrameTooLargeError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

struct RequestPayload {
  std::string url;
  std::uint64_t cwnd_hint_bytes = 0;  // 0 = no hint
  bool want_compression = false;
  bool operator==(const RequestPayload&) const = default;
};

struct ManifestEntry {
  std::string url;
  std::string kind;  // html | css | js | img | other
  bool operator==(const ManifestEntry&) const = default;
};

struct ManifestPayload {
  std::vector<ManifestEntry> resources;
  bool operator==(const ManifestPayload&) const = default;
};

struct ResourcePayload {
  std::string url;
  std::uint16_t status = 0;  // 0 = fetch failed
  std::uint16_t seq = 0;     // chunk index, < 0x8000
  bool final_chunk = true;
  std::uint32_t fetch_ms = 0;
  std::string header_block;
  std::string body;
  bool operator==(const ResourcePayload&) const = default;
};

struct EndPayload {
  std::uint64_t resource_count = 0;
  std::uint64_t total_body_bytes = 0;
  std::uint64_t gather_ms = 0;
  std::uint64_t cwnd_hint_bytes = 0;  // echo of the request's hint
  bool truncated = false;
  bool operator==(const EndPayload&) const = default;
};

struct ErrorPayload {
  std::string message;
  bool operator==(const ErrorPayload&) const = default;
};

using Frame = std::variant<RequestPayload, ManifestPayload, ResourcePayload, EndPayload, ErrorPayload>;

FrameType type_of(const Frame& f);
bool is_terminal(const Frame& f);

/// Throws FrameTooLargeError if the payload exceeds kMaxPayload and
/// ProtocolError if the frame violates a field invariant.
std::vector<std::uint8_t> encode(const Frame& f);
void encode_into(const Frame& f, std::vector<std::uint8_t>& out);

/// Largest body that fits a single RESOURCE frame with the given url/headers.
std::size_t max_body_per_frame(std::size_t url_len, std::size_t header_len);

/// Splits a resource into as many RESOURCE frames as the payload cap needs.
std::vector<ResourcePayload> chunk_resource(const ResourcePayload& whole);

/// Incremental decoder for one session. Bytes may arrive in any split.
class Decoder {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  /// Next complete frame, or nullopt when more bytes are needed or the
  /// session has ended. Throws ProtocolError on malformed input.
  std::optional<Frame> next();
  /// True once an END or ERROR frame has been returned.
  bool finished() const noexcept { return finished_; }
  /// Call at end of stream; throws TruncationError if a partial frame is buffered.
  void finish() const;
  /// Starts a new session on the same connection, keeping buffered bytes.
  void restart() noexcept { finished_ = false; }
  std::size_t buffered() const noexcept { return buf_.size() - head_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t head_ = 0;
  bool finished_ = false;
};

/// Decodes a complete byte string: frames up to the first terminal one.
/// Throws TruncationError when the bytes end mid-frame or before a terminal frame.
std::vector<Frame> decode_all(std::span<const std::uint8_t> bytes);

/// Checks a proxy -> client transcript: one MANIFEST before any RESOURCE,
/// exactly one terminal frame at the end, every manifested url delivered
/// exactly once (unless END.truncated), and END totals matching the frames.
void check_transcript(const std::vector<Frame>& frames);

}  // namespace cgn::gatherwire
