#include <doctest.h>

#include <random>
#include <string>

#include "cgn/gatherwire.hpp"

using namespace cgn::gatherwire;

namespace {

using Bytes = std::vector<std::uint8_t>;

std::string random_ascii(std::mt19937_64& rng, std::size_t max_len) {
  std::string s(rng() % (max_len + 1), ' ');
  for (auto& c : s) c = char(0x20 + rng() % 95);
  return s;
}

std::string random_binary(std::mt19937_64& rng, std::size_t max_len) {
  std::string s(rng() % (max_len + 1), '\0');
  for (auto& c : s) c = char(rng() & 0xff);
  return s;
}

Frame random_frame(std::mt19937_64& rng) {
  switch (rng() % 5) {
    case 0:
      return RequestPayload{"http://" + random_ascii(rng, 40), rng() % 2 ? rng() : 0, bool(rng() % 2)};
    case 1: {
      ManifestPayload m;
      const char* kinds[] = {"html", "css", "js", "img", "other"};
      for (std::size_t i = rng() % 6; i > 0; --i) m.resources.push_back({random_ascii(rng, 30), kinds[rng() % 5]});
      return m;
    }
    case 2: {
      ResourcePayload r;
      r.url = random_binary(rng, 60);
      r.status = rng() % 4 == 0 ? 0 : std::uint16_t(100 + rng() % 500);
      r.seq = std::uint16_t(rng() % 0x8000);
      r.final_chunk = rng() % 2;
      r.fetch_ms = std::uint32_t(rng());
      r.header_block = random_binary(rng, 80);
      r.body = random_binary(rng, rng() % 8 == 0 ? 5000 : 200);
      return r;
    }
    case 3:
      return EndPayload{rng() % 1000, rng(), rng() % 100000, rng() % 2 ? rng() : 0, bool(rng() % 2)};
    default:
      return ErrorPayload{random_ascii(rng, 50)};
  }
}

// Hand-assembled bytes of a frame, written without the library encoder.
Bytes frame_bytes(std::uint8_t type, const std::string& payload) {
  Bytes b = {std::uint8_t(payload.size() >> 24), std::uint8_t(payload.size() >> 16),
             std::uint8_t(payload.size() >> 8), std::uint8_t(payload.size()), type};
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

Bytes concat(const std::vector<Frame>& frames) {
  Bytes out;
  for (const auto& f : frames) encode_into(f, out);
  return out;
}

}  // namespace

TEST_CASE("golden END frame bytes") {
  const std::string json =
      R"({"cwnd_hint_bytes":0,"gather_ms":0,"resource_count":0,"total_body_bytes":0,"truncated":false})";
  REQUIRE(json.size() == 93);
  Bytes expect = {0x00, 0x00, 0x00, 0x5d, 0x04};
  expect.insert(expect.end(), json.begin(), json.end());
  CHECK(encode(EndPayload{}) == expect);
  auto frames = decode_all(expect);
  REQUIRE(frames.size() == 1);
  CHECK(std::get<EndPayload>(frames[0]) == EndPayload{});
}

TEST_CASE("control payloads are canonical json") {
  auto b = encode(RequestPayload{"http://a.test/", 1460, false});
  std::string text(b.begin() + 5, b.end());
  CHECK(text == R"({"cwnd_hint_bytes":1460,"url":"http://a.test/","want_compression":false})");
  CHECK(b[4] == 0x01);
  auto m = encode(ManifestPayload{{{"http://a.test/x.css", "css"}}});
  CHECK(std::string(m.begin() + 5, m.end()) == R"({"resources":[{"kind":"css","url":"http://a.test/x.css"}]})");
  auto e = encode(ErrorPayload{"boom"});
  CHECK(e == frame_bytes(0x05, R"({"message":"boom"})"));
}

TEST_CASE("resource layout is big-endian binary") {
  ResourcePayload r{"http://a/", 200, 3, true, 0x01020304, "K: V\r\n", "xy"};
  auto b = encode(r);
  std::string p;
  p += std::string("\x00\x09", 2) + "http://a/";
  p += std::string("\x00\xc8", 2);                // status 200
  p += std::string("\x80\x03", 2);                // seq 3, final
  p += std::string("\x01\x02\x03\x04", 4);        // fetch_ms
  p += std::string("\x00\x00\x00\x06", 4) + "K: V\r\n";
  p += "xy";
  CHECK(b == frame_bytes(0x03, p));
}

TEST_CASE("empty-body resource decodes with an empty body") {
  ResourcePayload r{"http://a/", 204, 0, true, 0, "", ""};
  auto b = encode(r);
  CHECK(b.size() == 5 + 2 + 9 + 2 + 2 + 4 + 4);
  Decoder d;
  d.feed(b);
  auto f = d.next();
  REQUIRE(f);
  CHECK(std::get<ResourcePayload>(*f) == r);
}

TEST_CASE("encode then decode is the identity on 10^4 random frames") {
  std::mt19937_64 rng(20240601);
  for (int i = 0; i < 10000; ++i) {
    Frame f = random_frame(rng);
    Decoder d;
    d.feed(encode(f));
    auto back = d.next();
    REQUIRE(back.has_value());
    CHECK(*back == f);
    CHECK(d.buffered() == 0);
  }
}

TEST_CASE("three concatenated frames decode in order") {
  std::vector<Frame> frames = {ManifestPayload{{{"http://a/", "html"}}},
                               ResourcePayload{"http://a/", 200, 0, true, 5, "", "hello"},
                               EndPayload{1, 5, 9, 0, false}};
  CHECK(decode_all(concat(frames)) == frames);
}

TEST_CASE("byte-at-a-time decoding equals batch decoding") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Frame> frames;
    for (int i = int(rng() % 8); i > 0; --i) {
      Frame f = random_frame(rng);
      if (!is_terminal(f)) frames.push_back(f);
    }
    frames.push_back(EndPayload{});
    auto bytes = concat(frames);
    auto batch = decode_all(bytes);

    Decoder one;
    std::vector<Frame> inc;
    for (auto b : bytes) {
      one.feed({&b, 1});
      while (auto f = one.next()) inc.push_back(std::move(*f));
    }
    one.finish();
    CHECK(inc == batch);

    Decoder rnd;
    std::vector<Frame> chunked;
    for (std::size_t off = 0; off < bytes.size();) {
      std::size_t n = std::min<std::size_t>(bytes.size() - off, 1 + rng() % 300);
      rnd.feed({bytes.data() + off, n});
      off += n;
      while (auto f = rnd.next()) chunked.push_back(std::move(*f));
    }
    CHECK(chunked == batch);
  }
}

TEST_CASE("stream cut mid-frame delivers earlier frames then reports truncation") {
  std::vector<Frame> frames = {ManifestPayload{{{"http://a/", "html"}}},
                               ResourcePayload{"http://a/", 200, 0, true, 5, "", "hello"}, EndPayload{}};
  auto bytes = concat(frames);
  bytes.resize(bytes.size() - 3);
  Decoder d;
  d.feed(bytes);
  std::vector<Frame> got;
  while (auto f = d.next()) got.push_back(*f);
  CHECK(got.size() == 2);
  CHECK_THROWS_AS(d.finish(), TruncationError);
  CHECK_THROWS_AS(decode_all(bytes), TruncationError);

  // Clean frame boundary without a terminal frame is truncation too.
  auto partial = concat({frames[0]});
  CHECK_THROWS_AS(decode_all(partial), TruncationError);
}

TEST_CASE("decoder stops after a terminal frame until restarted") {
  auto bytes = concat({EndPayload{}, ErrorPayload{"x"}});
  Decoder d;
  d.feed(bytes);
  CHECK(d.next().has_value());
  CHECK(d.finished());
  CHECK_FALSE(d.next().has_value());
  d.restart();
  auto f = d.next();
  REQUIRE(f);
  CHECK(std::get<ErrorPayload>(*f).message == "x");
}

TEST_CASE("malformed headers are protocol errors") {
  Decoder bad_type;
  bad_type.feed(frame_bytes(0x09, "{}"));
  CHECK_THROWS_AS(bad_type.next(), ProtocolError);

  Decoder zero_type;
  zero_type.feed(frame_bytes(0x00, "{}"));
  CHECK_THROWS_AS(zero_type.next(), ProtocolError);

  Decoder huge;
  huge.feed(Bytes{0x01, 0x00, 0x00, 0x01, 0x04});  // 16 MiB + 1
  CHECK_THROWS_AS(huge.next(), ProtocolError);

  Decoder at_cap;
  at_cap.feed(Bytes{0x01, 0x00, 0x00, 0x00, 0x03});  // exactly 16 MiB: waits for bytes
  CHECK_FALSE(at_cap.next().has_value());

  Decoder bad_json;
  bad_json.feed(frame_bytes(0x04, "{\"resource_count\":1}"));
  CHECK_THROWS_AS(bad_json.next(), ProtocolError);

  Decoder bad_status;
  bad_status.feed(frame_bytes(0x03, std::string("\x00\x00\x02\x58\x80\x00\x00\x00\x00\x00\x00\x00\x00\x00", 14)));
  CHECK_THROWS_AS(bad_status.next(), ProtocolError);

  Decoder bad_url;
  bad_url.feed(frame_bytes(0x01, R"({"cwnd_hint_bytes":0,"url":"https://a/","want_compression":false})"));
  CHECK_THROWS_AS(bad_url.next(), ProtocolError);
}

TEST_CASE("encoder enforces field invariants and the size cap") {
  CHECK_THROWS_AS(encode(ResourcePayload{"u", 600, 0, true, 0, "", ""}), ProtocolError);
  CHECK_THROWS_AS(encode(ResourcePayload{"u", 99, 0, true, 0, "", ""}), ProtocolError);
  CHECK_THROWS_AS(encode(ResourcePayload{"u", 200, 0x8000, true, 0, "", ""}), ProtocolError);
  CHECK_THROWS_AS(encode(RequestPayload{"ftp://a/", 0, false}), ProtocolError);
  ResourcePayload big{"u", 200, 0, true, 0, "", std::string(kMaxPayload, 'x')};
  CHECK_THROWS_AS(encode(big), FrameTooLargeError);
  big.body.resize(max_body_per_frame(1, 0));
  CHECK(encode(big).size() == kHeaderSize + kMaxPayload);
}

TEST_CASE("oversize bodies split into sequenced chunks that reassemble") {
  ResourcePayload whole{"http://a/big", 200, 0, true, 12, "A: b\r\n", {}};
  const std::size_t cap = max_body_per_frame(whole.url.size(), whole.header_block.size());
  whole.body.assign(2 * cap + 17, 'q');
  whole.body[cap] = 'Z';
  auto chunks = chunk_resource(whole);
  REQUIRE(chunks.size() == 3);
  std::string body;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    CHECK(chunks[i].seq == i);
    CHECK(chunks[i].final_chunk == (i + 1 == chunks.size()));
    auto back = decode_all(concat({chunks[i], EndPayload{}}));
    CHECK(std::get<ResourcePayload>(back[0]) == chunks[i]);
    body += chunks[i].body;
  }
  CHECK(body == whole.body);
  CHECK(chunks[0].header_block == whole.header_block);
  CHECK(chunk_resource(ResourcePayload{"http://a/", 200, 0, true, 0, "", ""}).size() == 1);
}

TEST_CASE("random prefixes and mutations never crash the decoder") {
  std::mt19937_64 rng(99);
  std::vector<Frame> frames;
  for (int i = 0; i < 20; ++i) {
    Frame f = random_frame(rng);
    if (!is_terminal(f)) frames.push_back(f);
  }
  frames.push_back(EndPayload{3, 4, 5, 6, true});
  const auto corpus = concat(frames);
  int decoded = 0, errors = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    Bytes b(corpus.begin(), corpus.begin() + std::ptrdiff_t(rng() % (corpus.size() + 1)));
    if (trial % 2 == 1) {
      for (int k = 0; k < 4 && !b.empty(); ++k) b[rng() % b.size()] ^= std::uint8_t(1u << (rng() % 8));
    }
    if (trial % 3 == 0) {
      Bytes junk = {std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng()), std::uint8_t(rng()),
                    std::uint8_t(rng())};
      b.insert(b.end(), junk.begin(), junk.end());
    }
    try {
      decode_all(b);
      ++decoded;
    } catch (const ProtocolError&) {
      ++errors;
    }
  }
  CHECK(decoded + errors == 3000);
  CHECK(errors > 0);
}

TEST_CASE("transcript checker accepts valid sessions and rejects broken ones") {
  ManifestPayload man{{{"http://a/", "html"}, {"http://a/x.png", "img"}}};
  ResourcePayload root{"http://a/", 200, 0, true, 1, "", "<html>"};
  ResourcePayload img{"http://a/x.png", 200, 0, true, 1, "", "png"};
  EndPayload end{2, 9, 10, 0, false};
  CHECK_NOTHROW(check_transcript({man, root, img, end}));
  CHECK_NOTHROW(check_transcript({ErrorPayload{"root failed"}}));
  CHECK_NOTHROW(check_transcript({man, root, ErrorPayload{"gave up"}}));
  // Supplemental manifests for CSS-discovered urls are allowed.
  ManifestPayload late{{{"http://a/bg.png", "img"}}};
  ResourcePayload bg{"http://a/bg.png", 0, 0, true, 1, "", ""};
  CHECK_NOTHROW(check_transcript({man, root, late, bg, img, EndPayload{3, 9, 10, 0, false}}));

  CHECK_THROWS_AS(check_transcript({root, man, img, end}), ProtocolError);
  CHECK_THROWS_AS(check_transcript({man, root, img}), ProtocolError);
  CHECK_THROWS_AS(check_transcript({man, root, end}), ProtocolError);
  CHECK_NOTHROW(check_transcript({man, root, EndPayload{1, 6, 10, 0, true}}));
  CHECK_THROWS_AS(check_transcript({man, root, img, img, EndPayload{3, 12, 10, 0, false}}), ProtocolError);
  CHECK_THROWS_AS(check_transcript({man, root, img, EndPayload{2, 8, 10, 0, false}}), ProtocolError);
  CHECK_THROWS_AS(check_transcript({man, end, root}), ProtocolError);
  CHECK_THROWS_AS(check_transcript({man, man, root, img, end}), ProtocolError);
  CHECK_THROWS_AS(check_transcript({}), ProtocolError);
}
