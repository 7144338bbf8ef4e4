#include <algorithm>
#include <cctype>
#include <set>

#include "cgn/error.hpp"
#include "cgn/gatherproxy.hpp"

namespace cgn::gatherproxy {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = char(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string unescape_entities(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.substr(i, 5) == "&amp;") {
      out += '&';
      i += 4;
    } else {
      out += s[i];
    }
  }
  return out;
}

// Removes "." and ".." segments from an absolute path.
std::string normalize_path(std::string_view path) {
  std::vector<std::string> segs;
  std::size_t i = 1;
  bool trailing = false;
  while (i <= path.size()) {
    auto j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    auto seg = path.substr(i, j - i);
    trailing = j == path.size() && (seg == "." || seg == "..");
    if (seg == "..") {
      if (!segs.empty()) segs.pop_back();
    } else if (seg != ".") {
      segs.emplace_back(seg);
    }
    i = j + 1;
  }
  std::string out;
  for (std::size_t k = 0; k < segs.size(); ++k) {
    out += '/';
    out += segs[k];
  }
  if (out.empty() || trailing) out += '/';
  return out;
}

}  // namespace

std::string UrlParts::authority() const { return port == 80 ? host : host + ":" + std::to_string(port); }

UrlParts parse_http_url(std::string_view url) {
  if (url.size() < 7 || lower(url.substr(0, 7)) != "http://") {
    throw ValidationError("not an absolute http url: " + std::string(url));
  }
  auto rest = url.substr(7);
  auto slash = rest.find_first_of("/?#");
  auto authority = rest.substr(0, slash);
  UrlParts parts;
  if (authority.empty()) throw ValidationError("url has no host: " + std::string(url));
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    parts.host = lower(authority.substr(0, colon));
    auto port_text = authority.substr(colon + 1);
    unsigned long port = 0;
    if (port_text.empty() || port_text.size() > 5 ||
        !std::all_of(port_text.begin(), port_text.end(), [](char c) { return std::isdigit((unsigned char)c); }) ||
        (port = std::stoul(std::string(port_text))) == 0 || port > 65535) {
      throw ValidationError("bad port in url: " + std::string(url));
    }
    parts.port = std::uint16_t(port);
  } else {
    parts.host = lower(authority);
  }
  if (parts.host.empty()) throw ValidationError("url has no host: " + std::string(url));
  std::string target = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (auto hash = target.find('#'); hash != std::string::npos) target.erase(hash);
  if (target.empty() || target[0] != '/') target.insert(0, "/");
  parts.target = target;
  return parts;
}

std::string resolve_url(std::string_view base_url, std::string_view ref_in) {
  std::string ref = unescape_entities(trim(ref_in));
  if (auto hash = ref.find('#'); hash != std::string::npos) ref.erase(hash);
  if (ref.empty()) return "";
  if (ref.rfind("//", 0) == 0) ref = "http:" + ref;
  // A scheme is letters/digits/+.- followed by ':' before any path character.
  auto colon = ref.find(':');
  if (colon != std::string::npos && colon < ref.find_first_of("/?")) {
    const auto scheme = lower(std::string_view(ref).substr(0, colon));
    if (scheme != "http") return "";
    try {
      auto p = parse_http_url(ref);
      auto q = p.target.find('?');
      auto path = normalize_path(std::string_view(p.target).substr(0, q));
      return "http://" + p.authority() + path + (q == std::string::npos ? "" : p.target.substr(q));
    } catch (const ValidationError&) {
      return "";
    }
  }
  UrlParts base;
  try {
    base = parse_http_url(base_url);
  } catch (const ValidationError&) {
    return "";
  }
  const std::string origin = "http://" + base.authority();
  const auto bq = base.target.find('?');
  const std::string base_path = base.target.substr(0, bq);
  std::string target;
  if (ref[0] == '/') {
    target = ref;
  } else if (ref[0] == '?') {
    target = base_path + ref;
  } else {
    target = base_path.substr(0, base_path.rfind('/') + 1) + ref;
  }
  const auto q = target.find('?');
  return origin + normalize_path(std::string_view(target).substr(0, q)) +
         (q == std::string::npos ? "" : target.substr(q));
}

std::string kind_from_url(std::string_view url) {
  auto path = url.substr(0, url.find_first_of("?#"));
  auto scheme = path.find("://");
  if (scheme != std::string_view::npos) {
    auto slash = path.find('/', scheme + 3);
    path = slash == std::string_view::npos ? std::string_view("/") : path.substr(slash);
  }
  auto last = path.substr(path.rfind('/') + 1);
  auto dot = last.rfind('.');
  if (dot == std::string_view::npos) return last.empty() ? "html" : "other";
  const auto ext = lower(last.substr(dot + 1));
  static const std::set<std::string> images{"png", "jpg", "jpeg", "gif", "webp", "svg", "ico", "bmp", "avif"};
  if (ext == "css") return "css";
  if (ext == "js" || ext == "mjs") return "js";
  if (ext == "html" || ext == "htm") return "html";
  if (images.count(ext)) return "img";
  return "other";
}

namespace {

struct Tag {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;

  const std::string* attr(std::string_view n) const {
    for (const auto& [k, v] : attrs) {
      if (k == n) return &v;
    }
    return nullptr;
  }
};

// Parses the tag starting just after '<'. Advances `pos` past the closing '>'.
Tag read_tag(std::string_view s, std::size_t& pos) {
  Tag tag;
  auto is_name = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':'; };
  std::size_t i = pos;
  while (i < s.size() && is_name(s[i])) tag.name += char(std::tolower(static_cast<unsigned char>(s[i++])));
  while (i < s.size() && s[i] != '>') {
    if (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == '/') {
      ++i;
      continue;
    }
    std::string key;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '=' && s[i] != '>' && s[i] != '/') {
      key += char(std::tolower(static_cast<unsigned char>(s[i++])));
    }
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::string value;
    if (i < s.size() && s[i] == '=') {
      ++i;
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i < s.size() && (s[i] == '"' || s[i] == '\'')) {
        const char quote = s[i++];
        auto end = s.find(quote, i);
        if (end == std::string_view::npos) end = s.size();
        value = std::string(s.substr(i, end - i));
        i = end + 1;
      } else {
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])) && s[i] != '>') value += s[i++];
      }
    }
    if (!key.empty()) tag.attrs.emplace_back(std::move(key), std::move(value));
    else ++i;
  }
  pos = std::min(i + 1, s.size());
  return tag;
}

void extract_html(std::string_view s, std::string_view base, std::vector<ResourceRef>& out) {
  std::size_t pos = 0;
  while ((pos = s.find('<', pos)) != std::string_view::npos) {
    ++pos;
    if (s.substr(pos, 3) == "!--") {
      auto end = s.find("-->", pos);
      pos = end == std::string_view::npos ? s.size() : end + 3;
      continue;
    }
    if (pos >= s.size() || !std::isalpha(static_cast<unsigned char>(s[pos]))) continue;
    Tag tag = read_tag(s, pos);
    const std::string* ref = nullptr;
    std::string kind;
    if (tag.name == "img") {
      ref = tag.attr("src");
      kind = "img";
    } else if (tag.name == "script") {
      ref = tag.attr("src");
      kind = "js";
    } else if (tag.name == "iframe") {
      ref = tag.attr("src");
      kind = "html";
    } else if (tag.name == "link") {
      ref = tag.attr("href");
      const std::string* rel = tag.attr("rel");
      const std::string r = rel ? lower(*rel) : "";
      if (r.find("stylesheet") != std::string::npos) kind = "css";
      else if (r.find("icon") != std::string::npos) kind = "img";
      else kind = "";
    }
    if (!ref) continue;
    auto url = resolve_url(base, *ref);
    if (url.empty()) continue;
    if (kind.empty()) kind = kind_from_url(url);
    out.push_back({url, kind, std::string(base)});
  }
}

void extract_css(std::string_view s, std::string_view base, std::vector<ResourceRef>& out) {
  const std::string low = lower(s);
  std::size_t pos = 0;
  while (true) {
    const auto u = low.find("url(", pos);
    const auto imp = low.find("@import", pos);
    if (u == std::string::npos && imp == std::string::npos) break;
    if (imp < u) {
      // @import "x.css"; the url(...) form is handled by the url( branch.
      std::size_t i = imp + 7;
      while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
      if (i < s.size() && (s[i] == '"' || s[i] == '\'')) {
        const char quote = s[i];
        auto end = s.find(quote, i + 1);
        if (end == std::string_view::npos) break;
        auto url = resolve_url(base, s.substr(i + 1, end - i - 1));
        if (!url.empty()) out.push_back({url, "css", std::string(base)});
        pos = end + 1;
      } else {
        pos = i;
        if (low.compare(i, 4, "url(") == 0) {
          auto end = s.find(')', i + 4);
          if (end == std::string_view::npos) break;
          auto v = trim(s.substr(i + 4, end - i - 4));
          if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
          auto url = resolve_url(base, v);
          if (!url.empty()) out.push_back({url, "css", std::string(base)});
          pos = end + 1;
        }
      }
      continue;
    }
    auto end = s.find(')', u + 4);
    if (end == std::string_view::npos) break;
    auto v = trim(s.substr(u + 4, end - u - 4));
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
    auto url = resolve_url(base, v);
    if (!url.empty()) out.push_back({url, kind_from_url(url), std::string(base)});
    pos = end + 1;
  }
}

}  // namespace

std::vector<ResourceRef> extract_resources(std::string_view body, std::string_view base_url, std::string_view kind) {
  std::vector<ResourceRef> found;
  if (kind == "html") extract_html(body, base_url, found);
  else if (kind == "css") extract_css(body, base_url, found);
  std::vector<ResourceRef> out;
  std::set<std::string> seen;
  for (auto& r : found) {
    if (seen.insert(r.url).second) out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cgn::gatherproxy
