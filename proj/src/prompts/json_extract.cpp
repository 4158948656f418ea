#include "clai/prompts/json_extract.hpp"

namespace clai::prompts {
namespace {

constexpr std::string_view kFence = "```";

// Appends balanced top-level objects found in text to out.
void scan_objects(std::string_view text, std::vector<std::string_view>& out, std::size_t max_candidates) {
  std::size_t depth = 0;
  std::size_t start = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size() && out.size() < max_candidates; ++i) {
    const char c = text[i];
    if (depth == 0) {
      if (c == '{') {
        depth = 1;
        start = i;
        in_string = false;
        escaped = false;
      }
      continue;
    }
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) out.push_back(text.substr(start, i - start + 1));
  }
}

}  // namespace

std::vector<std::string_view> find_json_objects(std::string_view text, std::size_t max_candidates) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (out.size() < max_candidates) {
    const auto open = text.find(kFence, pos);
    if (open == std::string_view::npos) break;
    auto body = text.find('\n', open + kFence.size());
    if (body == std::string_view::npos) break;
    ++body;
    const auto close = text.find(kFence, body);
    const auto end = close == std::string_view::npos ? text.size() : close;
    scan_objects(text.substr(body, end - body), out, max_candidates);
    if (close == std::string_view::npos) break;
    pos = close + kFence.size();
  }
  scan_objects(text, out, max_candidates);
  return out;
}

std::string repair_json(std::string_view candidate) {
  std::string s;
  s.reserve(candidate.size());
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    // U+201C / U+201D -> '"', U+2018 / U+2019 -> '\''
    if (i + 2 < candidate.size() && static_cast<unsigned char>(candidate[i]) == 0xE2 &&
        static_cast<unsigned char>(candidate[i + 1]) == 0x80) {
      const auto third = static_cast<unsigned char>(candidate[i + 2]);
      if (third == 0x9C || third == 0x9D) {
        s.push_back('"');
        i += 2;
        continue;
      }
      if (third == 0x98 || third == 0x99) {
        s.push_back('\'');
        i += 2;
        continue;
      }
    }
    s.push_back(candidate[i]);
  }

  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      out.push_back(c);
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < s.size() && (s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) ++j;
      if (j < s.size() && (s[j] == '}' || s[j] == ']')) continue;
    }
    out.push_back(c);
  }
  return out;
}

std::optional<nlohmann::json> parse_object_lenient(std::string_view candidate) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string text = attempt == 0 ? std::string(candidate) : repair_json(candidate);
    auto j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (!j.is_discarded() && j.is_object()) return j;
  }
  return std::nullopt;
}

std::optional<nlohmann::json> extract_json_object(std::string_view text) {
  for (auto candidate : find_json_objects(text)) {
    if (auto j = parse_object_lenient(candidate)) return j;
  }
  return std::nullopt;
}

}  // namespace clai::prompts
