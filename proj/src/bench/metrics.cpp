#include "clai/bench/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <vector>

#include "clai/core/error.hpp"
#include "clai/core/types.hpp"

namespace clai::bench {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Last "-?d[d,]*(.d+)?" run in text, commas kept.
std::optional<std::string> last_number(std::string_view text) {
  std::optional<std::string> found;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    if (start > 0 && text[start - 1] == '-' && (start < 2 || !std::isalnum(static_cast<unsigned char>(text[start - 2]))))
      --start;
    while (i < text.size() && (is_digit(text[i]) || (text[i] == ',' && i + 1 < text.size() && is_digit(text[i + 1]))))
      ++i;
    if (i + 1 < text.size() && text[i] == '.' && is_digit(text[i + 1])) {
      ++i;
      while (i < text.size() && is_digit(text[i])) ++i;
    }
    found = std::string(text.substr(start, i - start));
  }
  return found;
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(trim(text.substr(pos, end - pos)));
    pos = end + 1;
  }
  return out;
}

std::string strip_markup(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != '*') out.push_back(c);
  }
  return trim(out);
}

// Text following the last "final answer" header, or nullopt.
std::optional<std::string> header_answer(std::string_view text) {
  const std::string low = lower(text);
  const auto at = low.rfind("final answer");
  if (at == std::string::npos) return std::nullopt;
  std::size_t i = at + 12;
  while (i < text.size() && (text[i] == '*' || text[i] == ':' || text[i] == ' ' || text[i] == '\t')) ++i;
  const auto eol = text.find('\n', i);
  std::string inline_text = strip_markup(text.substr(i, eol == std::string_view::npos ? std::string_view::npos : eol - i));
  if (!inline_text.empty()) return inline_text;
  if (eol == std::string_view::npos) return std::nullopt;
  for (auto& line : lines_of(text.substr(eol + 1))) {
    auto t = strip_markup(line);
    if (!t.empty()) return t;
  }
  return std::nullopt;
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  std::string s;
  s.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto u = static_cast<unsigned char>(text[i]);
    if (text[i] == '$' || text[i] == ',' || text[i] == '*') continue;
    // UTF-8 euro (E2 82 AC), pound (C2 A3), yen (C2 A5)
    if (u == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x82 &&
        static_cast<unsigned char>(text[i + 2]) == 0xAC) {
      i += 2;
      continue;
    }
    if (u == 0xC2 && i + 1 < text.size() &&
        (static_cast<unsigned char>(text[i + 1]) == 0xA3 || static_cast<unsigned char>(text[i + 1]) == 0xA5)) {
      ++i;
      continue;
    }
    s.push_back(static_cast<char>(std::tolower(u)));
  }
  std::string out;
  for (auto& tok : split_ws(s)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  while (!out.empty() && (out.back() == '.' || out.back() == '!' || out.back() == '?' || out.back() == ';' ||
                          out.back() == ':' || out.back() == ' '))
    out.pop_back();
  return out;
}

std::optional<double> parse_number(std::string_view text) {
  std::string s;
  for (char c : trim(text)) {
    if (c != ',') s.push_back(c);
  }
  if (s.empty()) return std::nullopt;
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') ++i;
  bool digits = false, dot = false;
  for (; i < s.size(); ++i) {
    if (is_digit(s[i])) digits = true;
    else if (s[i] == '.' && !dot) dot = true;
    else return std::nullopt;
  }
  if (!digits) return std::nullopt;
  return std::strtod(s.c_str(), nullptr);
}

std::string extract_final_answer(std::string_view text, bool numeric) {
  if (trim(text).empty()) fail(ErrorKind::NoAnswer, "empty model output");
  if (auto h = header_answer(text)) {
    if (numeric) {
      if (auto n = last_number(*h)) return normalize_answer(*n);
    }
    return normalize_answer(*h);
  }
  if (numeric) {
    if (auto n = last_number(text)) return normalize_answer(*n);
  }
  const auto lines = lines_of(text);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (!it->empty()) return normalize_answer(*it);
  }
  fail(ErrorKind::NoAnswer, "no answer line");
}

bool score_exact(std::string_view pred, std::string_view gold) {
  const auto p = normalize_answer(pred);
  const auto g = normalize_answer(gold);
  const auto a = parse_number(p);
  const auto b = parse_number(g);
  if (a && b) return *a == *b || std::abs(*a - *b) <= 1e-6 * std::max(std::abs(*a), std::abs(*b));
  return p == g;
}

double score_f1(std::string_view pred, std::string_view gold) {
  const auto p = split_ws(normalize_answer(pred));
  const auto g = split_ws(normalize_answer(gold));
  if (p.empty() || g.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : g) ++counts[t];
  std::size_t shared = 0;
  for (const auto& t : p) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++shared;
    }
  }
  if (shared == 0) return 0.0;
  const double precision = static_cast<double>(shared) / static_cast<double>(p.size());
  const double recall = static_cast<double>(shared) / static_cast<double>(g.size());
  return 2 * precision * recall / (precision + recall);
}

double token_reduction(double base_avg, double method_avg) {
  if (!(base_avg > 0)) fail(ErrorKind::ZeroBaseline, "baseline average tokens must be positive");
  return 100.0 * (base_avg - method_avg) / base_avg;
}

double compression_ratio(double input_tokens, double pruned_tokens) {
  if (!(pruned_tokens > 0)) fail(ErrorKind::ZeroPruned, "pruned token count must be positive");
  return input_tokens / pruned_tokens;
}

double round1(double x) { return std::floor(x * 10.0 + 0.5) / 10.0; }

}  // namespace clai::bench
