#include "clai/service/config.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "clai/core/error.hpp"

namespace clai::service {
namespace {

[[noreturn]] void bad(std::size_t line, const std::string& msg) {
  fail(ErrorKind::ConfigError, fmt::format("line {}: {}", line, msg));
}

class LineParser {
 public:
  LineParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

  void skip_ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t')) ++i_;
  }
  bool at_end_or_comment() {
    skip_ws();
    return i_ >= s_.size() || s_[i_] == '#' || s_[i_] == '\r';
  }
  bool peek(char c) const { return i_ < s_.size() && s_[i_] == c; }
  void expect(char c) {
    if (!peek(c)) bad(line_, fmt::format("expected '{}'", c));
    ++i_;
  }

  std::string key() {
    skip_ws();
    if (peek('"')) return basic_string();
    if (peek('\'')) return literal_string();
    const auto start = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '-')) ++i_;
    if (i_ == start) bad(line_, "expected a key");
    return std::string(s_.substr(start, i_ - start));
  }

  std::string table_name() {
    std::string name;
    while (true) {
      name += key();
      skip_ws();
      if (!peek('.')) break;
      ++i_;
      name += '.';
    }
    return name;
  }

  TomlValue value() {
    skip_ws();
    if (peek('"')) return basic_string();
    if (peek('\'')) return literal_string();
    const auto start = i_;
    while (i_ < s_.size() && s_[i_] != ' ' && s_[i_] != '\t' && s_[i_] != '#' && s_[i_] != '\r') ++i_;
    const std::string tok(s_.substr(start, i_ - start));
    if (tok.empty()) bad(line_, "missing value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    bool is_float = false;
    for (std::size_t k = 0; k < tok.size(); ++k) {
      const char c = tok[k];
      if (c == '_') {
        if (k == 0 || k + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[k - 1])) ||
            !std::isdigit(static_cast<unsigned char>(tok[k + 1])))
          bad(line_, "misplaced '_' in number " + tok);
        continue;
      }
      if (c == '.' || c == 'e' || c == 'E') is_float = true;
      else if (!std::isdigit(static_cast<unsigned char>(c)) && c != '+' && c != '-')
        bad(line_, "unsupported value " + tok);
      digits.push_back(c);
    }
    errno = 0;
    char* end = nullptr;
    if (is_float) {
      const double v = std::strtod(digits.c_str(), &end);
      if (end != digits.c_str() + digits.size() || errno == ERANGE) bad(line_, "bad float " + tok);
      return v;
    }
    const long long v = std::strtoll(digits.c_str(), &end, 10);
    if (end != digits.c_str() + digits.size() || errno == ERANGE || digits.empty()) bad(line_, "bad integer " + tok);
    return static_cast<std::int64_t>(v);
  }

 private:
  std::string basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (i_ >= s_.size()) bad(line_, "unterminated string");
      const char c = s_[i_++];
      if (c == '"') return out;
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      if (i_ >= s_.size()) bad(line_, "unterminated escape");
      switch (s_[i_++]) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default: bad(line_, "unsupported escape in string");
      }
    }
  }

  std::string literal_string() {
    expect('\'');
    const auto end = s_.find('\'', i_);
    if (end == std::string_view::npos) bad(line_, "unterminated string");
    std::string out(s_.substr(i_, end - i_));
    i_ = end + 1;
    return out;
  }

  std::string_view s_;
  std::size_t line_;
  std::size_t i_ = 0;
};

const char* type_name(const TomlValue& v) {
  switch (v.index()) {
    case 0: return "string";
    case 1: return "integer";
    case 2: return "float";
    default: return "boolean";
  }
}

struct Reader {
  const std::string& table;
  const std::map<std::string, TomlValue>& values;

  [[noreturn]] void wrong(const std::string& key, const TomlValue& v, const char* want) const {
    fail(ErrorKind::ConfigError, fmt::format("[{}] {} must be a {}, got {}", table, key, want, type_name(v)));
  }
  std::string str(const std::string& key, const TomlValue& v) const {
    if (auto* s = std::get_if<std::string>(&v)) return *s;
    wrong(key, v, "string");
  }
  std::int64_t integer(const std::string& key, const TomlValue& v) const {
    if (auto* i = std::get_if<std::int64_t>(&v)) return *i;
    wrong(key, v, "integer");
  }
  double number(const std::string& key, const TomlValue& v) const {
    if (auto* d = std::get_if<double>(&v)) return *d;
    if (auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    wrong(key, v, "number");
  }
  bool boolean(const std::string& key, const TomlValue& v) const {
    if (auto* b = std::get_if<bool>(&v)) return *b;
    wrong(key, v, "boolean");
  }
};

[[noreturn]] void unknown_key(const std::string& table, const std::string& key) {
  fail(ErrorKind::ConfigError, fmt::format("unknown key '{}' in [{}]", key, table));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

TomlDocument parse_toml(std::string_view text) {
  TomlDocument doc;
  doc[""];
  std::set<std::string> seen_tables;
  std::string table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    LineParser p(line, line_no);
    if (p.at_end_or_comment()) continue;
    if (p.peek('[')) {
      p.expect('[');
      if (p.peek('[')) bad(line_no, "arrays of tables are not supported");
      table = p.table_name();
      p.skip_ws();
      p.expect(']');
      if (!p.at_end_or_comment()) bad(line_no, "trailing characters after table header");
      if (!seen_tables.insert(table).second) bad(line_no, "table [" + table + "] defined twice");
      doc[table];
      continue;
    }
    const auto key = p.key();
    p.skip_ws();
    p.expect('=');
    auto value = p.value();
    if (!p.at_end_or_comment()) bad(line_no, "trailing characters after value");
    if (!doc[table].emplace(key, std::move(value)).second) bad(line_no, "duplicate key '" + key + "'");
  }
  return doc;
}

AppConfig config_from_toml(const TomlDocument& doc, const std::filesystem::path& base_dir) {
  AppConfig cfg;
  auto& pc = cfg.pipeline;
  auto& bc = pc.backend;
  for (const auto& [table, values] : doc) {
    const Reader r{table, values};
    for (const auto& [key, v] : values) {
      if (key == "api_key" || key == "key" || key == "token" || key == "secret")
        fail(ErrorKind::ConfigError, "API keys are read from the environment (api_key_env), not from the config file");
      if (table.empty()) {
        unknown_key("root", key);
      } else if (table == "backend") {
        if (key == "kind") {
          const auto k = r.str(key, v);
          if (k == "http") bc.kind = gateway::BackendKind::http;
          else if (k == "replay") bc.kind = gateway::BackendKind::replay;
          else fail(ErrorKind::ConfigError, "backend.kind must be http or replay, got " + k);
        } else if (key == "base_url") bc.base_url = r.str(key, v);
        else if (key == "api_key_env") bc.api_key_env = r.str(key, v);
        else if (key == "timeout_ms") bc.timeout_ms = r.integer(key, v);
        else if (key == "max_retries") bc.max_retries = static_cast<int>(r.integer(key, v));
        else if (key == "retry_base_delay_ms") bc.retry_base_delay_ms = r.integer(key, v);
        else if (key == "max_concurrent") bc.max_concurrent = static_cast<int>(r.integer(key, v));
        else if (key == "replay_store") bc.replay_store = resolve(base_dir, r.str(key, v));
        else if (key == "record_store") bc.record_store = resolve(base_dir, r.str(key, v));
        else unknown_key(table, key);
      } else if (table == "pipeline") {
        if (key == "model") pc.model = r.str(key, v);
        else if (key == "enable_correction") pc.enable_correction = r.boolean(key, v);
        else if (key == "prune_mode") pc.prune_mode = pipeline::parse_prune_mode(r.str(key, v));
        else if (key == "icl_mode") pc.icl_mode = pipeline::parse_icl_mode(r.str(key, v));
        else if (key == "budget_slack") pc.budget_slack = r.number(key, v);
        else if (key == "prune_threshold") pc.prune_threshold = r.number(key, v);
        else if (key == "templates_dir") pc.templates = prompts::load_templates(resolve(base_dir, r.str(key, v)));
        else unknown_key(table, key);
      } else if (table == "budget") {
        auto& b = pc.budget_policy;
        if (key == "low_max") b.low_max = static_cast<int>(r.integer(key, v));
        else if (key == "med_max") b.med_max = static_cast<int>(r.integer(key, v));
        else if (key == "low_budget") b.low_budget = r.integer(key, v);
        else if (key == "medium_budget") b.medium_budget = r.integer(key, v);
        else if (key == "high_budget") b.high_budget = r.integer(key, v);
        else unknown_key(table, key);
      } else if (table == "weights") {
        auto& w = pc.weights;
        if (key == "entity") w.entity = r.number(key, v);
        else if (key == "logical") w.logical = r.number(key, v);
        else if (key == "arithmetic") w.arithmetic = r.number(key, v);
        else if (key == "numeric") w.numeric = r.number(key, v);
        else if (key == "depth") w.depth = r.number(key, v);
        else unknown_key(table, key);
      } else if (table == "bench.quality_thresholds") {
        cfg.quality_thresholds[key] = r.number(key, v);
      } else if (table == "bench") {
        unknown_key(table, key);
      } else {
        fail(ErrorKind::ConfigError, "unknown table [" + table + "]");
      }
    }
    if (!table.empty() && table != "backend" && table != "pipeline" && table != "budget" && table != "weights" &&
        table != "bench" && table != "bench.quality_thresholds")
      fail(ErrorKind::ConfigError, "unknown table [" + table + "]");
  }
  if (auto v = gateway::validate_backend_config(bc); !v) fail(ErrorKind::ConfigError, v.violations.front());
  if (auto v = pipeline::validate_config(pc); !v) fail(ErrorKind::ConfigError, v.violations.front());
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_toml(parse_toml(ss.str()), path.parent_path());
}

}  // namespace clai::service
