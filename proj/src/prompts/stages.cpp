#include "clai/prompts/stages.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "clai/core/error.hpp"
#include "clai/prompts/json_extract.hpp"

namespace clai::prompts {
namespace {

using nlohmann::json;

void check_query(const Query& q) {
  auto v = validate_query(q);
  if (!v.ok()) fail(ErrorKind::InvalidQuery, v.violations.front());
}

std::string render(const PromptTemplate& t, std::map<std::string, std::string, std::less<>> values) {
  check_template(t);
  return substitute(t.body, values);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  return lines;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_blank(char c) { return c == ' ' || c == '\t'; }

// Saturating conversion of an integral JSON number.
std::optional<std::int64_t> as_integer(const json& j) {
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    return u > static_cast<std::uint64_t>(kMax) ? kMax : static_cast<std::int64_t>(u);
  }
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) {
    const double d = j.get<double>();
    if (!std::isfinite(d) || std::floor(d) != d) return std::nullopt;
    if (d >= 9.2e18) return kMax;
    if (d <= -9.2e18) return std::numeric_limits<std::int64_t>::min();
    return static_cast<std::int64_t>(d);
  }
  return std::nullopt;
}

std::int64_t required_integer(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorKind::SchemaMismatch, fmt::format("missing field '{}'", key));
  auto v = as_integer(*it);
  if (!v) fail(ErrorKind::SchemaMismatch, fmt::format("field '{}' must be an integer, got {}", key, it->type_name()));
  return *v;
}

int clamp_to_int(std::int64_t v) {
  return static_cast<int>(std::clamp<std::int64_t>(v, std::numeric_limits<int>::min(), std::numeric_limits<int>::max()));
}

// Header lines of the Stage-3 response grammar.
enum class Section { none, reasoning, final_answer, self_check };

struct Header {
  Section section;
  std::string inline_text;
};

std::string strip_decoration(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == '*' || s[b] == '#' || s[b] == '_' || is_blank(s[b]))) ++b;
  while (e > b && (s[e - 1] == '*' || s[e - 1] == '_' || is_blank(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_bold(std::string_view s) {
  std::string t = trim(s);
  std::size_t b = 0, e = t.size();
  while (b < e && t[b] == '*') ++b;
  while (e > b && t[e - 1] == '*') --e;
  return trim(std::string_view(t).substr(b, e - b));
}

std::optional<Header> match_header(std::string_view line) {
  const std::string bare = strip_decoration(line);
  const std::string low = lower(bare);
  const std::pair<std::string_view, Section> headers[] = {
      {"reasoning:", Section::reasoning},
      {"final answer:", Section::final_answer},
      {"self-correction check:", Section::self_check},
      {"self correction check:", Section::self_check},
  };
  for (const auto& [prefix, section] : headers) {
    if (low.rfind(prefix, 0) == 0) {
      return Header{section, strip_decoration(std::string_view(bare).substr(prefix.size()))};
    }
  }
  return std::nullopt;
}

// "Step N:" / "**Step N.**" etc. Returns the text after the marker.
std::optional<std::string> match_step(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && (is_blank(line[i]) || line[i] == '*' || line[i] == '-')) ++i;
  if (lower(line.substr(i, 4)) != "step") return std::nullopt;
  i += 4;
  std::size_t digits_begin = i;
  while (i < line.size() && is_blank(line[i])) ++i;
  if (i == digits_begin) return std::nullopt;
  const std::size_t d0 = i;
  while (i < line.size() && is_digit(line[i])) ++i;
  if (i == d0) return std::nullopt;
  while (i < line.size() && line[i] == '*') ++i;
  if (i >= line.size() || (line[i] != ':' && line[i] != '.' && line[i] != ')')) return std::nullopt;
  ++i;
  return strip_decoration(line.substr(i));
}

std::optional<bool> parse_yes_no(std::string_view value) {
  std::string v = lower(value);
  v.erase(std::remove_if(v.begin(), v.end(), [](char c) { return c == '[' || c == ']' || c == '*' || c == ' '; }),
          v.end());
  if (v.rfind("yes", 0) == 0) return true;
  if (v.rfind("no", 0) == 0) return false;
  return std::nullopt;
}

bool starts_with_bullet(std::string_view s, std::size_t& consumed) {
  if (s.empty()) return false;
  if (s[0] == '-' || s[0] == '*' || s[0] == '+') {
    consumed = 1;
    return s.size() == 1 || is_blank(s[1]);
  }
  // U+2022 bullet
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xE2 && static_cast<unsigned char>(s[1]) == 0x80 &&
      static_cast<unsigned char>(s[2]) == 0xA2) {
    consumed = 3;
    return true;
  }
  std::size_t i = 0;
  while (i < s.size() && is_digit(s[i])) ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')') && (i + 1 == s.size() || is_blank(s[i + 1]))) {
    consumed = i + 1;
    return true;
  }
  return false;
}

}  // namespace

std::string escape_fences(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (true) {
    const auto hit = text.find(R"(""")", pos);
    if (hit == std::string_view::npos) break;
    out.append(text.substr(pos, hit - pos));
    out.append("'''");
    pos = hit + 3;
  }
  out.append(text.substr(pos));
  return out;
}

std::string numbered_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.push_back('\n');
    out += fmt::format("{}. {}", i + 1, items[i]);
  }
  return out;
}

std::string format_documents(const std::vector<Document>& docs) {
  std::string out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (i) out.push_back('\n');
    out += fmt::format("--- doc:{} ---\n{}", docs[i].id, escape_fences(docs[i].text));
  }
  return out;
}

std::string format_pruned_context(const std::optional<PrunedContext>& pruned) {
  if (!pruned) return "None";
  if (pruned->facts.empty()) return "No relevant facts were found in the retrieved documents.";
  std::string out;
  for (std::size_t i = 0; i < pruned->facts.size(); ++i) {
    if (i) out.push_back('\n');
    out += "- " + pruned->facts[i];
  }
  return out;
}

std::string format_reasoning(const ReasoningOutput& out) {
  std::string s = "**Reasoning:**\n";
  for (const auto& step : out.steps) s += fmt::format("Step {}: {}\n", step.step_index, step.text);
  s += "\n**Final Answer:**\n" + out.final_answer + "\n";
  if (out.self_check) {
    s += fmt::format(
        "\n**Self-Correction Check:**\n- All sub-questions addressed: {}\n- Final answer consistent with reasoning: {}\n",
        out.self_check->all_subquestions_addressed ? "Yes" : "No", out.self_check->answer_consistent ? "Yes" : "No");
  }
  return s;
}

std::string render_stage1(const Query& q, const TemplateSet& templates) {
  check_query(q);
  return render(templates.stage1, {{std::string(kUserQuery), escape_fences(q.text)}});
}

std::string render_stage2(const Query& q, const CognitivePlan& plan, const std::vector<Document>& docs,
                          const TemplateSet& templates) {
  check_query(q);
  if (docs.empty()) fail(ErrorKind::NotApplicable, "stage 2 needs at least one document");
  return render(templates.stage2, {{std::string(kUserQuery), escape_fences(q.text)},
                                   {std::string(kSubQuestions), numbered_list(plan.sub_questions)},
                                   {std::string(kRawDocuments), format_documents(docs)}});
}

std::string render_stage3(const Query& q, const CognitivePlan& plan, const std::optional<PrunedContext>& pruned,
                          std::int64_t budget, const TemplateSet& templates) {
  check_query(q);
  require(budget >= 1, fmt::format("token budget must be >= 1, got {}", budget));
  return render(templates.stage3, {{std::string(kUserQuery), escape_fences(q.text)},
                                   {std::string(kSubQuestions), numbered_list(plan.sub_questions)},
                                   {std::string(kPrunedContext), format_pruned_context(pruned)},
                                   {std::string(kTokenBudget), std::to_string(budget)}});
}

std::string render_correction(const Query& q, const ReasoningOutput& a_raw, const CognitivePlan& plan,
                              const TemplateSet& templates) {
  check_query(q);
  require(!trim(a_raw.final_answer).empty(), "correction needs a stage-3 final answer");
  require(!plan.sub_questions.empty(), "correction needs at least one sub-question");
  return render(templates.correction, {{std::string(kUserQuery), escape_fences(q.text)},
                                       {std::string(kSubQuestions), numbered_list(plan.sub_questions)},
                                       {std::string(kRawReasoning), escape_fences(format_reasoning(a_raw))}});
}

std::string render_tuned(std::string_view instruction, const std::optional<std::string>& input) {
  require(!instruction.empty(), "instruction must be non-empty");
  std::string out = "### Instruction:\n";
  out.append(instruction);
  out.append("\n\n");
  if (input) {
    out.append("### Input:\n");
    out.append(*input);
    out.append("\n\n");
  }
  out.append("### Response:\n");
  return out;
}

std::string strip_enumeration(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && is_digit(text[i])) ++i;
  if (i == 0 || i >= text.size() || (text[i] != '.' && text[i] != ')')) return std::string(text);
  std::size_t j = i + 1;
  if (j >= text.size() || !is_blank(text[j])) return std::string(text);
  while (j < text.size() && is_blank(text[j])) ++j;
  return std::string(text.substr(j));
}

CognitivePlan parse_stage1(std::string_view raw) {
  const auto obj = extract_json_object(raw);
  if (!obj) fail(ErrorKind::NoJsonFound, "no parseable JSON object in stage-1 output");

  auto sq = obj->find("sub_questions");
  if (sq == obj->end()) fail(ErrorKind::SchemaMismatch, "missing field 'sub_questions'");
  if (!sq->is_array()) fail(ErrorKind::SchemaMismatch, "field 'sub_questions' must be an array");

  CognitivePlan plan;
  for (const auto& item : *sq) {
    if (!item.is_string()) fail(ErrorKind::SchemaMismatch, "sub_questions entries must be strings");
    plan.sub_questions.push_back(strip_enumeration(item.get<std::string>()));
  }
  plan.complexity_score = clamp_to_int(required_integer(*obj, "complexity_score"));
  plan.reasoning_token_budget = required_integer(*obj, "reasoning_token_budget");

  auto v = validate_plan(plan);
  if (!v.ok()) {
    std::string msg;
    for (const auto& s : v.violations) msg += (msg.empty() ? "" : "; ") + s;
    fail(ErrorKind::PlanInvalid, msg);
  }
  return plan;
}

PrunedContext parse_stage2(std::string_view raw) {
  PrunedContext ctx;
  bool previous_blank = true;
  for (auto line : split_lines(raw)) {
    const std::string t = trim(line);
    if (t.empty()) {
      previous_blank = true;
      continue;
    }
    std::size_t consumed = 0;
    if (starts_with_bullet(t, consumed)) {
      std::string fact = trim(std::string_view(t).substr(consumed));
      if (!fact.empty()) ctx.facts.push_back(std::move(fact));
    } else if (!previous_blank && !ctx.facts.empty()) {
      ctx.facts.back() += " " + t;
    } else {
      ctx.facts.push_back(t);
    }
    previous_blank = false;
  }
  if (ctx.facts.size() == 1) {
    const auto only = lower(ctx.facts.front());
    if (only == "none" || only == "none." || only == "n/a") ctx.facts.clear();
  }
  ctx.source_doc_ids.assign(ctx.facts.size(), {});
  return ctx;
}

ReasoningOutput parse_stage3(std::string_view raw) {
  ReasoningOutput out;
  Section section = Section::none;
  bool saw_final_header = false;
  std::vector<std::string> final_lines;
  std::optional<bool> addressed, consistent;
  std::string last_content_line;

  for (auto line : split_lines(raw)) {
    if (auto h = match_header(line)) {
      section = h->section;
      if (section == Section::final_answer) {
        saw_final_header = true;
        if (!h->inline_text.empty()) final_lines.push_back(h->inline_text);
      }
      continue;
    }
    const std::string t = trim(line);
    if (t.empty()) continue;

    if (section == Section::self_check) {
      const auto colon = t.find(':');
      if (colon != std::string::npos) {
        const auto key = lower(std::string_view(t).substr(0, colon));
        const auto value = parse_yes_no(std::string_view(t).substr(colon + 1));
        if (key.find("addressed") != std::string::npos) addressed = value;
        else if (key.find("consistent") != std::string::npos) consistent = value;
      }
      continue;
    }
    last_content_line = t;
    if (section == Section::final_answer) {
      final_lines.push_back(t);
      continue;
    }
    if (auto step = match_step(t)) {
      out.steps.push_back({static_cast<int>(out.steps.size()) + 1, *step});
    } else if (!out.steps.empty()) {
      out.steps.back().text += "\n" + t;
    }
  }

  for (std::size_t i = 0; i < final_lines.size(); ++i) {
    if (i) out.final_answer.push_back('\n');
    out.final_answer += final_lines[i];
  }
  out.final_answer = strip_bold(out.final_answer);
  if (out.final_answer.empty()) {
    out.final_answer = strip_bold(last_content_line);
    out.degraded = true;
    if (out.final_answer.empty()) {
      fail(ErrorKind::MissingFinalAnswer, saw_final_header ? "final answer section is empty" : "no final answer");
    }
  }
  if (addressed && consistent) out.self_check = SelfCheck{*addressed, *consistent};
  return out;
}

std::optional<DecomposedPlan> parse_decomposed_plan(std::string_view raw) {
  for (auto candidate : find_json_objects(raw)) {
    auto obj = parse_object_lenient(candidate);
    if (!obj) continue;
    const json* node = &*obj;
    if (!(node->contains("analysis") && node->contains("plan"))) {
      auto it = node->find("output");
      if (it == node->end() || !it->is_object() || !(it->contains("analysis") && it->contains("plan"))) continue;
      node = &*it;
    }
    const auto& analysis = node->at("analysis");
    const auto& steps = node->at("plan");
    if (!analysis.is_string()) fail(ErrorKind::SchemaMismatch, "'analysis' must be a string");
    if (!steps.is_array()) fail(ErrorKind::SchemaMismatch, "'plan' must be an array");
    DecomposedPlan plan{analysis.get<std::string>(), {}};
    for (const auto& s : steps) {
      if (!s.is_object() || !s.contains("sub_problem") || !s.at("sub_problem").is_string()) {
        fail(ErrorKind::SchemaMismatch, "plan entries need a string 'sub_problem'");
      }
      const auto step = s.contains("step") ? as_integer(s.at("step")) : std::nullopt;
      if (!step) fail(ErrorKind::SchemaMismatch, "plan entries need an integer 'step'");
      plan.plan.push_back({clamp_to_int(*step), s.at("sub_problem").get<std::string>()});
    }
    auto v = validate_decomposed_plan(plan);
    if (!v.ok()) {
      std::string msg;
      for (const auto& m : v.violations) msg += (msg.empty() ? "" : "; ") + m;
      fail(ErrorKind::SchemaMismatch, msg);
    }
    return plan;
  }
  return std::nullopt;
}

}  // namespace clai::prompts
