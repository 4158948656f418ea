#include "clai/prompts/templates.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "clai/core/assets.hpp"
#include "clai/core/error.hpp"

namespace clai::prompts {
namespace {

constexpr std::string_view kOpen = "{{";
constexpr std::string_view kClose = "}}";

bool is_ident_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

// Positions of well-formed {{identifier}} slots.
struct Slot {
  std::size_t begin;
  std::size_t end;
  std::string_view name;
};

std::vector<Slot> find_slots(std::string_view body) {
  std::vector<Slot> slots;
  std::size_t pos = 0;
  while ((pos = body.find(kOpen, pos)) != std::string_view::npos) {
    std::size_t i = pos + kOpen.size();
    while (i < body.size() && is_ident_char(body[i])) ++i;
    if (i > pos + kOpen.size() && body.substr(i, kClose.size()) == kClose) {
      slots.push_back({pos, i + kClose.size(), body.substr(pos + kOpen.size(), i - pos - kOpen.size())});
      pos = i + kClose.size();
    } else {
      ++pos;
    }
  }
  return slots;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::TemplateError, fmt::format("cannot read template {}", p.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<std::string_view> required_placeholders(Stage stage) {
  switch (stage) {
    case Stage::stage1_plan: return {kUserQuery};
    case Stage::stage2_prune: return {kUserQuery, kSubQuestions, kRawDocuments};
    case Stage::stage3_reason: return {kUserQuery, kSubQuestions, kPrunedContext, kTokenBudget};
    case Stage::correction: return {kUserQuery, kSubQuestions, kRawReasoning};
    case Stage::single_pass: return {};
  }
  return {};
}

void check_template(const PromptTemplate& t) {
  const auto required = required_placeholders(t.stage);
  const auto slots = find_slots(t.body);
  for (auto name : required) {
    const auto n = std::count_if(slots.begin(), slots.end(), [&](const Slot& s) { return s.name == name; });
    if (n != 1) {
      fail(ErrorKind::TemplateError,
           fmt::format("{} template must contain {{{{{}}}}} exactly once (found {})", to_string(t.stage), name, n));
    }
  }
  for (const auto& s : slots) {
    if (std::find(required.begin(), required.end(), s.name) == required.end()) {
      fail(ErrorKind::TemplateError, fmt::format("{} template has unknown placeholder {{{{{}}}}}", to_string(t.stage), s.name));
    }
  }
}

std::string substitute(std::string_view body, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(body.size());
  std::size_t cursor = 0;
  for (const auto& slot : find_slots(body)) {
    auto it = values.find(slot.name);
    if (it == values.end()) fail(ErrorKind::TemplateError, fmt::format("unresolved placeholder {{{{{}}}}}", slot.name));
    out.append(body.substr(cursor, slot.begin - cursor));
    out.append(it->second);
    cursor = slot.end;
  }
  out.append(body.substr(cursor));
  return out;
}

const TemplateSet& default_templates() {
  static const TemplateSet set = [] {
    TemplateSet s{{Stage::stage1_plan, std::string(assets::kStage1Template)},
                  {Stage::stage2_prune, std::string(assets::kStage2Template)},
                  {Stage::stage3_reason, std::string(assets::kStage3Template)},
                  {Stage::correction, std::string(assets::kCorrectionTemplate)}};
    for (const auto* t : {&s.stage1, &s.stage2, &s.stage3, &s.correction}) check_template(*t);
    return s;
  }();
  return set;
}

TemplateSet load_templates(const std::filesystem::path& dir) {
  TemplateSet set = default_templates();
  const std::pair<const char*, PromptTemplate*> files[] = {
      {"stage1.txt", &set.stage1}, {"stage2.txt", &set.stage2}, {"stage3.txt", &set.stage3},
      {"correction.txt", &set.correction}};
  for (const auto& [name, target] : files) {
    const auto path = dir / name;
    if (std::filesystem::exists(path)) target->body = read_file(path);
    check_template(*target);
  }
  return set;
}

}  // namespace clai::prompts
