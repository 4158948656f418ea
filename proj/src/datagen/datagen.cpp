#include "clai/datagen/datagen.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <thread>

#include "clai/core/codec.hpp"
#include "clai/prompts/stages.hpp"

namespace clai::datagen {
namespace {

constexpr std::string_view kStepsLead = "Here is the step-by-step solution:";
constexpr std::string_view kRagStepsLead = "Based on the provided context, here is the step-by-step solution:";

bool is_step_line(std::string_view line) {
  const auto t = trim(line);
  std::string_view s = t;
  if (s.size() >= 5 && (s.substr(0, 5) == "Step " || s.substr(0, 5) == "step ")) s.remove_prefix(5);
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  return i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')' || s[i] == ':');
}

bool has_step_line(std::string_view text) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    if (is_step_line(text.substr(pos, end - pos))) return true;
    pos = end + 1;
  }
  return false;
}

std::string one_line(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(c == '\n' || c == '\r' ? ' ' : c);
  return trim(out);
}

complexity::Tier parse_tier(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "low") return complexity::Tier::Low;
  if (s == "medium") return complexity::Tier::Medium;
  if (s == "high") return complexity::Tier::High;
  fail(ErrorKind::SchemaMismatch, "unknown tier '" + s + "'");
}

std::string join_violations(const ValidationResult& v) {
  std::string msg;
  for (const auto& s : v.violations) msg += (msg.empty() ? "" : "; ") + s;
  return msg;
}

}  // namespace

ValidationResult validate_sample(const TrainingSample& s) {
  ValidationResult r;
  if (trim(s.instruction).empty()) r.violations.push_back("empty instruction");
  if (const auto* plan = std::get_if<DecomposedPlan>(&s.output)) {
    for (auto& v : validate_decomposed_plan(*plan).violations) r.violations.push_back(v);
  } else if (trim(std::get<std::string>(s.output)).empty()) {
    r.violations.push_back("empty output");
  }
  if (s.tier) {
    const bool is_plan = std::holds_alternative<DecomposedPlan>(s.output);
    if (*s.tier == complexity::Tier::High && !is_plan) r.violations.push_back("high tier needs a plan output");
    if (*s.tier != complexity::Tier::High && is_plan)
      r.violations.push_back(fmt::format("{} tier needs a text output", complexity::to_string(*s.tier)));
    if (*s.tier == complexity::Tier::Medium && !is_plan && !has_step_line(std::get<std::string>(s.output)))
      r.violations.push_back("medium tier output has no step lines");
  }
  return r;
}

std::string encode_sample(const TrainingSample& s) {
  json j = json::object();
  j["instruction"] = s.instruction;
  if (s.input) j["input"] = *s.input;
  if (const auto* plan = std::get_if<DecomposedPlan>(&s.output)) j["output"] = *plan;
  else j["output"] = std::get<std::string>(s.output);
  if (s.tier) j["tier"] = complexity::to_string(*s.tier);
  return dump_canonical(j);
}

TrainingSample decode_sample(std::string_view line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::SchemaMismatch, "sample is not a JSON object");
  TrainingSample s;
  try {
    s.instruction = j.at("instruction").get<std::string>();
    if (auto in = j.find("input"); in != j.end() && !in->is_null()) s.input = in->get<std::string>();
    const auto& out = j.at("output");
    if (out.is_string()) s.output = out.get<std::string>();
    else s.output = out.get<DecomposedPlan>();
    if (auto t = j.find("tier"); t != j.end() && !t->is_null()) s.tier = parse_tier(*t);
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaMismatch, e.what());
  }
  return s;
}

void write_jsonl(const std::vector<TrainingSample>& samples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::StorageError, "cannot write " + path.string());
  for (const auto& s : samples) out << encode_sample(s) << '\n';
  out.flush();
  if (!out) fail(ErrorKind::StorageError, "write to " + path.string() + " failed");
}

std::vector<TrainingSample> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::StorageError, "cannot read " + path.string());
  std::vector<TrainingSample> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(decode_sample(line));
    } catch (const Error& e) {
      throw Error::parse(n, e.what());
    }
  }
  return out;
}

TrainingSample sample_from_transcript(const Query& seed, const PipelineTranscript& t) {
  if (t.degraded) {
    std::string why = t.issues.empty() ? "degraded teacher run" : t.issues.front();
    fail(ErrorKind::ValidationFailure, "teacher run degraded: " + why);
  }
  if (!t.plan) fail(ErrorKind::ValidationFailure, "teacher transcript has no plan");
  const auto& plan = *t.plan;
  const auto tier = complexity::classify_tier(plan.complexity_score);
  const bool rag = pipeline::is_rag_task(seed);

  TrainingSample s;
  s.instruction = seed.text;
  s.tier = tier;
  if (rag) s.input = prompts::format_documents(*seed.documents);

  switch (tier) {
    case complexity::Tier::Low:
      s.output = trim(t.final_answer);
      break;
    case complexity::Tier::Medium: {
      if (!t.reasoning || t.reasoning->steps.empty())
        fail(ErrorKind::ValidationFailure, "medium-tier teacher output has no reasoning steps");
      std::string out(rag ? kRagStepsLead : kStepsLead);
      for (const auto& step : t.reasoning->steps) out += fmt::format("\nStep {}: {}", step.step_index, one_line(step.text));
      out += "\nFinal Answer: " + trim(t.final_answer);
      s.output = std::move(out);
      break;
    }
    case complexity::Tier::High: {
      DecomposedPlan p;
      p.analysis = fmt::format(
          "This problem has an estimated complexity of {}/10 and needs {} sub-problems solved in order. "
          "I will decompose it into a plan.",
          plan.complexity_score, plan.sub_questions.size());
      for (std::size_t i = 0; i < plan.sub_questions.size(); ++i)
        p.plan.push_back({static_cast<int>(i) + 1, plan.sub_questions[i]});
      s.output = std::move(p);
      break;
    }
  }
  if (auto v = validate_sample(s); !v) fail(ErrorKind::ValidationFailure, join_violations(v));
  return s;
}

TrainingSample generate_sample(const Query& seed, pipeline::Pipeline& teacher) {
  if (auto v = validate_query(seed); !v) fail(ErrorKind::InvalidQuery, v.violations.front());
  PipelineTranscript t;
  try {
    t = teacher.run_clai_prompt(seed);
  } catch (const Error& e) {
    fail(ErrorKind::TeacherFailure, fmt::format("seed {}: {}", seed.id, e.what()));
  }
  return sample_from_transcript(seed, t);
}

TrainingSample generate_sample(const Query& seed, const pipeline::PipelineConfig& teacher_cfg) {
  auto backend = gateway::make_backend(teacher_cfg.backend);
  pipeline::Pipeline p(teacher_cfg, *backend);
  return generate_sample(seed, p);
}

DatagenReport generate_dataset(const std::vector<bench::TaskRecord>& seeds, pipeline::Pipeline& teacher,
                               const DatagenOptions& options) {
  std::map<std::string, std::size_t> available;
  for (const auto& s : seeds) ++available[s.benchmark];
  std::map<std::string, std::size_t> quota;
  for (const auto& [bench, n] : available) {
    double frac = 1.0;
    if (auto it = options.mixture.find(bench); it != options.mixture.end()) frac = std::clamp(it->second, 0.0, 1.0);
    quota[bench] = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  }
  std::vector<const bench::TaskRecord*> chosen;
  std::map<std::string, std::size_t> taken;
  for (const auto& s : seeds) {
    if (taken[s.benchmark] < quota[s.benchmark]) {
      ++taken[s.benchmark];
      chosen.push_back(&s);
    }
  }

  struct Slot {
    std::optional<TrainingSample> sample;
    std::optional<SeedFailure> failure;
  };
  std::vector<Slot> slots(chosen.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < chosen.size(); i = next++) {
      const auto& seed = *chosen[i];
      try {
        slots[i].sample = generate_sample(bench::to_query(seed), teacher);
      } catch (const Error& e) {
        slots[i].failure = SeedFailure{seed.id, e.kind(), e.what()};
      }
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(chosen.size())));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  DatagenReport report;
  std::set<std::string> instructions;
  for (auto& slot : slots) {
    if (slot.failure) {
      spdlog::warn("seed {} rejected: {}", slot.failure->seed_id, slot.failure->message);
      report.failures.push_back(std::move(*slot.failure));
      continue;
    }
    if (!instructions.insert(slot.sample->instruction).second) {
      ++report.duplicates;
      continue;
    }
    ++report.histogram[*slot.sample->tier];
    report.samples.push_back(std::move(*slot.sample));
  }
  return report;
}

}  // namespace clai::datagen
