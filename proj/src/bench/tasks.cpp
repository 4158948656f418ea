#include "clai/bench/tasks.hpp"

#include <fstream>
#include <set>

#include "clai/core/codec.hpp"

namespace clai::bench {

ValidationResult validate_task(const TaskRecord& t) {
  ValidationResult r;
  if (t.id.empty()) r.violations.push_back("empty id");
  if (trim(t.question).empty()) r.violations.push_back("empty question");
  if (trim(t.gold_answer).empty()) r.violations.push_back("empty gold_answer");
  if (t.benchmark.empty()) r.violations.push_back("empty benchmark");
  if (t.documents) {
    std::set<std::string> ids;
    for (const auto& d : *t.documents) {
      for (auto& v : validate_document(d).violations) r.violations.push_back("document " + d.id + ": " + v);
      if (!ids.insert(d.id).second) r.violations.push_back("duplicate document id " + d.id);
    }
  }
  return r;
}

std::string encode_task(const TaskRecord& t) {
  json j = json::object();
  j["id"] = t.id;
  j["question"] = t.question;
  if (t.documents) j["documents"] = *t.documents;
  j["gold_answer"] = t.gold_answer;
  j["benchmark"] = t.benchmark;
  return dump_canonical(j);
}

TaskRecord decode_task(std::string_view line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorKind::SchemaMismatch, "task line is not a JSON object");
  TaskRecord t;
  try {
    t.id = j.at("id").get<std::string>();
    t.question = j.at("question").get<std::string>();
    if (auto d = j.find("documents"); d != j.end() && !d->is_null()) t.documents = d->get<std::vector<Document>>();
    t.gold_answer = j.at("gold_answer").get<std::string>();
    t.benchmark = j.at("benchmark").get<std::string>();
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaMismatch, e.what());
  }
  return t;
}

std::vector<TaskRecord> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::StorageError, "cannot open task file " + path.string());
  std::vector<TaskRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    TaskRecord t;
    try {
      t = decode_task(line);
    } catch (const Error& e) {
      throw Error::parse(n, e.what());
    }
    if (auto v = validate_task(t); !v) throw Error::parse(n, v.violations.front());
    if (!ids.insert(t.id).second) throw Error::parse(n, "duplicate task id " + t.id);
    out.push_back(std::move(t));
  }
  return out;
}

Query to_query(const TaskRecord& t) { return Query{t.id, t.question, t.documents}; }

}  // namespace clai::bench
