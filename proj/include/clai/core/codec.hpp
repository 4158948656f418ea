#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "clai/core/error.hpp"
#include "clai/core/types.hpp"

// Canonical JSON encoding of the domain types: snake_case field names,
// sorted keys, compact output, absent optionals omitted. Decoding accepts a
// missing key or null for optionals and rejects anything else with
// ErrorKind::SchemaMismatch.
namespace clai {

using json = nlohmann::json;

void to_json(json& j, const Document& v);
void from_json(const json& j, Document& v);
void to_json(json& j, const Query& v);
void from_json(const json& j, Query& v);
void to_json(json& j, const CognitivePlan& v);
void from_json(const json& j, CognitivePlan& v);
void to_json(json& j, const PrunedContext& v);
void from_json(const json& j, PrunedContext& v);
void to_json(json& j, const ReasoningStep& v);
void from_json(const json& j, ReasoningStep& v);
void to_json(json& j, const SelfCheck& v);
void from_json(const json& j, SelfCheck& v);
void to_json(json& j, const ReasoningOutput& v);
void from_json(const json& j, ReasoningOutput& v);
void to_json(json& j, const TokenUsage& v);
void from_json(const json& j, TokenUsage& v);
void to_json(json& j, const StageRecord& v);
void from_json(const json& j, StageRecord& v);
void to_json(json& j, const PlanStep& v);
void from_json(const json& j, PlanStep& v);
void to_json(json& j, const DecomposedPlan& v);
void from_json(const json& j, DecomposedPlan& v);
void to_json(json& j, const PipelineTranscript& v);
void from_json(const json& j, PipelineTranscript& v);

void to_json(json& j, UsageSource v);
void from_json(const json& j, UsageSource& v);
void to_json(json& j, Stage v);
void from_json(const json& j, Stage& v);
void to_json(json& j, PipelineMode v);
void from_json(const json& j, PipelineMode& v);

// Compact dump; invalid UTF-8 is replaced rather than thrown on.
std::string dump_canonical(const json& j);

template <typename T>
std::string encode(const T& value) {
  return dump_canonical(json(value));
}

template <typename T>
T decode_json(const json& j) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, e.what());
  }
}

template <typename T>
T decode(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SchemaMismatch, e.what());
  }
  return decode_json<T>(j);
}

}  // namespace clai
