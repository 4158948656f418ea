#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace clai::prompts {

// Top-level balanced {...} spans in order of preference: objects inside
// ``` fenced blocks first, then objects in the surrounding text. Brace
// matching is string-aware once inside an object. Linear in the input.
std::vector<std::string_view> find_json_objects(std::string_view text, std::size_t max_candidates = 16);

// Straightens curly quotes and drops commas that directly precede '}' or ']'
// outside string literals.
std::string repair_json(std::string_view candidate);

// Parses candidate as-is, then once more after repair_json. Returns nullopt
// when both attempts fail or the value is not an object.
std::optional<nlohmann::json> parse_object_lenient(std::string_view candidate);

// First candidate from find_json_objects that parses as an object.
std::optional<nlohmann::json> extract_json_object(std::string_view text);

}  // namespace clai::prompts
