#pragma once

#include <string>
#include <string_view>
#include <vector>

// Text assets compiled into the binary from assets/.
namespace clai::assets {

extern const std::string_view kMetaPrompt;
extern const std::string_view kStage1Template;
extern const std::string_view kStage2Template;
extern const std::string_view kStage3Template;
extern const std::string_view kCorrectionTemplate;
extern const std::string_view kStopwords;
extern const std::string_view kAbbreviations;

// Splits a line-oriented asset into entries, skipping blanks and '#' comments.
std::vector<std::string> word_list(std::string_view asset);

}  // namespace clai::assets
