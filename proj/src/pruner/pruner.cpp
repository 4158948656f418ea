#include "clai/pruner/pruner.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_set>

#include "clai/core/assets.hpp"
#include "clai/core/error.hpp"
#include "clai/gateway/chat.hpp"

namespace clai::pruner {
namespace {

const std::unordered_set<std::string>& stopwords() {
  static const auto words = [] {
    auto list = assets::word_list(assets::kStopwords);
    return std::unordered_set<std::string>(list.begin(), list.end());
  }();
  return words;
}

const std::unordered_set<std::string>& abbreviations() {
  static const auto words = [] {
    auto list = assets::word_list(assets::kAbbreviations);
    return std::unordered_set<std::string>(list.begin(), list.end());
  }();
  return words;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

bool ends_with_abbreviation(std::string_view text, std::size_t punct) {
  std::size_t start = punct;
  while (start > 0 && !is_space(text[start - 1]) && text[start - 1] != '\n') --start;
  return abbreviations().count(std::string(text.substr(start, punct - start + 1))) > 0;
}

void push_trimmed(std::vector<std::string>& out, std::string_view s) {
  auto t = trim(s);
  if (!t.empty()) out.push_back(std::move(t));
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      push_trimmed(out, text.substr(start, i - start));
      start = i + 1;
      continue;
    }
    if (c != '.' && c != '?' && c != '!') continue;
    std::size_t j = i + 1;
    if (j >= text.size() || !is_space(text[j])) continue;
    while (j < text.size() && is_space(text[j])) ++j;
    if (j >= text.size() || !std::isupper(static_cast<unsigned char>(text[j]))) continue;
    if (c == '.' && ends_with_abbreviation(text, i)) continue;
    push_trimmed(out, text.substr(start, i + 1 - start));
    start = i + 1;
  }
  if (start < text.size()) push_trimmed(out, text.substr(start));
  return out;
}

std::vector<std::string> split_sentences(const Document& doc) { return split_sentences(doc.text); }

std::vector<std::string> content_terms(std::string_view text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !stopwords().count(cur) && seen.insert(cur).second) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) cur.push_back(static_cast<char>(std::tolower(u)));
    else flush();
  }
  flush();
  return out;
}

double score_relevance(std::string_view sentence, const std::vector<std::string>& sub_questions) {
  require(!sub_questions.empty(), "score_relevance needs at least one sub-question");
  const auto terms = content_terms(sentence);
  const std::unordered_set<std::string> have(terms.begin(), terms.end());
  double best = 0.0;
  for (const auto& q : sub_questions) {
    const auto want = content_terms(q);
    if (want.empty()) continue;
    std::size_t shared = 0;
    for (const auto& t : want) shared += have.count(t);
    best = std::max(best, static_cast<double>(shared) / static_cast<double>(want.size()));
  }
  return best;
}

PrunedContext prune(const std::vector<Document>& docs, const CognitivePlan& plan, double threshold) {
  require(!docs.empty(), "prune needs at least one document");
  require(!plan.sub_questions.empty(), "prune needs a plan with sub-questions");

  PrunedContext out;
  std::map<std::string, std::size_t> index;
  std::string joined_docs;
  for (const auto& doc : docs) {
    if (!joined_docs.empty()) joined_docs += ' ';
    joined_docs += doc.text;
    for (auto& sentence : split_sentences(doc)) {
      if (score_relevance(sentence, plan.sub_questions) < threshold) continue;
      auto [it, fresh] = index.emplace(sentence, out.facts.size());
      if (fresh) {
        out.facts.push_back(std::move(sentence));
        out.source_doc_ids.push_back({doc.id});
      } else {
        auto& ids = out.source_doc_ids[it->second];
        if (std::find(ids.begin(), ids.end(), doc.id) == ids.end()) ids.push_back(doc.id);
      }
    }
  }

  std::string joined_facts;
  for (const auto& f : out.facts) {
    if (!joined_facts.empty()) joined_facts += ' ';
    joined_facts += f;
  }
  out.input_token_count = gateway::estimate_tokens(joined_docs);
  out.output_token_count = gateway::estimate_tokens(joined_facts);
  return out;
}

}  // namespace clai::pruner
