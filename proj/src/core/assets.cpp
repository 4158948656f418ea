#include "clai/core/assets.hpp"

#include "clai/core/types.hpp"

namespace clai::assets {

std::vector<std::string> word_list(std::string_view asset) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= asset.size()) {
    auto end = asset.find('\n', pos);
    if (end == std::string_view::npos) end = asset.size();
    auto line = trim(asset.substr(pos, end - pos));
    if (!line.empty() && line.front() != '#') out.push_back(std::move(line));
    pos = end + 1;
  }
  return out;
}

}  // namespace clai::assets
