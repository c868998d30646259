#include "cookgen/conditioning.hpp"

namespace cookgen {

int ContextIndex::add(const std::string& recipe_id, const std::string& state_name) {
  if (recipe_id.find('|') != std::string::npos || state_name.find('|') != std::string::npos)
    throw InvalidArgument("context names must not contain '|'");
  auto [it, inserted] = table_.emplace(key(recipe_id, state_name), size());
  if (inserted) pairs_.emplace_back(recipe_id, state_name);
  return it->second;
}

int ContextIndex::index(const std::string& recipe_id, const std::string& state_name) const {
  auto it = table_.find(key(recipe_id, state_name));
  if (it == table_.end()) {
    std::string known;
    for (const auto& [r, s] : pairs_) known += (known.empty() ? "" : ", ") + r + "|" + s;
    throw LookupError("unknown context '" + key(recipe_id, state_name) + "'; known pairs: [" + known + "]");
  }
  return it->second;
}

bool ContextIndex::contains(const std::string& recipe_id, const std::string& state_name) const {
  return table_.count(key(recipe_id, state_name)) > 0;
}

std::vector<std::string> ContextIndex::states_of(const std::string& recipe_id) const {
  std::vector<std::string> out;
  for (const auto& [r, s] : pairs_)
    if (r == recipe_id) out.push_back(s);
  return out;
}

nlohmann::json ContextIndex::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (size_t p = 0; p < pairs_.size(); ++p) j[key(pairs_[p].first, pairs_[p].second)] = p;
  return j;
}

ContextIndex ContextIndex::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("context index must be a JSON object");
  std::vector<std::pair<std::string, std::string>> pairs(j.size());
  std::vector<bool> seen(j.size(), false);
  for (const auto& [k, v] : j.items()) {
    const auto bar = k.find('|');
    if (bar == std::string::npos) throw FormatError("context key '" + k + "' is not of the form recipe|state");
    const auto p = v.get<long long>();
    if (p < 0 || p >= static_cast<long long>(pairs.size()) || seen[static_cast<size_t>(p)])
      throw FormatError("context index values must be a permutation of 0.." + std::to_string(pairs.size() - 1));
    seen[static_cast<size_t>(p)] = true;
    pairs[static_cast<size_t>(p)] = {k.substr(0, bar), k.substr(bar + 1)};
  }
  ContextIndex idx;
  for (const auto& [r, s] : pairs) idx.add(r, s);
  return idx;
}

}  // namespace cookgen
