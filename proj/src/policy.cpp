#include "smdpsynth/policy.hpp"

#include <string>

namespace smdpsynth {

nlohmann::ordered_json policy_to_json(const ProductSmdp& p, const PositionalPolicy& pi, std::span<const double> values) {
  nlohmann::ordered_json actions = nlohmann::ordered_json::object();
  nlohmann::ordered_json table = nlohmann::ordered_json::object();
  for (StateId x = 0; x < pi.size(); ++x) {
    if (pi[x] == kNoAction) continue;
    actions[std::to_string(x)] = p.base().action_name(pi[x]);
    if (!values.empty()) table[std::to_string(x)] = values[x];
  }
  nlohmann::ordered_json doc;
  doc["actions"] = actions;
  if (!values.empty()) doc["values"] = table;
  return doc;
}

}  // namespace smdpsynth
