#pragma once

#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "smdpsynth/product.hpp"

namespace smdpsynth {

inline constexpr ActionId kNoAction = std::numeric_limits<ActionId>::max();

/// Action per product state; kNoAction where the policy is undefined.
using PositionalPolicy = std::vector<ActionId>;

/// {"<product id>": "<action name>", ...} over the defined entries, with an
/// optional value per defined state.
nlohmann::ordered_json policy_to_json(const ProductSmdp& p, const PositionalPolicy& pi,
                                      std::span<const double> values = {});

}  // namespace smdpsynth
