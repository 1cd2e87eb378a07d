#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smdpsynth/smdp.hpp"

namespace smdpsynth {

/// 1-based grid cell (x, y); y grows upwards.
using Cell = std::pair<int, int>;

enum class RateMap {
  Default,  ///< 10 / (1 + max(|x - cx|, |y - cy|)), (cx, cy) the grid center
  Literal,  ///< max(10 * max(x - 3, y - 3), 1e-3)
  Table,    ///< per-cell rates from `rate_table`, Default elsewhere
};

struct GridConfig {
  int width = 5;
  int height = 5;
  Cell initial{5, 5};
  /// Atomic propositions in order, each with the cells it labels. A cell may
  /// carry at most one proposition.
  std::vector<std::pair<std::string, std::vector<Cell>>> labels{
      {"a", {{1, 3}}}, {"b", {{5, 3}}}, {"c", {{3, 1}, {3, 2}}}};
  RateMap rate_map = RateMap::Default;
  std::map<Cell, double> rate_table;

  static GridConfig from_json(const nlohmann::json& grid, const nlohmann::json& dwell);
};

/// Dwell rate used for transitions leaving `cell`.
double grid_rate(const GridConfig& cfg, Cell cell);

/// Surveillance grid: actions UL, UR, DL, DR each move along one of their two
/// directions with probability 0.5; a blocked direction gives its mass to the
/// other, and with both blocked the robot stays put. Dwell times are
/// exponential with the configured rate of the source cell.
Smdp build_gridworld(const GridConfig& cfg);

StateId grid_state(const GridConfig& cfg, Cell cell);
Cell grid_cell(const GridConfig& cfg, StateId s);

}  // namespace smdpsynth
