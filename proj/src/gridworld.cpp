#include "smdpsynth/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

#include "smdpsynth/errors.hpp"

namespace smdpsynth {

namespace {

bool inside(const GridConfig& cfg, Cell c) {
  return c.first >= 1 && c.first <= cfg.width && c.second >= 1 && c.second <= cfg.height;
}

std::string cell_name(Cell c) { return "(" + std::to_string(c.first) + "," + std::to_string(c.second) + ")"; }

Cell parse_cell(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("grid cell must be [x, y]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

GridConfig GridConfig::from_json(const nlohmann::json& grid, const nlohmann::json& dwell) {
  GridConfig cfg;
  cfg.width = grid.value("width", cfg.width);
  cfg.height = grid.value("height", cfg.height);
  cfg.initial = grid.contains("initial") ? parse_cell(grid.at("initial")) : Cell{cfg.width, cfg.height};
  if (grid.contains("labels")) {
    cfg.labels.clear();
    const auto& labels = grid.at("labels");
    if (!labels.is_array()) throw ConfigError("grid.labels must be a list of {ap, cells}");
    for (const auto& entry : labels) {
      std::vector<Cell> cells;
      for (const auto& c : entry.at("cells")) cells.push_back(parse_cell(c));
      cfg.labels.emplace_back(entry.at("ap").get<std::string>(), std::move(cells));
    }
  }
  if (!dwell.is_null()) {
    const auto map = dwell.value("map", std::string("default"));
    if (map == "default") {
      cfg.rate_map = RateMap::Default;
    } else if (map == "literal") {
      cfg.rate_map = RateMap::Literal;
    } else if (map == "table") {
      cfg.rate_map = RateMap::Table;
      for (const auto& e : dwell.at("table")) cfg.rate_table[parse_cell(e.at("cell"))] = e.at("rate").get<double>();
    } else {
      throw ConfigError("unknown dwell map '" + map + "'");
    }
  }
  return cfg;
}

double grid_rate(const GridConfig& cfg, Cell cell) {
  if (cfg.rate_map == RateMap::Literal)
    return std::max(10.0 * std::max(cell.first - 3, cell.second - 3), 1e-3);
  if (cfg.rate_map == RateMap::Table) {
    if (auto it = cfg.rate_table.find(cell); it != cfg.rate_table.end()) return it->second;
  }
  const double cx = (cfg.width + 1) / 2.0;
  const double cy = (cfg.height + 1) / 2.0;
  return 10.0 / (1.0 + std::max(std::abs(cell.first - cx), std::abs(cell.second - cy)));
}

StateId grid_state(const GridConfig& cfg, Cell cell) {
  if (!inside(cfg, cell)) throw ConfigError("cell " + cell_name(cell) + " outside the grid");
  return static_cast<StateId>((cell.second - 1) * cfg.width + (cell.first - 1));
}

Cell grid_cell(const GridConfig& cfg, StateId s) {
  const int i = static_cast<int>(s);
  if (i >= cfg.width * cfg.height) throw UnknownState("grid state out of range");
  return {i % cfg.width + 1, i / cfg.width + 1};
}

Smdp build_gridworld(const GridConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1) throw ConfigError("grid dimensions must be positive");
  std::vector<std::string> names;
  for (int y = 1; y <= cfg.height; ++y)
    for (int x = 1; x <= cfg.width; ++x) names.push_back(cell_name({x, y}));
  std::vector<std::string> ap;
  for (const auto& [name, cells] : cfg.labels) {
    if (std::find(ap.begin(), ap.end(), name) != ap.end()) throw ConfigError("duplicate proposition " + name);
    ap.push_back(name);
  }
  Smdp m(std::move(names), {"UL", "UR", "DL", "DR"}, ap);

  std::set<Cell> used;
  for (std::size_t i = 0; i < cfg.labels.size(); ++i)
    for (const Cell& c : cfg.labels[i].second) {
      if (!inside(cfg, c)) throw ConfigError("label cell " + cell_name(c) + " outside the grid");
      if (!used.insert(c).second) throw ConfigError("cell " + cell_name(c) + " carries two labels");
      const StateId s = grid_state(cfg, c);
      m.set_label(s, m.label(s) | (Letter{1} << i));
    }
  m.set_initial(grid_state(cfg, cfg.initial));

  // (vertical, horizontal) components of UL, UR, DL, DR.
  const std::pair<int, int> moves[4] = {{+1, -1}, {+1, +1}, {-1, -1}, {-1, +1}};
  for (int y = 1; y <= cfg.height; ++y)
    for (int x = 1; x <= cfg.width; ++x) {
      const Cell here{x, y};
      const StateId s = grid_state(cfg, here);
      const auto dwell = DwellDistribution::exponential(grid_rate(cfg, here));
      for (ActionId a = 0; a < 4; ++a) {
        const Cell vertical{x, y + moves[a].first};
        const Cell horizontal{x + moves[a].second, y};
        std::vector<Cell> targets;
        for (const Cell& c : {vertical, horizontal})
          if (inside(cfg, c)) targets.push_back(c);
        if (targets.empty()) targets.push_back(here);
        for (const Cell& c : targets)
          m.add_transition(s, a, grid_state(cfg, c), 1.0 / static_cast<double>(targets.size()), dwell);
      }
    }
  m.finalize();
  return m;
}

}  // namespace smdpsynth
