#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "laq/dataset.hpp"
#include "laq/mdp.hpp"

namespace laq {

/// Move order used everywhere: index i moves by (kMoveDx[i], kMoveDy[i]);
/// y grows downward, so "up" is dy = -1.
enum Move : int { kUp = 0, kDown, kLeft, kRight, kUpLeft, kUpRight, kDownLeft, kDownRight };
inline constexpr int kNumMoves = 8;
inline constexpr std::array<int, kNumMoves> kMoveDx = {0, 0, -1, 1, -1, 1, -1, 1};
inline constexpr std::array<int, kNumMoves> kMoveDy = {-1, 1, 0, 0, -1, -1, 1, 1};
inline constexpr std::array<std::string_view, kNumMoves> kMoveNames = {
    "up", "down", "left", "right", "up-left", "up-right", "down-left", "down-right"};

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

/// 8-connected grid, start at the top-left, goal (terminal, reward 1 on entry)
/// at the bottom-right. Off-grid moves clip per axis, so a diagonal into a
/// wall slides along it. With stickiness > 0 the previously executed move
/// repeats with that probability.
struct GridWorldEnv {
  int width = 6;
  int height = 6;
  double stickiness = 0.0;
  int max_steps = 200;

  Cell start() const { return {0, 0}; }
  Cell goal() const { return {width - 1, height - 1}; }
  int num_cells() const { return width * height; }
  int cell_index(Cell c) const { return c.y * width + c.x; }
  Cell cell_at(int index) const { return {index % width, index / width}; }
  bool is_goal(Cell c) const { return c == goal(); }
  Cell move(Cell c, int action) const;

  Observation observation(Cell c) const { return {static_cast<double>(c.x), static_cast<double>(c.y)}; }
  /// -1 when `o` is not a cell of this grid.
  int cell_of_observation(const Observation& o) const;

  /// Chebyshev distance to the goal.
  int goal_distance(Cell c) const;

  void validate() const;
};

/// Layout of the sticky-action MDP: state = cell * 8 + previous move, plus a
/// final state for the start cell before any move has been executed.
struct StickyLayout {
  int num_cells = 0;
  int num_states() const { return num_cells * kNumMoves + 1; }
  int state(int cell, int prev) const { return cell * kNumMoves + prev; }
  int initial_state() const { return num_cells * kNumMoves; }
  int cell_of(int state, int start_cell) const {
    return state == initial_state() ? start_cell : state / kNumMoves;
  }
};

/// stickiness == 0: one state per cell. stickiness > 0: the StickyLayout MDP.
DiscreteMdp grid_to_mdp(const GridWorldEnv& env, double gamma = 0.95);

/// Data-collection policy over cells: the start cell splits between right and
/// down; top/bottom rows mostly move right, left/right columns mostly move
/// down (a corner follows whichever of the two keeps it on the grid); interior
/// cells mostly move away from the goal through up, left or up-left.
TabularPolicy data_policy(const GridWorldEnv& env);

/// Rolls out `num_episodes` episodes from the start cell. Each ends at the
/// goal or after max_steps; gt_action is the executed (post-sticky) move.
TransitionDataset generate_dataset(const GridWorldEnv& env, const TabularPolicy& policy,
                                   int num_episodes, std::uint64_t seed);

/// Projects sticky-MDP state values to cells using the dataset's empirical
/// distribution of the previous executed move at each cell. Cells never
/// visited as observations average uniformly over previous moves; the goal
/// is 0.
ValueTable project_sticky_values(const GridWorldEnv& env, const ValueTable& sticky_values,
                                 const TransitionDataset& ds);

/// Maps a value table keyed by observations onto the grid's cells; cells
/// absent from `index` get `fill`.
ValueTable values_on_grid(const GridWorldEnv& env, const StateIndex& index, const ValueTable& v,
                          double fill = 0.0);

}  // namespace laq
