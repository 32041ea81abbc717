#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <vector>

#include "laq/gridworld.hpp"
#include "laq/labeling.hpp"
#include "laq/mdp.hpp"

namespace laq::testing {

// Shared across test cases; generating it takes about a second.
inline DatasetPtr grid_dataset_20k() {
  static const DatasetPtr ds = [] {
    GridWorldEnv env;
    return std::make_shared<const TransitionDataset>(generate_dataset(env, data_policy(env), 20000, 0));
  }();
  return ds;
}

inline DatasetPtr grid_dataset(int episodes, std::uint64_t seed, double stickiness = 0.0) {
  GridWorldEnv env;
  env.stickiness = stickiness;
  return std::make_shared<const TransitionDataset>(generate_dataset(env, data_policy(env), episodes, seed));
}

// One record per (non-goal cell, move) of the deterministic grid.
inline DatasetPtr exhaustive_grid_dataset(const GridWorldEnv& env = {}) {
  auto ds = std::make_shared<TransitionDataset>();
  for (int c = 0; c < env.num_cells(); ++c) {
    const Cell cell = env.cell_at(c);
    if (env.is_goal(cell)) continue;
    for (int a = 0; a < kNumMoves; ++a) {
      const Cell next = env.move(cell, a);
      Transition t;
      t.obs = env.observation(cell);
      t.next_obs = env.observation(next);
      t.reward = env.is_goal(next) ? 1.0 : 0.0;
      t.gt_action = a;
      t.episode = c;
      t.t = a;
      ds->records.push_back(t);
    }
  }
  return ds;
}

inline int chebyshev_to_goal(const GridWorldEnv& env, Cell c) {
  return std::max(std::abs(env.goal().x - c.x), std::abs(env.goal().y - c.y));
}

// gamma^(d-1) off the goal, 0 on it.
inline ValueTable chebyshev_values(const GridWorldEnv& env, double gamma) {
  ValueTable v(static_cast<std::size_t>(env.num_cells()));
  for (int c = 0; c < env.num_cells(); ++c) {
    const int d = chebyshev_to_goal(env, env.cell_at(c));
    v[static_cast<std::size_t>(c)] = d == 0 ? 0.0 : std::pow(gamma, d - 1);
  }
  return v;
}

inline double sup_diff(const ValueTable& a, const ValueTable& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace laq::testing
