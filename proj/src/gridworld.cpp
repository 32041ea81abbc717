#include "laq/gridworld.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "laq/rng.hpp"

namespace laq {

Cell GridWorldEnv::move(Cell c, int action) const {
  const int x = std::clamp(c.x + kMoveDx[static_cast<std::size_t>(action)], 0, width - 1);
  const int y = std::clamp(c.y + kMoveDy[static_cast<std::size_t>(action)], 0, height - 1);
  return {x, y};
}

int GridWorldEnv::cell_of_observation(const Observation& o) const {
  if (o.size() != 2) return -1;
  const int x = static_cast<int>(o[0]);
  const int y = static_cast<int>(o[1]);
  if (static_cast<double>(x) != o[0] || static_cast<double>(y) != o[1]) return -1;
  if (x < 0 || x >= width || y < 0 || y >= height) return -1;
  return cell_index({x, y});
}

int GridWorldEnv::goal_distance(Cell c) const {
  const Cell g = goal();
  return std::max(std::abs(g.x - c.x), std::abs(g.y - c.y));
}

void GridWorldEnv::validate() const {
  if (width < 2 || height < 2) throw std::invalid_argument("grid must be at least 2x2");
  if (!(stickiness >= 0.0 && stickiness <= 1.0)) throw std::invalid_argument("stickiness must lie in [0, 1]");
  if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
}

DiscreteMdp grid_to_mdp(const GridWorldEnv& env, double gamma) {
  env.validate();
  const int cells = env.num_cells();
  const int goal = env.cell_index(env.goal());
  const int start = env.cell_index(env.start());
  auto reward_into = [&](Cell c) { return env.is_goal(c) ? 1.0 : 0.0; };

  if (env.stickiness == 0.0) {
    DiscreteMdp mdp(cells, kNumMoves, gamma);
    mdp.set_terminal(goal);
    std::vector<double> init(static_cast<std::size_t>(cells), 0.0);
    init[static_cast<std::size_t>(start)] = 1.0;
    mdp.set_initial_dist(init);
    for (int s = 0; s < cells; ++s) {
      if (s == goal) continue;
      for (int a = 0; a < kNumMoves; ++a) {
        const Cell next = env.move(env.cell_at(s), a);
        mdp.set_outcomes(s, a, {{env.cell_index(next), reward_into(next), 1.0}});
      }
    }
    return mdp;
  }

  const StickyLayout layout{cells};
  const double sigma = env.stickiness;
  DiscreteMdp mdp(layout.num_states(), kNumMoves, gamma);
  std::vector<double> init(static_cast<std::size_t>(layout.num_states()), 0.0);
  init[static_cast<std::size_t>(layout.initial_state())] = 1.0;
  mdp.set_initial_dist(init);
  for (int prev = 0; prev < kNumMoves; ++prev) mdp.set_terminal(layout.state(goal, prev));

  auto outcome = [&](int cell, int executed, double prob) {
    const Cell next = env.move(env.cell_at(cell), executed);
    return Outcome{layout.state(env.cell_index(next), executed), reward_into(next), prob};
  };
  for (int cell = 0; cell < cells; ++cell) {
    if (cell == goal) continue;
    for (int prev = 0; prev < kNumMoves; ++prev) {
      const int s = layout.state(cell, prev);
      for (int a = 0; a < kNumMoves; ++a) {
        OutcomeRow row;
        if (a == prev || sigma == 1.0) {
          row.push_back(outcome(cell, prev, 1.0));
        } else {
          row.push_back(outcome(cell, a, 1.0 - sigma));
          row.push_back(outcome(cell, prev, sigma));
        }
        mdp.set_outcomes(s, a, canonical_row(row));
      }
    }
  }
  for (int a = 0; a < kNumMoves; ++a) {
    mdp.set_outcomes(layout.initial_state(), a, {outcome(start, a, 1.0)});
  }
  return mdp;
}

TabularPolicy data_policy(const GridWorldEnv& env) {
  env.validate();
  TabularPolicy pi(env.num_cells(), kNumMoves);
  auto edge_rule = [&](int s, int preferred) {
    for (int a = 0; a < kNumMoves; ++a) pi(s, a) = 0.1 / (kNumMoves - 1);
    pi(s, preferred) = 0.9;
  };
  for (int s = 0; s < env.num_cells(); ++s) {
    const Cell c = env.cell_at(s);
    const bool on_row = c.y == 0 || c.y == env.height - 1;
    const bool on_col = c.x == 0 || c.x == env.width - 1;
    // Corners take the rule that stays on the grid: right at the bottom-left
    // corner, down at the top-right corner.
    const bool top_right = c.x == env.width - 1 && c.y == 0;
    if (c == env.start()) {
      pi(s, kRight) = 0.5;
      pi(s, kDown) = 0.5;
    } else if (on_row && !top_right) {
      edge_rule(s, kRight);
    } else if (on_col || on_row) {
      edge_rule(s, kDown);
    } else {
      for (int a = 0; a < kNumMoves; ++a) pi(s, a) = 0.1 / 5.0;
      for (int a : {kUp, kLeft, kUpLeft}) pi(s, a) = 0.9 / 3.0;
    }
  }
  return pi;
}

TransitionDataset generate_dataset(const GridWorldEnv& env, const TabularPolicy& policy,
                                   int num_episodes, std::uint64_t seed) {
  env.validate();
  if (num_episodes < 1) throw std::invalid_argument("num_episodes must be >= 1");
  if (policy.num_states() != env.num_cells() || policy.num_actions() != kNumMoves) {
    throw std::invalid_argument("policy shape does not match the grid");
  }
  TransitionDataset ds;
  Rng rng(seed);
  const auto& probs = policy.probs();
  for (int e = 0; e < num_episodes; ++e) {
    Cell c = env.start();
    int prev = -1;
    for (int t = 0; t < env.max_steps; ++t) {
      const int s = env.cell_index(c);
      const int chosen = sample_discrete(uniform01(rng), probs.data() + static_cast<std::ptrdiff_t>(s) * kNumMoves, kNumMoves);
      const double u = uniform01(rng);
      const int executed = (prev >= 0 && u < env.stickiness) ? prev : chosen;
      const Cell next = env.move(c, executed);
      Transition r;
      r.obs = env.observation(c);
      r.next_obs = env.observation(next);
      r.reward = env.is_goal(next) ? 1.0 : 0.0;
      r.gt_action = executed;
      r.episode = e;
      r.t = t;
      ds.records.push_back(std::move(r));
      prev = executed;
      c = next;
      if (env.is_goal(c)) break;
    }
  }
  return ds;
}

ValueTable project_sticky_values(const GridWorldEnv& env, const ValueTable& sticky_values,
                                 const TransitionDataset& ds) {
  const StickyLayout layout{env.num_cells()};
  if (sticky_values.size() != static_cast<std::size_t>(layout.num_states())) {
    throw std::invalid_argument("sticky value table has the wrong length");
  }
  std::vector<double> weighted(static_cast<std::size_t>(env.num_cells()), 0.0);
  std::vector<double> counts(static_cast<std::size_t>(env.num_cells()), 0.0);
  int prev = -1;
  int prev_episode = -1;
  for (const auto& r : ds.records) {
    if (r.episode != prev_episode || r.t == 0) prev = -1;
    const int cell = env.cell_of_observation(r.obs);
    if (cell < 0) throw std::invalid_argument("dataset observation is not a grid cell");
    const int state = prev < 0 ? layout.initial_state() : layout.state(cell, prev);
    weighted[static_cast<std::size_t>(cell)] += sticky_values[static_cast<std::size_t>(state)];
    counts[static_cast<std::size_t>(cell)] += 1.0;
    prev = r.gt_action.value_or(-1);
    prev_episode = r.episode;
  }
  ValueTable out(static_cast<std::size_t>(env.num_cells()));
  const int goal = env.cell_index(env.goal());
  for (int cell = 0; cell < env.num_cells(); ++cell) {
    if (cell == goal) continue;
    if (counts[static_cast<std::size_t>(cell)] > 0.0) {
      out[static_cast<std::size_t>(cell)] = weighted[static_cast<std::size_t>(cell)] / counts[static_cast<std::size_t>(cell)];
    } else {
      double total = 0.0;
      for (int p = 0; p < kNumMoves; ++p) total += sticky_values[static_cast<std::size_t>(layout.state(cell, p))];
      out[static_cast<std::size_t>(cell)] = total / kNumMoves;
    }
  }
  return out;
}

ValueTable values_on_grid(const GridWorldEnv& env, const StateIndex& index, const ValueTable& v,
                          double fill) {
  ValueTable out(static_cast<std::size_t>(env.num_cells()), fill);
  for (int s = 0; s < index.num_states(); ++s) {
    const int cell = env.cell_of_observation(index.keys[static_cast<std::size_t>(s)]);
    if (cell >= 0) out[static_cast<std::size_t>(cell)] = v[static_cast<std::size_t>(s)];
  }
  return out;
}

}  // namespace laq
