#include <cmath>
#include <numeric>

#include "doctest.h"
#include "laq/gridworld.hpp"
#include "laq/rng.hpp"
#include "laq/shaping.hpp"
#include "unit/helpers.hpp"

using namespace laq;

namespace {

ValueMap grid_value_map(const GridWorldEnv& env, const ValueTable& v) {
  ValueMap out;
  for (int c = 0; c < env.num_cells(); ++c) out[env.observation(env.cell_at(c))] = v[static_cast<std::size_t>(c)];
  return out;
}

LearningCurve curve_of(const std::vector<bool>& successes) {
  LearningCurve c;
  for (bool s : successes) c.episodes.push_back({s ? 1.0 : 0.0, s, 1});
  return c;
}

double mean_episodes(const std::vector<LearningCurve>& curves, int cap) {
  double total = 0.0;
  for (const auto& c : curves) total += episodes_to_threshold(c, 0.9, 100).value_or(cap + 1);
  return total / static_cast<double>(curves.size());
}

}  // namespace

TEST_CASE("constant potential leaves the scaled sparse reward") {
  ShapingConfig cfg;
  cfg.default_value = 0.37;
  CHECK(shaped_reward(cfg, 1.0, {0, 0}, {1, 1}) == doctest::Approx(5.0));
  CHECK(shaped_reward(cfg, 0.0, {0, 0}, {1, 1}) == doctest::Approx(0.0));
}

TEST_CASE("shaping terms telescope along an episode") {
  GridWorldEnv env;
  Rng rng(2024);
  ShapingConfig cfg;
  for (int c = 0; c < env.num_cells(); ++c) cfg.values[env.observation(env.cell_at(c))] = uniform01(rng) * 4 - 2;
  for (int e = 0; e < 100; ++e) {
    Cell c = env.start();
    const Observation first = env.observation(c);
    double sum_f = 0.0;
    double sum_r = 0.0;
    const int len = 1 + uniform_int(rng, 60);
    for (int t = 0; t < len && !env.is_goal(c); ++t) {
      const Cell next = env.move(c, uniform_int(rng, kNumMoves));
      const double r = env.is_goal(next) ? 1.0 : 0.0;
      sum_f += shaped_reward(cfg, r, env.observation(c), env.observation(next)) - cfg.sparse_scale * r;
      sum_r += r;
      c = next;
    }
    CHECK(sum_f == doctest::Approx(cfg.value(env.observation(c)) - cfg.value(first)).epsilon(1e-12));
  }
}

TEST_CASE("optimal moves under V* earn positive shaped reward") {
  GridWorldEnv env;
  const auto mdp = grid_to_mdp(env, 0.95);
  const auto vi = value_iteration(mdp);
  ShapingConfig cfg;
  cfg.values = grid_value_map(env, vi.values);
  const auto sets = optimal_action_sets(mdp);
  int checked = 0;
  for (int c = 0; c < env.num_cells(); ++c) {
    for (int a : sets[static_cast<std::size_t>(c)]) {
      const Cell cell = env.cell_at(c);
      const Cell next = env.move(cell, a);
      const double r = env.is_goal(next) ? 1.0 : 0.0;
      const double shaped = shaped_reward(cfg, r, env.observation(cell), env.observation(next));
      CHECK(shaped > 0.0);
      // The potential difference alone is positive except on the step into the goal.
      if (!env.is_goal(next)) CHECK(shaped - cfg.sparse_scale * r > 0.0);
      ++checked;
    }
  }
  CHECK(checked >= 35);
}

TEST_CASE("discounted potential shaping preserves optimal actions") {
  GridWorldEnv env;
  for (double sticky : {0.0, 0.5}) {
    env.stickiness = sticky;
    const auto mdp = grid_to_mdp(env, 0.95);
    Rng rng(1);
    std::vector<double> potential(static_cast<std::size_t>(mdp.num_states()));
    for (int s = 0; s < mdp.num_states(); ++s) {
      potential[static_cast<std::size_t>(s)] = mdp.is_terminal(s) ? 0.0 : uniform01(rng);
    }
    const auto base = optimal_action_sets(mdp, 1e-7);
    CHECK(optimal_action_sets(shaped_mdp(mdp, potential, 1.0, true), 1e-7) == base);

    const auto v_star = value_iteration(mdp).values.values;
    const auto undiscounted = optimal_action_sets(shaped_mdp(mdp, v_star, 1.0, false), 1e-7);
    int changed = 0;
    for (std::size_t s = 0; s < base.size(); ++s) changed += undiscounted[s] != base[s] ? 1 : 0;
    MESSAGE("stickiness " << sticky << ": undiscounted V* shaping changes the optimal set in " << changed
                          << " states");
  }
}

TEST_CASE("value map json round trip") {
  GridWorldEnv env;
  const auto values = grid_value_map(env, laq::testing::chebyshev_values(env, 0.9));
  const auto back = value_map_from_json_string(value_map_to_json_string(values));
  CHECK(back == values);
  CHECK_THROWS_AS(value_map(StateIndex{}, ValueTable(3)), std::invalid_argument);
}

TEST_CASE("episodes to threshold") {
  CHECK(episodes_to_threshold(curve_of(std::vector<bool>(30, true)), 0.9, 10) == 10);
  CHECK_FALSE(episodes_to_threshold(curve_of(std::vector<bool>(30, false)), 0.9, 10).has_value());
  std::vector<bool> alternating(30);
  for (std::size_t i = 0; i < alternating.size(); ++i) alternating[i] = i % 2 == 1;
  CHECK(episodes_to_threshold(curve_of(alternating), 0.4, 10) == 10);
  CHECK_FALSE(episodes_to_threshold(curve_of(alternating), 0.6, 10).has_value());
  std::vector<bool> late(50, false);
  for (std::size_t i = 20; i < 50; ++i) late[i] = true;
  CHECK(episodes_to_threshold(curve_of(late), 1.0, 10) == 30);
  CHECK_THROWS_AS(episodes_to_threshold(curve_of(late), 0.0, 10), std::invalid_argument);
}

TEST_CASE("a pure random walk succeeds at the hitting probability") {
  GridWorldEnv env;
  const int n = env.num_cells();
  const int goal = env.cell_index(env.goal());
  // P(reach the goal within the step limit) by dynamic programming over time.
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);
  dist[static_cast<std::size_t>(env.cell_index(env.start()))] = 1.0;
  double hit = 0.0;
  for (int t = 0; t < env.max_steps; ++t) {
    std::vector<double> next(static_cast<std::size_t>(n), 0.0);
    for (int c = 0; c < n; ++c) {
      for (int a = 0; a < kNumMoves; ++a) {
        next[static_cast<std::size_t>(env.cell_index(env.move(env.cell_at(c), a)))] +=
            dist[static_cast<std::size_t>(c)] / kNumMoves;
      }
    }
    hit += next[static_cast<std::size_t>(goal)];
    next[static_cast<std::size_t>(goal)] = 0.0;
    dist = std::move(next);
  }

  AgentOptions opts;
  opts.epsilon = 1.0;
  opts.episodes = 20000;
  opts.seed = 3;
  const auto curve = online_q_agent(env, nullptr, opts);
  double successes = 0.0;
  for (const auto& e : curve.episodes) successes += e.success ? 1.0 : 0.0;
  const double rate = successes / opts.episodes;
  const double sd = std::sqrt(hit * (1 - hit) / opts.episodes);
  CHECK(std::abs(rate - hit) < 4 * sd + 1e-12);
  MESSAGE("random walk success " << rate << ", exact hitting probability " << hit);
}

TEST_CASE("densifying with V* learns faster than the sparse reward") {
  GridWorldEnv env;
  ShapingConfig shaping;
  shaping.values = grid_value_map(env, value_iteration(grid_to_mdp(env, 0.95)).values);
  std::vector<LearningCurve> sparse, dense;
  AgentOptions opts;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    opts.seed = seed;
    sparse.push_back(online_q_agent(env, nullptr, opts));
    dense.push_back(online_q_agent(env, &shaping, opts));
  }
  CHECK(mean_episodes(dense, opts.episodes) < mean_episodes(sparse, opts.episodes));
}

TEST_CASE("online agent bookkeeping") {
  GridWorldEnv env;
  AgentOptions opts;
  opts.episodes = 50;
  opts.seed = 8;
  const auto a = online_q_agent(env, nullptr, opts);
  const auto b = online_q_agent(env, nullptr, opts);
  REQUIRE(a.episodes.size() == 50);
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(a.episodes[i].steps == b.episodes[i].steps);
    CHECK(a.episodes[i].ret == (a.episodes[i].success ? 1.0 : 0.0));
    CHECK(a.episodes[i].steps <= env.max_steps);
  }
  opts.random_ties = true;
  env.stickiness = 0.3;
  CHECK(online_q_agent(env, nullptr, opts).episodes.size() == 50);
  opts.epsilon = 2.0;
  CHECK_THROWS_AS(online_q_agent(env, nullptr, opts), std::invalid_argument);
}
