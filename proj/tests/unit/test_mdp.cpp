#include <cmath>

#include "doctest.h"
#include "laq/gridworld.hpp"
#include "laq/mdp.hpp"
#include "laq/refinement.hpp"
#include "laq/rng.hpp"
#include "unit/helpers.hpp"

using namespace laq;
using laq::testing::chebyshev_to_goal;
using laq::testing::chebyshev_values;
using laq::testing::sup_diff;

TEST_CASE("counterexample M1 has V*(s1) = V*(s2) = 1") {
  const auto [m1, m2] = counterexample_pair();
  const auto vi = value_iteration(m1);
  CHECK(vi.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vi.values[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vi.values[2] == 0.0);
}

TEST_CASE("a lone terminal state has value zero") {
  DiscreteMdp mdp(1, 1, 0.9);
  mdp.set_terminal(0);
  mdp.validate();
  const auto vi = value_iteration(mdp);
  CHECK(vi.values[0] == 0.0);
  CHECK(vi.q.argmax(0) == -1);
}

TEST_CASE("deterministic grid values are gamma^(d-1)") {
  GridWorldEnv env;
  const auto mdp = grid_to_mdp(env, 0.9);
  SolverOptions opts;
  opts.tol = 1e-12;
  const auto vi = value_iteration(mdp, opts);
  CHECK(sup_diff(vi.values, chebyshev_values(env, 0.9)) < 1e-10);
}

TEST_CASE("value iteration Q is consistent with V") {
  const auto mdp = random_mdp({}, 7);
  const auto vi = value_iteration(mdp);
  for (int s = 0; s < mdp.num_states(); ++s) {
    CHECK(vi.values[static_cast<std::size_t>(s)] == vi.q.max_value(s));
    for (int a = 0; a < mdp.num_actions(); ++a) {
      if (vi.q.available(s, a)) CHECK(vi.q(s, a) == doctest::Approx(backup(mdp, vi.values, s, a)).epsilon(1e-9));
    }
  }
}

TEST_CASE("optimal deterministic policy evaluates to V*") {
  GridWorldEnv env;
  const auto mdp = grid_to_mdp(env, 0.95);
  const auto vi = value_iteration(mdp);
  const auto pi = greedy_from_value(mdp, vi.values);
  const auto v = policy_evaluation(mdp, pi);
  CHECK(sup_diff(v, vi.values) < 2e-10 / (1 - 0.95));
}

TEST_CASE("uniform policy on a two-state chain") {
  DiscreteMdp mdp(2, 2, 0.9);
  mdp.set_terminal(1);
  mdp.set_outcomes(0, 0, {{1, 1.0, 1.0}});
  mdp.set_outcomes(0, 1, {{1, 1.0, 1.0}});
  const auto v = policy_evaluation(mdp, TabularPolicy::uniform(2, 2));
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == 0.0);
}

TEST_CASE("data policy value matches Monte Carlo returns from the start cell") {
  GridWorldEnv env;
  const double gamma = 0.95;
  const auto pi = data_policy(env);
  const auto v = policy_evaluation(grid_to_mdp(env, gamma), pi);

  Rng rng(12345);
  const int episodes = 100000;
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Cell c = env.start();
    double discount = 1.0;
    for (int t = 0; t < 5000; ++t) {
      const int s = env.cell_index(c);
      const double* row = pi.probs().data() + static_cast<std::size_t>(s) * kNumMoves;
      c = env.move(c, sample_discrete(uniform01(rng), row, kNumMoves));
      if (env.is_goal(c)) {
        total += discount;
        break;
      }
      discount *= gamma;
    }
  }
  CHECK(std::abs(total / episodes - v[static_cast<std::size_t>(env.cell_index(env.start()))]) < 0.01);
}

TEST_CASE("greedy actions under V* approach the goal") {
  GridWorldEnv env;
  const auto mdp = grid_to_mdp(env, 0.95);
  const auto greedy = greedy_actions(mdp, value_iteration(mdp).values);
  int checked = 0;
  for (int c = 0; c < env.num_cells(); ++c) {
    const Cell cell = env.cell_at(c);
    if (env.is_goal(cell)) {
      CHECK(greedy[static_cast<std::size_t>(c)] == -1);
      continue;
    }
    const Cell next = env.move(cell, greedy[static_cast<std::size_t>(c)]);
    CHECK(chebyshev_to_goal(env, next) == chebyshev_to_goal(env, cell) - 1);
    ++checked;
  }
  CHECK(checked == 35);
}

TEST_CASE("constant values without rewards pick action 0") {
  GridWorldEnv env;
  auto mdp = grid_to_mdp(env, 0.95);
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      OutcomeRow row = mdp.outcomes(s, a);
      if (row.empty()) continue;
      for (auto& o : row) o.reward = 0.0;
      mdp.set_outcomes(s, a, row);
    }
  }
  const auto greedy = greedy_actions(mdp, ValueTable(static_cast<std::size_t>(mdp.num_states()), 0.3));
  for (int s = 0; s < mdp.num_states(); ++s) CHECK(greedy[static_cast<std::size_t>(s)] == (mdp.is_terminal(s) ? -1 : 0));
}

TEST_CASE("greedy behavior of the data policy value is sub-optimal somewhere inside the grid") {
  GridWorldEnv env;
  const auto mdp = grid_to_mdp(env, 0.95);
  const auto vi = value_iteration(mdp);
  const auto greedy = greedy_actions(mdp, policy_evaluation(mdp, data_policy(env)));
  int bad_interior = 0;
  for (int c = 0; c < env.num_cells(); ++c) {
    const Cell cell = env.cell_at(c);
    const bool interior = cell.x > 0 && cell.y > 0 && cell.x < env.width - 1 && cell.y < env.height - 1;
    const int a = greedy[static_cast<std::size_t>(c)];
    if (interior && vi.q(c, a) < vi.q.max_value(c) - 1e-9) ++bad_interior;
  }
  CHECK(bad_interior >= 1);
}

TEST_CASE("value mse") {
  const ValueTable v(std::vector<double>{0.5, 2.0});
  CHECK(value_mse(v, v) == 0.0);
  CHECK(value_mse(ValueTable(std::vector<double>{0, 0}), ValueTable(std::vector<double>{1, 1})) == 1.0);
  CHECK_THROWS_AS(value_mse(v, ValueTable(3)), std::invalid_argument);
}

TEST_CASE("canonical rows merge duplicates") {
  const OutcomeRow row = {{2, 1.0, 0.25}, {0, 0.0, 0.5}, {2, 1.0, 0.25}};
  const auto c = canonical_row(row);
  REQUIRE(c.size() == 2);
  CHECK(c[0].next_state == 0);
  CHECK(c[1].prob == doctest::Approx(0.5));
  CHECK(rows_equal(c, canonical_row({{0, 0.0, 0.5}, {2, 1.0, 0.5}}), 1e-12));
  CHECK_FALSE(rows_equal(c, canonical_row({{0, 0.0, 0.5}, {2, 0.0, 0.5}}), 1e-12));
}

TEST_CASE("validation rejects malformed MDPs") {
  DiscreteMdp mdp(2, 1, 0.9);
  mdp.set_terminal(1);
  CHECK_THROWS_AS(mdp.validate(), MdpFormatError);  // state 0 has no distribution
  mdp.set_outcomes(0, 0, {{1, 1.0, 0.7}});
  CHECK_THROWS_AS(mdp.validate(), MdpFormatError);  // row sums to 0.7
  mdp.set_outcomes(0, 0, {{1, 1.0, 1.0}});
  CHECK_NOTHROW(mdp.validate());
  CHECK_THROWS(DiscreteMdp(0, 1, 0.9));
}

TEST_CASE("value iteration reports non-convergence") {
  GridWorldEnv env;
  SolverOptions opts;
  opts.max_iters = 2;
  try {
    value_iteration(grid_to_mdp(env, 0.95), opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > opts.tol);
  }
}

TEST_CASE("policy validation") {
  const auto [m1, m2] = counterexample_pair();
  TabularPolicy pi(3, 2);
  pi(0, 0) = 0.5;
  pi(0, 1) = 0.4;
  pi(1, 0) = 1.0;
  CHECK_THROWS_AS(pi.validate_for(m1), std::invalid_argument);
  pi(0, 1) = 0.5;
  CHECK_NOTHROW(pi.validate_for(m1));
}

TEST_CASE("mdp json round trip") {
  const auto mdp = random_mdp({}, 3);
  const auto back = mdp_from_json_string(mdp_to_json_string(mdp));
  REQUIRE(back.num_states() == mdp.num_states());
  REQUIRE(back.num_actions() == mdp.num_actions());
  CHECK(back.gamma() == mdp.gamma());
  for (int s = 0; s < mdp.num_states(); ++s) {
    CHECK(back.is_terminal(s) == mdp.is_terminal(s));
    for (int a = 0; a < mdp.num_actions(); ++a) {
      CHECK(rows_equal(canonical_row(back.outcomes(s, a)), canonical_row(mdp.outcomes(s, a)), 0.0));
    }
  }
  CHECK(value_iteration(back).values == value_iteration(mdp).values);
}

TEST_CASE("mdp json errors name the field") {
  CHECK_THROWS_WITH_AS(mdp_from_json_string(R"({"num_actions":1,"gamma":0.9})"), doctest::Contains("num_states"),
                       MdpFormatError);
  CHECK_THROWS_AS(mdp_from_json_string("{not json"), MdpFormatError);
}
