#include <cmath>

#include "doctest.h"
#include "laq/gridworld.hpp"
#include "laq/labeling.hpp"
#include "laq/offline_q.hpp"
#include "unit/helpers.hpp"

using namespace laq;
using laq::testing::sup_diff;

namespace {

DatasetPtr one_transition(double reward) {
  auto ds = std::make_shared<TransitionDataset>();
  Transition t;
  t.obs = {0.0};
  t.next_obs = {1.0};
  t.reward = reward;
  t.gt_action = 0;
  ds->records.push_back(t);
  return ds;
}

}  // namespace

TEST_CASE("empirical MDP of a labeled dataset") {
  auto ds = std::make_shared<TransitionDataset>();
  auto add = [&](Observation o, Observation n, double r, int a) {
    Transition t;
    t.obs = std::move(o);
    t.next_obs = std::move(n);
    t.reward = r;
    t.gt_action = a;
    ds->records.push_back(t);
  };
  add({0}, {1}, 0.0, 0);
  add({0}, {2}, 1.0, 0);
  add({0}, {2}, 1.0, 0);
  add({1}, {2}, 1.0, 1);
  const auto emp = build_empirical_mdp(label_ground_truth(ds, 2), 0.9);
  const int s0 = emp.index.find({0});
  const int s1 = emp.index.find({1});
  const int s2 = emp.index.find({2});
  CHECK(emp.mdp.is_terminal(s2));
  CHECK_FALSE(emp.mdp.is_terminal(s0));
  CHECK(emp.visit_count(s0, 0) == 3);
  CHECK(emp.visit_count(s1, 0) == 0);
  CHECK_FALSE(emp.mdp.has_action(s1, 0));
  const auto row = canonical_row(emp.mdp.outcomes(s0, 0));
  REQUIRE(row.size() == 2);
  CHECK(row[0].next_state == std::min(s1, s2));
  double p_goal = 0.0;
  for (const auto& o : row) {
    if (o.next_state == s2) p_goal = o.prob;
  }
  CHECK(p_goal == doctest::Approx(2.0 / 3.0));
  CHECK_NOTHROW(emp.mdp.validate(ActionCoverage::Partial));

  const auto pi = empirical_policy(emp);
  CHECK(pi(s0, 0) == 1.0);
  CHECK(pi(s1, 1) == 1.0);

  const auto ce = certainty_equivalence_q(label_ground_truth(ds, 2), 0.9);
  CHECK(ce.values[static_cast<std::size_t>(s1)] == doctest::Approx(1.0));
  CHECK(ce.values[static_cast<std::size_t>(s0)] == doctest::Approx(2.0 / 3.0 + 0.9 / 3.0));
  CHECK_FALSE(ce.q.available(s1, 0));
}

TEST_CASE("one sampled backup with alpha 1 stores the reward") {
  SampledQOptions opts;
  opts.sweeps = 1;
  opts.alpha = {AlphaSchedule::Kind::Constant, 1.0};
  opts.checkpoint_every = 1;
  const auto res = sampled_q_learning(label_ground_truth(one_transition(0.7), 1), 0.9, opts);
  CHECK(res.q(res.empirical.index.find({0.0}), 0) == 0.7);
}

TEST_CASE("sampled Q-learning with ground-truth labels reaches the batch fixed point") {
  const auto gt = label_ground_truth(laq::testing::grid_dataset(2000, 4));
  const auto ce = certainty_equivalence_q(gt, 0.95);

  SUBCASE("per-sweep visit decay") {
    SampledQOptions opts;
    const auto res = sampled_q_learning(gt, 0.95, opts);
    CHECK(q_sup_diff(ce.q, res.q) < 1e-3);
    CHECK(res.curve.checkpoints.back().residual < 1e-3);
  }
  SUBCASE("cumulative visit decay on deterministic exhaustive data shrinks the gap") {
    const auto exhaustive = label_ground_truth(laq::testing::exhaustive_grid_dataset());
    const auto exact = certainty_equivalence_q(exhaustive, 0.95);
    SampledQOptions opts;
    opts.alpha.kind = AlphaSchedule::Kind::VisitDecay;
    opts.frozen_targets = false;
    opts.checkpoint_every = 1000;
    opts.sweeps = 2000;
    const double early = q_sup_diff(exact.q, sampled_q_learning(exhaustive, 0.95, opts).q);
    opts.sweeps = 20000;
    const double late = q_sup_diff(exact.q, sampled_q_learning(exhaustive, 0.95, opts).q);
    CHECK(late < early);
    MESSAGE("cumulative 1/n step sizes: sup gap " << early << " after 2000 sweeps, " << late << " after 20000");
  }
}

TEST_CASE("sampled Q-learning with one label converges to the TD(0) value") {
  const auto single = label_single(laq::testing::grid_dataset(2000, 4));
  const auto ce = certainty_equivalence_q(single, 0.95);
  const auto res = sampled_q_learning(single, 0.95, SampledQOptions{});
  CHECK(sup_diff(res.values, ce.values) < 1e-3);
}

TEST_CASE("sampled Q-learning is reproducible and records checkpoints") {
  const auto lds = label_obfuscated(laq::testing::grid_dataset(300, 9), 0.5, 1);
  const auto ref = certainty_equivalence_q(label_ground_truth(lds.source), 0.95);
  SampledQOptions opts;
  opts.sweeps = 30;
  opts.checkpoint_every = 10;
  opts.seed = 5;
  opts.reference = &ref.values;
  const auto a = sampled_q_learning(lds, 0.95, opts);
  const auto b = sampled_q_learning(lds, 0.95, opts);
  CHECK(a.q.values() == b.q.values());
  REQUIRE(a.curve.checkpoints.size() == 3);
  CHECK(a.curve.checkpoints[2].sweep == 30);
  CHECK(a.curve.spearman_series().size() == 3);

  opts.sweeps = 0;
  CHECK_THROWS_AS(sampled_q_learning(lds, 0.95, opts), std::invalid_argument);
  opts.sweeps = 3;
  opts.alpha = {AlphaSchedule::Kind::Constant, 0.0};
  CHECK_THROWS_AS(sampled_q_learning(lds, 0.95, opts), std::invalid_argument);
}

TEST_CASE("spearman correlation") {
  CHECK(*spearman({1, 2, 3, 4}, {1, 2, 3, 4}) == doctest::Approx(1.0));
  CHECK(*spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(*spearman({1, 2, 3}, {1, 3, 2}) == doctest::Approx(0.5));
  // Average ranks for ties: x ranks (1.5, 1.5, 3) against (1, 2, 3).
  CHECK(*spearman({1, 1, 2}, {1, 2, 3}) == doctest::Approx(1.5 / std::sqrt(1.5 * 2.0)));
  CHECK(*spearman({10, 20, 30}, {1, 100, 1000}) == doctest::Approx(1.0));
  CHECK_FALSE(spearman({1, 1, 1}, {1, 2, 3}).has_value());
  CHECK_THROWS_AS(spearman({1, 2}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(spearman({1}, {1}), std::invalid_argument);
}

TEST_CASE("spearman over states ignores states without outgoing data") {
  TransitionDataset ds;
  for (int i = 0; i < 3; ++i) {
    Transition t;
    t.obs = {static_cast<double>(i)};
    t.next_obs = {static_cast<double>(i + 1)};
    ds.records.push_back(t);
  }
  const auto index = StateIndex::build(ds);
  ValueTable v(4), ref(4);
  for (int s = 0; s < 4; ++s) {
    const double x = index.keys[static_cast<std::size_t>(s)][0];
    v[static_cast<std::size_t>(s)] = x;
    ref[static_cast<std::size_t>(s)] = x == 3 ? -100.0 : x;
  }
  CHECK(*spearman_on_states(v, ref, index) == doctest::Approx(1.0));
}

TEST_CASE("behavior correctness") {
  GridWorldEnv env;
  const auto mdp = grid_to_mdp(env, 0.95);
  const auto v_star = value_iteration(mdp).values;
  CHECK(behavior_correctness(v_star, mdp) == 1.0);
  CHECK(behavior_correctness(policy_evaluation(mdp, data_policy(env)), mdp) < 1.0);

  ValueTable negated = v_star;
  for (auto& x : negated.values) x = -x;
  CHECK(behavior_correctness(negated, mdp) <= 1.0 / 8.0);
  CHECK_THROWS_AS(behavior_correctness(ValueTable(3), mdp), std::invalid_argument);
}

TEST_CASE("percentile and model selection") {
  CHECK(percentile({0.4, 0.4, 0.4}, 0.95) == 0.4);
  CHECK(percentile({0.0, 1.0}, 0.95) == doctest::Approx(0.95));
  CHECK(percentile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 0.0) == 1.0);
  CHECK(percentile({1.0, 2.0, 3.0, 4.0}, 1.0) == 4.0);
  CHECK_THROWS_AS(percentile({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(percentile({1.0}, 1.5), std::invalid_argument);

  TrainCurve curve;
  for (int i = 0; i < 100; ++i) {
    Checkpoint c;
    c.sweep = i;
    c.spearman = 1.0 - std::exp(-0.1 * i);
    curve.checkpoints.push_back(c);
  }
  const double final_value = *curve.checkpoints.back().spearman;
  CHECK(std::abs(model_selection_p95(curve) - final_value) < 1e-3);
  CHECK_THROWS_AS(model_selection_p95(TrainCurve{}), std::invalid_argument);
}

TEST_CASE("q sup difference") {
  QTable a(2, 2), b(2, 2);
  a.set_available(0, 1, false);
  a.set_available(1, 0, false);
  a.set_available(1, 1, false);
  a(0, 0) = 1.0;
  b(0, 0) = 0.25;
  b(1, 1) = 9.0;
  CHECK(q_sup_diff(a, b) == 0.75);
  CHECK_THROWS_AS(q_sup_diff(a, QTable(3, 2)), std::invalid_argument);
}
