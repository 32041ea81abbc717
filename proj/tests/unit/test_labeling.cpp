#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "laq/gridworld.hpp"
#include "laq/labeling.hpp"
#include "laq/latent_mining.hpp"
#include "laq/offline_q.hpp"
#include "unit/helpers.hpp"

using namespace laq;
using laq::testing::sup_diff;

namespace {

// Keeps only records whose observation is strictly inside the grid.
DatasetPtr interior_records(const TransitionDataset& ds, const GridWorldEnv& env) {
  auto out = std::make_shared<TransitionDataset>();
  for (const auto& t : ds.records) {
    const Cell c = env.cell_at(env.cell_of_observation(t.obs));
    if (c.x > 0 && c.y > 0 && c.x < env.width - 1 && c.y < env.height - 1) out->records.push_back(t);
  }
  return out;
}

ValueTable cell_values(const GridWorldEnv& env, const CeResult& ce) {
  return values_on_grid(env, ce.empirical.index, ce.values);
}

}  // namespace

TEST_CASE("ground-truth labels") {
  const auto ds = laq::testing::grid_dataset(500, 3);
  const auto lds = label_ground_truth(ds);
  CHECK(lds.num_labels == 8);
  CHECK(lds.scheme == "gt");
  for (std::size_t i = 0; i < lds.size(); ++i) CHECK(lds.labels[i] == *lds.record(i).gt_action);
  CHECK(purity(lds) == 1.0);

  auto missing = std::make_shared<TransitionDataset>(*ds);
  missing->records[3].gt_action.reset();
  CHECK_THROWS_AS(label_ground_truth(missing), std::invalid_argument);
}

TEST_CASE("ground-truth labels on exhaustive data recover V*") {
  GridWorldEnv env;
  const auto ce = certainty_equivalence_q(label_ground_truth(laq::testing::exhaustive_grid_dataset(env)), 0.95);
  CHECK(sup_diff(cell_values(env, ce), value_iteration(grid_to_mdp(env, 0.95)).values) < 1e-8);
}

TEST_CASE("a single label evaluates the behavior policy") {
  GridWorldEnv env;
  const auto mdp = grid_to_mdp(env, 0.95);

  // Exhaustive data: the behavior policy is exactly uniform.
  const auto ce = certainty_equivalence_q(label_single(laq::testing::exhaustive_grid_dataset(env)), 0.95);
  CHECK(sup_diff(cell_values(env, ce), policy_evaluation(mdp, TabularPolicy::uniform(36, 8))) < 1e-8);

  // Rolled-out data: the behavior policy is the empirical action frequency.
  const auto ds = laq::testing::grid_dataset_20k();
  TabularPolicy behavior(36, 8);
  std::vector<double> visits(36, 0.0);
  for (const auto& t : ds->records) {
    const int c = env.cell_of_observation(t.obs);
    behavior(c, *t.gt_action) += 1.0;
    visits[static_cast<std::size_t>(c)] += 1.0;
  }
  for (int c = 0; c < 36; ++c) {
    for (int a = 0; a < 8; ++a) {
      if (visits[static_cast<std::size_t>(c)] > 0) behavior(c, a) /= visits[static_cast<std::size_t>(c)];
    }
  }
  const auto single = certainty_equivalence_q(label_single(ds), 0.95);
  CHECK(sup_diff(cell_values(env, single), policy_evaluation(mdp, behavior)) < 1e-8);

  const auto pi_gap = sup_diff(cell_values(env, single), policy_evaluation(mdp, data_policy(env)));
  MESSAGE("single-label values vs the generating policy's exact values, sup gap " << pi_gap);
}

TEST_CASE("single-label purity and ranking on gridworld data") {
  const auto ds = laq::testing::grid_dataset_20k();
  const auto single = label_single(ds);
  CHECK(single.num_labels == 1);
  CHECK(std::abs(purity(single) - 0.827) <= 0.05);

  const double gamma = 0.95;
  const auto ref = certainty_equivalence_q(label_ground_truth(ds), gamma);
  const auto ce = certainty_equivalence_q(single, gamma);
  const auto rho = spearman_on_states(ce.values, ref.values, ref.empirical.index);
  REQUIRE(rho);
  CHECK(*rho <= 0.5);
}

TEST_CASE("refined labels") {
  const auto ds = laq::testing::grid_dataset(2000, 5);
  CHECK(label_refined(ds, 1, 9).labels == label_ground_truth(ds).labels);

  const auto r4 = label_refined(ds, 4, 9);
  CHECK(r4.num_labels == 32);
  CHECK(purity(r4) == 1.0);
  std::set<int> used(r4.labels.begin(), r4.labels.end());
  CHECK(used.size() > 8);
  for (std::size_t i = 0; i < r4.size(); ++i) CHECK(r4.labels[i] / 4 == *r4.record(i).gt_action);
  CHECK(label_refined(ds, 4, 9).labels == r4.labels);
  CHECK(label_refined(ds, 4, 10).labels != r4.labels);
  CHECK(purity(label_refined(ds, 3, 2)) == 1.0);
}

TEST_CASE("4x refined labels recover V*") {
  GridWorldEnv env;
  const auto ds = laq::testing::exhaustive_grid_dataset(env);
  const auto ce = certainty_equivalence_q(label_refined(ds, 4, 1), 0.95);
  CHECK(sup_diff(cell_values(env, ce), value_iteration(grid_to_mdp(env, 0.95)).values) < 1e-8);
}

TEST_CASE("obfuscated labels") {
  const auto ds = laq::testing::grid_dataset(2000, 5);
  CHECK(label_obfuscated(ds, 0.0, 3).labels == label_ground_truth(ds).labels);
  const auto half = label_obfuscated(ds, 0.5, 3);
  CHECK(half.p == 0.5);
  CHECK(half.num_labels == 8);
  CHECK_THROWS_AS(label_obfuscated(ds, 1.5, 3), std::invalid_argument);
}

TEST_CASE("obfuscated labels agree with the true action at rate (1 - p) + p / 8 inside the grid") {
  GridWorldEnv env;
  const auto inner = interior_records(*laq::testing::grid_dataset_20k(), env);
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto lds = label_obfuscated(inner, p, 7);
    std::size_t same = 0;
    for (std::size_t i = 0; i < lds.size(); ++i) same += lds.labels[i] == *lds.record(i).gt_action ? 1 : 0;
    const double rate = static_cast<double>(same) / static_cast<double>(lds.size());
    CHECK(std::abs(rate - ((1.0 - p) + p / 8.0)) < 0.02);
    // Each cell keeps its most frequent action, so purity never falls below the agreement rate.
    CHECK(purity(lds) >= rate - 1e-12);
  }
}

TEST_CASE("relabeling with the converged model is idempotent") {
  const auto ds = laq::testing::grid_dataset(3000, 8);
  MiningConfig cfg;
  cfg.seed = 4;
  const auto mined = mine_latent_actions(ds, cfg);
  const auto again = label_with_model(ds, mined.model);
  CHECK(again.labels == mined.labels.labels);
  CHECK(purity(again) == purity(mined.labels));
  CHECK(again.scheme == "latent");
}

TEST_CASE("a one-latent model labels like a single action") {
  const auto ds = laq::testing::grid_dataset(200, 8);
  const auto index = StateIndex::build(*ds);
  std::vector<double> means;
  for (const auto& k : index.keys) means.insert(means.end(), k.begin(), k.end());
  const auto model = ForwardModel::tabular(1, 2, index.keys, means);
  CHECK(label_with_model(ds, model).labels == label_single(ds).labels);
}

TEST_CASE("a model fit to two clusters recovers them exactly") {
  // One state, two displacements with a little jitter.
  auto ds = std::make_shared<TransitionDataset>();
  for (int i = 0; i < 40; ++i) {
    Transition t;
    t.obs = {0.0, 0.0};
    const double jitter = 0.01 * (i % 5);
    t.next_obs = i % 2 ? Observation{3.0 + jitter, 0.0} : Observation{0.0, -3.0 - jitter};
    t.gt_action = i % 2;
    ds->records.push_back(t);
  }
  MiningConfig cfg;
  cfg.num_latent = 2;
  const auto mined = mine_latent_actions(ds, cfg);
  CHECK(purity(mined.labels) == 1.0);
  const int first = mined.labels.labels[0];
  for (std::size_t i = 0; i < ds->size(); ++i) CHECK((mined.labels.labels[i] == first) == (i % 2 == 0));
}

TEST_CASE("dominant filter") {
  const auto ds = laq::testing::grid_dataset(3000, 6);
  MiningConfig cfg;
  cfg.seed = 1;
  const auto mined = mine_latent_actions(ds, cfg);
  const auto& lds = mined.labels;
  std::set<int> distinct(lds.labels.begin(), lds.labels.end());

  SUBCASE("top_k at least the distinct count only re-indexes") {
    const auto kept = dominant_filter(lds, static_cast<int>(distinct.size()) + 3, mined.model);
    CHECK(kept.num_labels == static_cast<int>(distinct.size()));
    const std::vector<int> order(distinct.begin(), distinct.end());
    for (std::size_t i = 0; i < lds.size(); ++i) CHECK(order[static_cast<std::size_t>(kept.labels[i])] == lds.labels[i]);
  }
  SUBCASE("top_k = 1 is a single label") {
    const auto kept = dominant_filter(lds, 1, mined.model);
    CHECK(kept.num_labels == 1);
    CHECK(kept.labels == label_single(ds).labels);
  }
  SUBCASE("eight of eight latent actions keep every record") {
    const auto kept = dominant_filter(lds, 8, mined.model);
    CHECK(distinct.size() == 8);
    CHECK(kept.labels == lds.labels);
  }
  SUBCASE("dropped labels go to the best kept latent") {
    std::map<int, int> freq;
    for (int l : lds.labels) freq[l]++;
    const auto kept = dominant_filter(lds, 3, mined.model);
    CHECK(kept.num_labels == 3);
    std::vector<std::pair<int, int>> by_count;
    for (const auto& [l, n] : freq) by_count.push_back({-n, l});
    std::sort(by_count.begin(), by_count.end());
    std::vector<int> top;
    for (int i = 0; i < 3; ++i) top.push_back(by_count[static_cast<std::size_t>(i)].second);
    std::sort(top.begin(), top.end());
    std::vector<char> allowed(8, 0);
    for (int l : top) allowed[static_cast<std::size_t>(l)] = 1;
    for (std::size_t i = 0; i < lds.size(); ++i) {
      const auto& t = lds.record(i);
      const int original = allowed[static_cast<std::size_t>(lds.labels[i])]
                               ? lds.labels[i]
                               : mined.model.best_latent(t.obs, t.next_obs, &allowed);
      CHECK(top[static_cast<std::size_t>(kept.labels[i])] == original);
    }
  }
}

TEST_CASE("labeled dataset jsonl round trip") {
  const auto ds = laq::testing::grid_dataset(40, 2);
  const auto lds = label_refined(ds, 2, 5);
  std::stringstream buf;
  write_labeled(buf, lds);
  const auto back = read_labeled(buf);
  CHECK(back.labels == lds.labels);
  CHECK(back.num_labels == lds.num_labels);
  CHECK(back.scheme == "refined");
  CHECK(back.k == 2);
  CHECK(back.seed == 5);
  CHECK(back.source->size() == ds->size());
}
