#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "doctest.h"
#include "laq/kmeans.hpp"
#include "laq/latent_mining.hpp"
#include "laq/rng.hpp"
#include "unit/helpers.hpp"

using namespace laq;

namespace {

bool non_increasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] > xs[i - 1] + 1e-9 * std::max(1.0, std::abs(xs[i - 1]))) return false;
  }
  return true;
}

LabeledDataset with_labels(DatasetPtr ds, std::vector<int> labels, int num_labels) {
  LabeledDataset lds;
  lds.source = std::move(ds);
  lds.labels = std::move(labels);
  lds.num_labels = num_labels;
  lds.scheme = "test";
  return lds;
}

DatasetPtr one_state(const std::vector<int>& gt) {
  auto ds = std::make_shared<TransitionDataset>();
  for (int a : gt) {
    Transition t;
    t.obs = {0.0, 0.0};
    t.next_obs = {static_cast<double>(a), 0.0};
    t.gt_action = a;
    ds->records.push_back(t);
  }
  return ds;
}

// Two deterministic actions (+x and +y) from ten states on a line.
DatasetPtr two_displacements(int repeats) {
  auto ds = std::make_shared<TransitionDataset>();
  for (int r = 0; r < repeats; ++r) {
    for (int x = 0; x < 10; ++x) {
      for (int a = 0; a < 2; ++a) {
        Transition t;
        t.obs = {static_cast<double>(x), 0.0};
        t.next_obs = {static_cast<double>(x + (a == 0 ? 1 : 0)), a == 1 ? 1.0 : 0.0};
        t.gt_action = a;
        ds->records.push_back(t);
      }
    }
  }
  return ds;
}

// Interior grid cells, where no move clips: every move is a pure translation.
DatasetPtr interior_translations() {
  GridWorldEnv env;
  auto ds = std::make_shared<TransitionDataset>();
  const auto all = laq::testing::exhaustive_grid_dataset(env);
  for (const auto& t : all->records) {
    const Cell c = env.cell_at(env.cell_of_observation(t.obs));
    if (c.x > 0 && c.y > 0 && c.x < env.width - 1 && c.y < env.height - 1) ds->records.push_back(t);
  }
  return ds;
}

bool is_bijection_of_gt(const LabeledDataset& lds, int n) {
  std::map<int, int> label_to_gt;
  std::set<int> gts;
  for (std::size_t i = 0; i < lds.size(); ++i) {
    const int g = *lds.record(i).gt_action;
    auto [it, inserted] = label_to_gt.emplace(lds.labels[i], g);
    if (!inserted && it->second != g) return false;
    gts.insert(g);
  }
  std::set<int> images;
  for (const auto& [l, g] : label_to_gt) images.insert(g);
  return static_cast<int>(label_to_gt.size()) == n && images.size() == label_to_gt.size();
}

}  // namespace

TEST_CASE("purity examples") {
  CHECK(purity(with_labels(one_state({0, 0, 0, 1, 2}), {0, 0, 0, 0, 0}, 1)) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(purity(with_labels(one_state({0, 1, 2, 3, 4, 5, 6, 7}), std::vector<int>(8, 0), 1)) == 0.125);
  const auto ds = one_state({0, 1, 2, 3, 1, 1});
  CHECK(purity(with_labels(ds, {0, 1, 2, 3, 1, 1}, 4)) == 1.0);
  // Cells (label 0: {0, 0, 1}) and (label 1: {2}) weighted by size: (2 + 1) / 4.
  CHECK(purity(with_labels(one_state({0, 0, 1, 2}), {0, 0, 0, 1}, 2)) == 0.75);
}

TEST_CASE("k-means with one cluster finds the mean") {
  const std::vector<double> pts = {0, 0, 2, 0, 4, 3};
  const auto r = kmeans(pts, 2, 1, 0);
  CHECK(r.centroids[0] == doctest::Approx(2.0));
  CHECK(r.centroids[1] == doctest::Approx(1.0));
  CHECK(r.inertia == doctest::Approx(4 + 1 + 0 + 1 + 4 + 4));
}

TEST_CASE("k-means separates two blobs like the best 2-partition") {
  Rng rng(17);
  const int n = 20;
  std::vector<double> pts;
  for (int i = 0; i < n; ++i) {
    const double cx = i < n / 2 ? 0.0 : 10.0;
    pts.push_back(cx + uniform01(rng));
    pts.push_back(uniform01(rng) - (i % 3));
  }
  auto inertia_of = [&](unsigned mask) {
    double sum[2][2] = {{0, 0}, {0, 0}};
    int count[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
      const int g = (mask >> i) & 1;
      sum[g][0] += pts[2 * i];
      sum[g][1] += pts[2 * i + 1];
      count[g]++;
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const int g = (mask >> i) & 1;
      const double dx = pts[2 * i] - sum[g][0] / count[g];
      const double dy = pts[2 * i + 1] - sum[g][1] / count[g];
      total += dx * dx + dy * dy;
    }
    return total;
  };
  double best = std::numeric_limits<double>::infinity();
  unsigned best_mask = 0;
  // Point 19 is fixed in group 1, so every split is enumerated once.
  for (unsigned mask = 1u << (n - 1); mask < (1u << n) - 1; ++mask) {
    const double v = inertia_of(mask);
    if (v < best) {
      best = v;
      best_mask = mask;
    }
  }

  const auto r = kmeans(pts, 2, 2, 3);
  CHECK(r.inertia == doctest::Approx(best).epsilon(1e-12));
  for (int i = 0; i < n; ++i) {
    CHECK((r.assignments[static_cast<std::size_t>(i)] == r.assignments[n - 1]) == (((best_mask >> i) & 1) == 1));
  }
}

TEST_CASE("k-means with k distinct points has zero inertia") {
  const std::vector<double> pts = {0, 0, 1, 0, 0, 1, 1, 1, 0, 0, 1, 1};
  const auto r = kmeans(pts, 2, 4, 5);
  CHECK(r.inertia == doctest::Approx(0.0));
  std::set<int> used(r.assignments.begin(), r.assignments.end());
  CHECK(used.size() == 4);
}

TEST_CASE("weighted k-means equals repeated points") {
  const std::vector<double> repeated = {0, 0, 0, 5, 6, 9};
  const std::vector<double> unique = {0, 5, 6, 9};
  const std::vector<double> w = {3, 1, 1, 1};
  const auto a = kmeans(repeated, 1, 2, 1, {300, 5});
  const auto b = kmeans(unique, 1, 2, 1, {300, 5}, &w);
  CHECK(a.inertia == doctest::Approx(b.inertia));
}

TEST_CASE("k-means argument checks") {
  CHECK_THROWS_AS(kmeans({1, 2, 3}, 2, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(kmeans({}, 1, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(kmeans({1, 2}, 1, 0, 0), std::invalid_argument);
}

TEST_CASE("tabular EM on gridworld data") {
  const auto ds = laq::testing::grid_dataset_20k();
  MiningConfig cfg;
  const auto mined = mine_latent_actions(ds, cfg);
  CHECK(purity(mined.labels) >= 0.97);
  CHECK(mined.report.converged);
  CHECK(non_increasing(mined.report.losses));
  CHECK(mined.labels.model_id == "tabular-em");
  CHECK(mined.report.iterations == static_cast<int>(mined.report.losses.size()));
}

TEST_CASE("one latent action costs the per-state next-observation variance") {
  const auto ds = laq::testing::grid_dataset(1000, 2);
  std::map<Observation, std::vector<const Transition*>> by_state;
  for (const auto& t : ds->records) by_state[t.obs].push_back(&t);
  double expected = 0.0;
  for (const auto& [obs, ts] : by_state) {
    double mx = 0.0, my = 0.0;
    for (const auto* t : ts) {
      mx += t->next_obs[0];
      my += t->next_obs[1];
    }
    mx /= static_cast<double>(ts.size());
    my /= static_cast<double>(ts.size());
    for (const auto* t : ts) expected += (t->next_obs[0] - mx) * (t->next_obs[0] - mx) + (t->next_obs[1] - my) * (t->next_obs[1] - my);
  }
  MiningConfig cfg;
  cfg.num_latent = 1;
  const auto mined = mine_latent_actions(ds, cfg);
  CHECK(mined.labels.labels == label_single(ds).labels);
  CHECK(mined.report.losses.back() == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("two displacement actions are mined exactly") {
  const auto ds = two_displacements(3);
  MiningConfig cfg;
  cfg.num_latent = 2;
  for (std::uint64_t seed : {0u, 1u, 2u}) {
    cfg.seed = seed;
    const auto mined = mine_latent_actions(ds, cfg);
    CHECK(purity(mined.labels) == 1.0);
    CHECK(mined.report.converged);
    CHECK(mined.report.iterations <= 3);
  }
}

TEST_CASE("shared-linear EM on translation data") {
  const auto ds = interior_translations();
  MiningConfig cfg;
  cfg.mode = ForwardMode::SharedLinear;
  cfg.learning_rate = 0.01;
  cfg.epochs = 20;
  cfg.batch_size = 16;
  const auto mined = mine_latent_actions(ds, cfg);
  CHECK(mined.labels.model_id == "linear-em");
  CHECK(mined.model.mode() == ForwardMode::SharedLinear);
  CHECK(purity(mined.labels) >= 0.9);
  MESSAGE("shared-linear purity on interior translations " << purity(mined.labels));
}

TEST_CASE("mining config validation") {
  MiningConfig cfg;
  cfg.num_latent = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.num_latent = 2;
  cfg.max_em_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(mine_latent_actions(std::make_shared<TransitionDataset>(), MiningConfig{}), std::invalid_argument);
}

TEST_CASE("clustering the displacement of pure translations recovers the actions") {
  const auto lds = cluster_baseline(interior_translations(), ClusterFeature::Diff, 8, 0);
  CHECK(is_bijection_of_gt(lds, 8));
  CHECK(purity(lds) == 1.0);
}

TEST_CASE("clustering baselines on gridworld data") {
  const auto ds = laq::testing::grid_dataset_20k();
  const double concat = purity(cluster_baseline(ds, ClusterFeature::Concat, 8, derive_seed(0, 4)));
  const double diff = purity(cluster_baseline(ds, ClusterFeature::Diff, 8, derive_seed(0, 5)));
  CHECK(std::abs(concat - 0.851) <= 0.05);
  CHECK(diff >= 0.90);
}

TEST_CASE("forward model predictions and json") {
  const std::vector<Observation> keys = {{0, 0}, {1, 0}};
  const std::vector<double> means = {0, 1, 1, 0, 1, 1, 2, 0};
  const auto tab = ForwardModel::tabular(2, 2, keys, means);
  CHECK(tab.loss({0, 0}, 1, {1, 0}) == 0.0);
  CHECK(tab.loss({1, 0}, 0, {1, 0}) == 1.0);
  CHECK(tab.best_latent({1, 0}, {2, 0.2}) == 1);
  CHECK(tab.best_latent({0, 0}, {0.5, 0.5}) == 0);  // tie goes to the lowest latent
  CHECK_THROWS_AS(tab.loss({5, 5}, 0, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(tab.loss({0, 0, 0}, 0, {0, 0}), std::invalid_argument);

  const auto back = ForwardModel::from_json_string(tab.to_json_string());
  CHECK(back.mode() == ForwardMode::Tabular);
  CHECK(back.loss({1, 0}, 1, {2, 0.2}) == tab.loss({1, 0}, 1, {2, 0.2}));

  const auto lin = ForwardModel::shared_linear(1, 2, {1, 0, 0, 1}, {0.5, -1});
  double out[2];
  lin.predict({2, 3}, 0, out);
  CHECK(out[0] == 2.5);
  CHECK(out[1] == 2.0);
  const auto lin_back = ForwardModel::from_json_string(lin.to_json_string());
  CHECK(lin_back.weights() == lin.weights());
  CHECK(lin_back.bias() == lin.bias());
  CHECK_THROWS_AS(ForwardModel::from_json_string(R"({"mode":"rnn","num_latent":1,"dim":1})"), std::invalid_argument);
}

TEST_CASE("mining report csv") {
  const auto mined = mine_latent_actions(two_displacements(1), MiningConfig{});
  const auto csv = mined.report.to_csv();
  CHECK(csv.rfind("iteration,loss,changes\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == mined.report.iterations + 1);
}
