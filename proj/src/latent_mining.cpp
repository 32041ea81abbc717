#include "laq/latent_mining.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "laq/rng.hpp"

namespace laq {

void MiningConfig::validate() const {
  if (num_latent < 1) throw std::invalid_argument("num_latent must be >= 1");
  if (max_em_iters < 1) throw std::invalid_argument("max_em_iters must be >= 1");
  if (mode == ForwardMode::SharedLinear) {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (epochs < 1 || batch_size < 1) throw std::invalid_argument("epochs and batch_size must be >= 1");
  }
}

std::string MiningReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,loss,changes\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    out << (i + 1) << ',' << losses[i] << ',' << changes[i] << '\n';
  }
  return out.str();
}

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double total = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = a[i] - b[i];
    total += diff * diff;
  }
  return total;
}

MiningResult mine_tabular(const DatasetPtr& ds, const MiningConfig& cfg) {
  const StateIndex idx = StateIndex::build(*ds);
  const std::size_t n = ds->size();
  const auto k = static_cast<std::size_t>(cfg.num_latent);
  const auto d = static_cast<std::size_t>(ds->dim());
  const auto num_states = static_cast<std::size_t>(idx.num_states());

  std::vector<std::vector<std::size_t>> members(num_states);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(idx.obs_state[i])].push_back(i);

  std::vector<double> mu(num_states * k * d, 0.0);
  auto mu_at = [&](std::size_t s, std::size_t c) { return mu.data() + (s * k + c) * d; };
  auto next_of = [&](std::size_t i) { return ds->records[i].next_obs.data(); };

  // Latents start at the state's mean outcome, or at the observation itself
  // for states that have no outgoing samples.
  for (std::size_t s = 0; s < num_states; ++s) {
    std::vector<double> mean(idx.keys[s]);
    if (!members[s].empty()) {
      std::fill(mean.begin(), mean.end(), 0.0);
      for (auto i : members[s]) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += next_of(i)[j];
      }
      for (auto& v : mean) v /= static_cast<double>(members[s].size());
    }
    for (std::size_t c = 0; c < k; ++c) std::copy(mean.begin(), mean.end(), mu_at(s, c));
  }

  MiningReport report;
  Rng rng(cfg.seed);
  std::vector<int> assign(n);
  for (auto& a : assign) a = uniform_int(rng, cfg.num_latent);

  std::vector<double> sums(k * d);
  std::vector<std::size_t> counts(k);
  for (int iter = 1; iter <= cfg.max_em_iters; ++iter) {
    for (std::size_t s = 0; s < num_states; ++s) {
      if (members[s].empty()) continue;
      std::fill(sums.begin(), sums.end(), 0.0);
      std::fill(counts.begin(), counts.end(), 0);
      for (auto i : members[s]) {
        const auto c = static_cast<std::size_t>(assign[i]);
        ++counts[c];
        for (std::size_t j = 0; j < d; ++j) sums[c * d + j] += next_of(i)[j];
      }
      bool any_empty = false;
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) {
          any_empty = true;
          continue;
        }
        for (std::size_t j = 0; j < d; ++j) mu_at(s, c)[j] = sums[c * d + j] / static_cast<double>(counts[c]);
      }
      if (!any_empty) continue;

      std::vector<double> fit(members[s].size());
      for (std::size_t m = 0; m < fit.size(); ++m) {
        const auto i = members[s][m];
        fit[m] = sq_dist(next_of(i), mu_at(s, static_cast<std::size_t>(assign[i])), d);
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        const auto worst = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
        if (fit[worst] <= 0.0) break;
        std::copy(next_of(members[s][worst]), next_of(members[s][worst]) + d, mu_at(s, c));
        ++report.reinits;
        for (std::size_t m = 0; m < fit.size(); ++m) {
          fit[m] = std::min(fit[m], sq_dist(next_of(members[s][m]), mu_at(s, c), d));
        }
      }
    }

    double total = 0.0;
    int changes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(idx.obs_state[i]);
      int best = 0;
      double best_loss = sq_dist(next_of(i), mu_at(s, 0), d);
      for (std::size_t c = 1; c < k; ++c) {
        const double v = sq_dist(next_of(i), mu_at(s, c), d);
        if (v < best_loss) {
          best = static_cast<int>(c);
          best_loss = v;
        }
      }
      total += best_loss;
      if (assign[i] != best) {
        assign[i] = best;
        ++changes;
      }
    }
    report.losses.push_back(total);
    report.changes.push_back(changes);
    report.iterations = iter;
    if (changes == 0) {
      report.converged = true;
      break;
    }
  }
  report.assignments = assign;

  ForwardModel model = ForwardModel::tabular(cfg.num_latent, static_cast<int>(d), idx.keys, std::move(mu));
  LabeledDataset labels = label_with_model(ds, model);
  labels.seed = cfg.seed;
  labels.model_id = "tabular-em";
  return {std::move(model), std::move(labels), std::move(report)};
}

MiningResult mine_linear(const DatasetPtr& ds, const MiningConfig& cfg) {
  const std::size_t n = ds->size();
  const auto k = static_cast<std::size_t>(cfg.num_latent);
  const auto d = static_cast<std::size_t>(ds->dim());

  std::vector<double> w(k * d * d, 0.0);
  std::vector<double> b(k * d, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) w[(c * d + j) * d + j] = 1.0;
  }
  auto loss_of = [&](std::size_t i, std::size_t c) {
    const auto& r = ds->records[i];
    double total = 0.0;
    for (std::size_t row = 0; row < d; ++row) {
      double pred = b[c * d + row];
      for (std::size_t j = 0; j < d; ++j) pred += w[(c * d + row) * d + j] * r.obs[j];
      const double diff = pred - r.next_obs[row];
      total += diff * diff;
    }
    return total;
  };

  MiningReport report;
  Rng rng(cfg.seed);
  // k-means++ over displacements picks one record per latent; each latent starts as that translation.
  auto seed_latent = [&](std::size_t c, std::size_t i) {
    const auto& r = ds->records[i];
    for (std::size_t row = 0; row < d; ++row) b[c * d + row] = r.next_obs[row] - r.obs[row];
  };
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t pick = static_cast<std::size_t>(uniform_int(rng, static_cast<int>(n)));
    if (c > 0) {
      double total = 0.0;
      for (double v : nearest) total += v;
      if (total > 0.0) {
        double u = uniform01(rng) * total;
        for (pick = 0; pick + 1 < n; ++pick) {
          u -= nearest[pick];
          if (u < 0.0) break;
        }
      }
    }
    seed_latent(c, pick);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], loss_of(i, c));
  }
  std::vector<int> assign(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (loss_of(i, c) < loss_of(i, static_cast<std::size_t>(best))) best = static_cast<int>(c);
    }
    assign[i] = best;
  }

  std::vector<double> grad_w(d * d);
  std::vector<double> grad_b(d);
  std::vector<double> err(d);
  for (int iter = 1; iter <= cfg.max_em_iters; ++iter) {
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(assign[i])].push_back(i);
    for (std::size_t c = 0; c < k; ++c) {
      if (!members[c].empty()) {
        auto& order = members[c];
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
          std::shuffle(order.begin(), order.end(), rng);
          for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            std::fill(grad_b.begin(), grad_b.end(), 0.0);
            for (std::size_t m = start; m < stop; ++m) {
              const auto& r = ds->records[order[m]];
              for (std::size_t row = 0; row < d; ++row) {
                double pred = b[c * d + row];
                for (std::size_t j = 0; j < d; ++j) pred += w[(c * d + row) * d + j] * r.obs[j];
                err[row] = pred - r.next_obs[row];
              }
              for (std::size_t row = 0; row < d; ++row) {
                grad_b[row] += err[row];
                for (std::size_t j = 0; j < d; ++j) grad_w[row * d + j] += err[row] * r.obs[j];
              }
            }
            const double scale = 2.0 * cfg.learning_rate / static_cast<double>(stop - start);
            for (std::size_t row = 0; row < d; ++row) {
              b[c * d + row] -= scale * grad_b[row];
              for (std::size_t j = 0; j < d; ++j) w[(c * d + row) * d + j] -= scale * grad_w[row * d + j];
            }
          }
        }
        continue;
      }
      // Unused latent: make it predict the worst-fit sample exactly.
      std::size_t worst = 0;
      double worst_loss = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double v = loss_of(i, static_cast<std::size_t>(assign[i]));
        if (v > worst_loss) {
          worst = i;
          worst_loss = v;
        }
      }
      if (worst_loss <= 0.0) continue;
      const auto& r = ds->records[worst];
      for (std::size_t row = 0; row < d; ++row) {
        for (std::size_t j = 0; j < d; ++j) w[(c * d + row) * d + j] = row == j ? 1.0 : 0.0;
        b[c * d + row] = r.next_obs[row] - r.obs[row];
      }
      ++report.reinits;
    }

    double total = 0.0;
    int changes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_loss = loss_of(i, 0);
      for (std::size_t c = 1; c < k; ++c) {
        const double v = loss_of(i, c);
        if (v < best_loss) {
          best = static_cast<int>(c);
          best_loss = v;
        }
      }
      total += best_loss;
      if (assign[i] != best) {
        assign[i] = best;
        ++changes;
      }
    }
    report.losses.push_back(total);
    report.changes.push_back(changes);
    report.iterations = iter;
    if (changes == 0) {
      report.converged = true;
      break;
    }
  }
  report.assignments = assign;

  ForwardModel model = ForwardModel::shared_linear(cfg.num_latent, static_cast<int>(d), std::move(w), std::move(b));
  LabeledDataset labels = label_with_model(ds, model);
  labels.seed = cfg.seed;
  labels.model_id = "linear-em";
  return {std::move(model), std::move(labels), std::move(report)};
}

}  // namespace

MiningResult mine_latent_actions(DatasetPtr ds, const MiningConfig& cfg) {
  cfg.validate();
  if (!ds || ds->empty()) throw std::invalid_argument("mining needs a non-empty dataset");
  return cfg.mode == ForwardMode::Tabular ? mine_tabular(ds, cfg) : mine_linear(ds, cfg);
}

LabeledDataset cluster_baseline(DatasetPtr ds, ClusterFeature feature, int k, std::uint64_t seed,
                                int restarts) {
  if (!ds || ds->empty()) throw std::invalid_argument("clustering needs a non-empty dataset");
  const auto d = static_cast<std::size_t>(ds->dim());
  const int dim = static_cast<int>(feature == ClusterFeature::Concat ? 2 * d : d);

  std::map<std::vector<double>, int> ids;
  std::vector<double> points;
  std::vector<double> weights;
  std::vector<int> record_feature(ds->size());
  std::vector<double> f(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < ds->size(); ++i) {
    const auto& r = ds->records[i];
    for (std::size_t j = 0; j < d; ++j) {
      if (feature == ClusterFeature::Concat) {
        f[j] = r.obs[j];
        f[d + j] = r.next_obs[j];
      } else {
        f[j] = r.next_obs[j] - r.obs[j];
      }
    }
    auto [it, inserted] = ids.try_emplace(f, static_cast<int>(weights.size()));
    if (inserted) {
      points.insert(points.end(), f.begin(), f.end());
      weights.push_back(0.0);
    }
    weights[static_cast<std::size_t>(it->second)] += 1.0;
    record_feature[i] = it->second;
  }

  KMeansOptions opts;
  opts.restarts = restarts;
  const KMeansResult km = kmeans(points, dim, k, seed, opts, &weights);

  LabeledDataset lds;
  lds.source = std::move(ds);
  lds.scheme = feature == ClusterFeature::Concat ? "cluster-concat" : "cluster-diff";
  lds.num_labels = k;
  lds.k = k;
  lds.seed = seed;
  lds.labels.resize(record_feature.size());
  for (std::size_t i = 0; i < record_feature.size(); ++i) {
    lds.labels[i] = km.assignments[static_cast<std::size_t>(record_feature[i])];
  }
  return lds;
}

double purity(const LabeledDataset& lds) {
  lds.validate();
  if (lds.size() == 0) throw std::invalid_argument("purity of an empty labeling");
  const StateIndex idx = StateIndex::build(*lds.source);
  std::unordered_map<std::uint64_t, std::map<int, std::size_t>> cells;
  for (std::size_t i = 0; i < lds.size(); ++i) {
    const auto& r = lds.record(i);
    if (!r.gt_action) throw std::invalid_argument("record " + std::to_string(i) + " has no gt_action");
    const std::uint64_t key = static_cast<std::uint64_t>(idx.obs_state[i]) * static_cast<std::uint64_t>(lds.num_labels) +
                              static_cast<std::uint64_t>(lds.labels[i]);
    ++cells[key][*r.gt_action];
  }
  std::size_t matched = 0;
  for (const auto& [key, counts] : cells) {
    std::size_t best = 0;
    for (const auto& [gt, c] : counts) best = std::max(best, c);
    matched += best;
  }
  return static_cast<double>(matched) / static_cast<double>(lds.size());
}

}  // namespace laq
