#include "laq/labeling.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "laq/rng.hpp"

namespace laq {

namespace {

LabeledDataset empty_like(DatasetPtr ds, std::string scheme, int num_labels) {
  if (!ds) throw std::invalid_argument("dataset is null");
  LabeledDataset lds;
  lds.source = std::move(ds);
  lds.scheme = std::move(scheme);
  lds.num_labels = num_labels;
  lds.labels.resize(lds.source->size(), 0);
  return lds;
}

int require_gt(const Transition& r, std::size_t i) {
  if (!r.gt_action) throw std::invalid_argument("record " + std::to_string(i) + " has no gt_action");
  return *r.gt_action;
}

}  // namespace

LabeledDataset label_ground_truth(DatasetPtr ds, int num_actions) {
  auto lds = empty_like(std::move(ds), "gt", num_actions);
  for (std::size_t i = 0; i < lds.size(); ++i) lds.labels[i] = require_gt(lds.record(i), i);
  lds.k = 1;
  lds.validate();
  return lds;
}

LabeledDataset label_single(DatasetPtr ds) {
  auto lds = empty_like(std::move(ds), "single", 1);
  lds.k = 1;
  return lds;
}

LabeledDataset label_refined(DatasetPtr ds, int k, std::uint64_t seed, int num_actions) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  auto lds = empty_like(std::move(ds), "refined", num_actions * k);
  for (std::size_t i = 0; i < lds.size(); ++i) {
    const int gt = require_gt(lds.record(i), i);
    const int u = std::min(k - 1, static_cast<int>(counter_uniform(seed, i) * k));
    lds.labels[i] = gt * k + u;
  }
  lds.k = k;
  lds.seed = seed;
  lds.validate();
  return lds;
}

LabeledDataset label_obfuscated(DatasetPtr ds, double p, std::uint64_t seed, int num_actions) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  auto lds = empty_like(std::move(ds), "obfuscated", num_actions);
  for (std::size_t i = 0; i < lds.size(); ++i) {
    const int gt = require_gt(lds.record(i), i);
    if (counter_uniform(seed, 2 * i) < p) {
      lds.labels[i] = std::min(num_actions - 1, static_cast<int>(counter_uniform(seed, 2 * i + 1) * num_actions));
    } else {
      lds.labels[i] = gt;
    }
  }
  lds.p = p;
  lds.seed = seed;
  lds.validate();
  return lds;
}

LabeledDataset label_with_model(DatasetPtr ds, const ForwardModel& model) {
  auto lds = empty_like(std::move(ds), "latent", model.num_latent());
  for (std::size_t i = 0; i < lds.size(); ++i) {
    const auto& r = lds.record(i);
    lds.labels[i] = model.best_latent(r.obs, r.next_obs);
  }
  lds.k = model.num_latent();
  return lds;
}

LabeledDataset dominant_filter(const LabeledDataset& lds, int top_k, const ForwardModel& model) {
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  lds.validate();
  std::vector<std::size_t> freq(static_cast<std::size_t>(lds.num_labels), 0);
  for (int l : lds.labels) ++freq[static_cast<std::size_t>(l)];

  std::vector<int> order(static_cast<std::size_t>(lds.num_labels));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return freq[static_cast<std::size_t>(a)] > freq[static_cast<std::size_t>(b)];
  });
  std::vector<int> kept;
  for (int l : order) {
    if (static_cast<int>(kept.size()) == top_k || freq[static_cast<std::size_t>(l)] == 0) break;
    kept.push_back(l);
  }
  if (kept.empty()) kept.push_back(0);
  std::sort(kept.begin(), kept.end());

  std::vector<int> remap(static_cast<std::size_t>(lds.num_labels), -1);
  for (std::size_t i = 0; i < kept.size(); ++i) remap[static_cast<std::size_t>(kept[i])] = static_cast<int>(i);

  std::vector<char> allowed;
  if (model.num_latent() >= lds.num_labels) {
    allowed.assign(static_cast<std::size_t>(model.num_latent()), 0);
    for (int l : kept) allowed[static_cast<std::size_t>(l)] = 1;
  }

  LabeledDataset out = lds;
  out.scheme = "dominant";
  out.k = top_k;
  out.num_labels = static_cast<int>(kept.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    int mapped = remap[static_cast<std::size_t>(lds.labels[i])];
    if (mapped < 0) {
      if (allowed.empty()) throw std::invalid_argument("model has fewer latents than the labeling");
      const auto& r = lds.record(i);
      mapped = remap[static_cast<std::size_t>(model.best_latent(r.obs, r.next_obs, &allowed))];
    }
    out.labels[i] = mapped;
  }
  return out;
}

}  // namespace laq
