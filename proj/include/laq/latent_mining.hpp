#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laq/forward_model.hpp"
#include "laq/kmeans.hpp"
#include "laq/labeling.hpp"

namespace laq {

struct MiningConfig {
  int num_latent = 8;
  ForwardMode mode = ForwardMode::Tabular;
  int max_em_iters = 100;
  std::uint64_t seed = 0;
  // Shared-linear M-step.
  double learning_rate = 0.01;
  int epochs = 5;
  int batch_size = 256;

  void validate() const;
};

struct MiningReport {
  std::vector<double> losses;  // total loss after each E-step
  std::vector<int> changes;    // assignment changes in each E-step
  std::vector<int> assignments;
  int iterations = 0;
  bool converged = false;  // reached an assignment fixpoint
  int reinits = 0;         // empty latent actions re-seeded

  std::string to_csv() const;
};

struct MiningResult {
  ForwardModel model;
  LabeledDataset labels;
  MiningReport report;
};

/// Hard-EM latent action discovery. Starts from uniformly random assignments,
/// then alternates an M-step (tabular: per-state mean of assigned next
/// observations; shared-linear: minibatch gradient descent) with an E-step
/// (argmin loss, ties toward the lowest index) until no assignment changes or
/// max_em_iters E-steps have run. Labels are produced by the final model.
///
/// A latent left without samples is re-seeded onto the next observation of
/// the worst-fit sample: within its state in tabular mode, globally in
/// shared-linear mode.
MiningResult mine_latent_actions(DatasetPtr ds, const MiningConfig& cfg);

enum class ClusterFeature { Concat, Diff };

/// k-means on [o; o'] (Concat) or o' - o (Diff). Identical feature vectors
/// are clustered once with their multiplicity as weight.
LabeledDataset cluster_baseline(DatasetPtr ds, ClusterFeature feature, int k, std::uint64_t seed,
                                int restarts = 100);

/// State-conditioned purity: for each (observation, label) cell the fraction
/// taken by its most frequent gt_action, averaged with cell-size weights.
double purity(const LabeledDataset& lds);

}  // namespace laq
