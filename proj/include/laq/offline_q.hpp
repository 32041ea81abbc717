#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "laq/dataset.hpp"
#include "laq/mdp.hpp"

namespace laq {

/// Maximum-likelihood MDP of a labeled dataset: states are the distinct
/// observations, actions the labels. Only (state, label) pairs seen in the
/// data have outcome rows; states without outgoing samples are terminal.
struct EmpiricalMdp {
  DiscreteMdp mdp;
  StateIndex index;
  std::vector<std::size_t> visits;  // num_states * num_labels

  std::size_t visit_count(int s, int label) const {
    return visits[static_cast<std::size_t>(s) * static_cast<std::size_t>(mdp.num_actions()) +
                  static_cast<std::size_t>(label)];
  }
};

EmpiricalMdp build_empirical_mdp(const LabeledDataset& lds, double gamma);

/// Visit-frequency policy of the labels at each state.
TabularPolicy empirical_policy(const EmpiricalMdp& emp);

struct CeResult {
  QTable q;  // unavailable where (s, label) was never observed
  ValueTable values;
  EmpiricalMdp empirical;
};

/// Exact batch fixed point: value iteration on the empirical MDP with
/// V(s) = max over labels observed at s.
CeResult certainty_equivalence_q(const LabeledDataset& lds, double gamma, double tol = 1e-10);

struct AlphaSchedule {
  enum class Kind {
    Constant,         // alpha = value
    VisitDecay,       // 1 / (1 + N(s, a)), N counted over the whole run
    SweepVisitDecay,  // 1 / (1 + N(s, a)), N counted within the current sweep
  };
  Kind kind = Kind::SweepVisitDecay;
  double value = 0.1;
};

struct Checkpoint {
  int sweep = 0;
  ValueTable values;
  double residual = 0.0;  // sup over observed pairs of |Q - T Q| on the empirical MDP
  std::optional<double> spearman;
};

struct TrainCurve {
  std::vector<Checkpoint> checkpoints;
  std::vector<double> spearman_series() const;
};

struct SampledQOptions {
  int sweeps = 200;
  AlphaSchedule alpha;
  std::uint64_t seed = 0;
  int checkpoint_every = 10;
  /// Bootstrap from a copy of Q taken at the start of each sweep (a target
  /// table) instead of the live table. With SweepVisitDecay each sweep then
  /// performs one exact backup of the empirical MDP.
  bool frozen_targets = true;
  /// Values over the dataset's states (StateIndex order) to correlate
  /// against at each checkpoint, restricted to states with outgoing data.
  const ValueTable* reference = nullptr;
};

struct SampledQResult {
  QTable q;
  ValueTable values;
  TrainCurve curve;
  EmpiricalMdp empirical;
};

/// Offline Q-learning by shuffled passes over the batch:
/// Q(s,a) += alpha (r + gamma max_{a' seen at s'} Q(s',a') - Q(s,a)), with
/// terminal successors bootstrapping 0 and Q initialized to 0.
SampledQResult sampled_q_learning(const LabeledDataset& lds, double gamma, const SampledQOptions& opts);

/// Sup-norm difference over the pairs available in `a`.
double q_sup_diff(const QTable& a, const QTable& b);

/// Average-rank Spearman correlation; nullopt when either input is constant.
/// Throws std::invalid_argument for length mismatch or fewer than 2 points.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Spearman over the states of `index` that have outgoing data.
std::optional<double> spearman_on_states(const ValueTable& v, const ValueTable& ref, const StateIndex& index);

/// Fraction of non-terminal states of `reference` whose greedy action under
/// `v` is optimal (Q*(s,a) >= max Q*(s) - tol).
double behavior_correctness(const ValueTable& v, const DiscreteMdp& reference, double tol = 1e-9);

/// Percentile with linear interpolation between order statistics, q in [0,1].
double percentile(std::vector<double> values, double q);

/// 95th percentile of the curve's Spearman series. Throws if it is empty.
double model_selection_p95(const TrainCurve& curve);

}  // namespace laq
