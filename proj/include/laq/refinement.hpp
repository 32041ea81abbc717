#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "laq/mdp.hpp"

namespace laq {

/// Actions of one state grouped into classes with identical outcome
/// distributions ("fundamental actions").
struct StatePartition {
  std::vector<std::vector<int>> classes;   // member actions, ascending
  std::vector<OutcomeRow> distributions;   // canonical row per class
  std::vector<int> class_of;               // action -> class index, -1 if unavailable
};

struct FundamentalPartition {
  std::vector<StatePartition> states;

  const std::vector<int>& members(int s, int b) const { return states[static_cast<std::size_t>(s)].classes[static_cast<std::size_t>(b)]; }
  int class_of(int s, int a) const { return states[static_cast<std::size_t>(s)].class_of[static_cast<std::size_t>(a)]; }
  std::size_t num_classes(int s) const { return states[static_cast<std::size_t>(s)].classes.size(); }
};

FundamentalPartition fundamental_partition(const DiscreteMdp& mdp, double tol = 1e-9);

struct RefinementVerdict {
  bool is_refinement = true;
  std::vector<std::pair<int, int>> missing_forward;   // (s, a_hat) matching no a
  std::vector<std::pair<int, int>> missing_backward;  // (s, a) matched by no a_hat
};

/// Checks both directions of the refinement relation state by state. Throws
/// std::invalid_argument when the state spaces, discounts or terminal sets
/// differ.
RefinementVerdict is_refinement(const DiscreteMdp& m, const DiscreteMdp& m_hat, double tol = 1e-9);

enum class RefinementMode { GlobalDuplicate, StateShuffled };

/// k-fold refinement: each of the k*m new actions copies one original action.
/// GlobalDuplicate applies one shuffled label->action surjection to every
/// state, StateShuffled draws it independently per state.
DiscreteMdp make_refinement(const DiscreteMdp& mdp, int k, RefinementMode mode, std::uint64_t seed);

/// Lifts a policy on the refined MDP back to `m`: each fundamental action gets
/// the mass the refined policy puts on its class, split evenly over members.
TabularPolicy lift_policy(const TabularPolicy& policy_hat, const DiscreteMdp& m,
                          const DiscreteMdp& m_hat, double tol = 1e-9);

/// The inverse direction: spreads each class's mass evenly over its members in
/// the refined MDP.
TabularPolicy push_policy(const TabularPolicy& policy, const DiscreteMdp& m,
                          const DiscreteMdp& m_hat, double tol = 1e-9);

/// Two 3-state MDPs (s1, s2, terminal st; gamma 0.9) that produce the same
/// complete state-only dataset but differ in V*(s1): 1.0 versus 0.91.
std::pair<DiscreteMdp, DiscreteMdp> counterexample_pair();

using TransitionTriple = std::tuple<int, int, double>;  // (s, s', r)

/// All (s, s', r) with positive probability under some action.
std::set<TransitionTriple> complete_dataset(const DiscreteMdp& mdp);

struct RandomMdpCaps {
  int max_states = 6;   // including the absorbing terminal
  int max_actions = 4;
  int max_support = 3;
  double gamma = 0.9;
};

/// Sparse Dirichlet(1) rows over at most `max_support` successors, rewards in
/// {0, 1}, one terminal state (the last index).
DiscreteMdp random_mdp(const RandomMdpCaps& caps, std::uint64_t seed);

/// Random stochastic policy, Dirichlet(1) rows over available actions.
TabularPolicy random_policy(const DiscreteMdp& mdp, std::uint64_t seed);

struct FuzzCaps {
  RandomMdpCaps mdp;
  int max_k = 3;
};

struct FuzzTrial {
  int trial = 0;
  std::uint64_t seed = 0;
  int num_states = 0;
  int num_actions = 0;
  int k = 1;
  RefinementMode mode = RefinementMode::GlobalDuplicate;
  bool control = false;      // perturbed non-refinement
  bool verdict = false;
  double value_gap = 0.0;    // sup-norm |V*_M - V*_M_hat|
  bool passed = false;
};

struct FuzzReport {
  std::vector<FuzzTrial> trials;
  int failures = 0;
  int controls_detected = 0;      // controls with verdict false
  int controls_with_gap = 0;      // controls with a positive value gap
  double max_refinement_gap = 0.0;

  std::string to_csv() const;
};

/// Refinement trials alternate between both modes; `num_controls` extra trials
/// mix 30% uniform noise into one refined row. A refinement trial passes when
/// the verdict is true and the gap is below 1e-8; a control passes when the
/// verdict is false.
FuzzReport theorem1_fuzz(int num_trials, std::uint64_t seed, const FuzzCaps& caps = {},
                         int num_controls = 0);

}  // namespace laq
