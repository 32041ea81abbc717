#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace laq {

/// One entry of p(s', r | s, a): a successor state, the reward earned on the
/// transition into it, and its probability.
struct Outcome {
  int next_state = 0;
  double reward = 0.0;
  double prob = 0.0;
};

using OutcomeRow = std::vector<Outcome>;

/// Raised when an MDP (in memory or on disk) violates its invariants. The
/// message names the offending field, and the line for file input.
class MdpFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by the iterative solvers when the residual does not fall below the
/// tolerance within the iteration budget.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Full: every non-terminal (s, a) must have a distribution.
/// Partial: an (s, a) with an empty row is "unavailable" and is skipped by the
/// solvers; each non-terminal state still needs one available action. Used by
/// empirical MDPs built from data.
enum class ActionCoverage { Full, Partial };

/// Finite tabular MDP with explicit outcome lists. Terminal states have no
/// outgoing outcomes and value 0; rewards are earned on entering a state.
class DiscreteMdp {
 public:
  DiscreteMdp() = default;
  DiscreteMdp(int num_states, int num_actions, double gamma);

  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  double gamma() const noexcept { return gamma_; }

  const OutcomeRow& outcomes(int s, int a) const { return rows_[index(s, a)]; }
  void set_outcomes(int s, int a, OutcomeRow row);
  void add_outcome(int s, int a, Outcome o);
  bool has_action(int s, int a) const { return !outcomes(s, a).empty(); }

  bool is_terminal(int s) const { return terminal_[static_cast<std::size_t>(s)] != 0; }
  void set_terminal(int s, bool terminal = true);
  std::vector<int> terminal_states() const;

  const std::vector<double>& initial_dist() const noexcept { return initial_; }
  void set_initial_dist(std::vector<double> dist);

  /// Throws MdpFormatError describing the first violated invariant.
  void validate(ActionCoverage coverage = ActionCoverage::Full) const;

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions_) +
           static_cast<std::size_t>(a);
  }

  int num_states_ = 0;
  int num_actions_ = 0;
  double gamma_ = 0.9;
  std::vector<OutcomeRow> rows_;
  std::vector<char> terminal_;
  std::vector<double> initial_;
};

/// Row sorted by (next_state, reward) with duplicate keys merged.
OutcomeRow canonical_row(const OutcomeRow& row);

/// Equality of two canonical rows: identical (next_state, reward) keys and
/// probabilities within `tol`.
bool rows_equal(const OutcomeRow& a, const OutcomeRow& b, double tol);

/// n x m row-stochastic policy.
class TabularPolicy {
 public:
  TabularPolicy() = default;
  TabularPolicy(int num_states, int num_actions);

  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  double operator()(int s, int a) const { return probs_[index(s, a)]; }
  double& operator()(int s, int a) { return probs_[index(s, a)]; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  static TabularPolicy uniform(int num_states, int num_actions);
  static TabularPolicy deterministic(const std::vector<int>& actions, int num_actions);

  /// Throws std::invalid_argument unless rows of non-terminal states of `mdp`
  /// are non-negative, sum to 1 and only use available actions.
  void validate_for(const DiscreteMdp& mdp, double tol = 1e-12) const;

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions_) +
           static_cast<std::size_t>(a);
  }

  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> probs_;
};

struct ValueTable {
  std::vector<double> values;

  ValueTable() = default;
  explicit ValueTable(std::size_t n, double fill = 0.0) : values(n, fill) {}
  explicit ValueTable(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const ValueTable&) const = default;
};

/// Action values with an availability mask; entries for unavailable pairs are
/// 0 and excluded from every max.
class QTable {
 public:
  QTable() = default;
  QTable(int num_states, int num_actions);

  int num_states() const noexcept { return num_states_; }
  int num_actions() const noexcept { return num_actions_; }
  double operator()(int s, int a) const { return values_[index(s, a)]; }
  double& operator()(int s, int a) { return values_[index(s, a)]; }
  bool available(int s, int a) const { return available_[index(s, a)] != 0; }
  void set_available(int s, int a, bool on) { available_[index(s, a)] = on ? 1 : 0; }

  /// Max over available actions, 0 if none.
  double max_value(int s) const;
  /// Lowest-index argmax over available actions, -1 if none.
  int argmax(int s) const;
  ValueTable state_values() const;

  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * static_cast<std::size_t>(num_actions_) +
           static_cast<std::size_t>(a);
  }

  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> values_;
  std::vector<char> available_;
};

struct SolverOptions {
  double tol = 1e-10;
  int max_iters = 100000;
  bool record_iterates = false;
};

struct ValueIterationResult {
  ValueTable values;
  QTable q;
  int iterations = 0;
  double residual = 0.0;
  std::vector<ValueTable> iterates;  // only with record_iterates
};

/// Bellman backup of `v` for one state-action pair.
double backup(const DiscreteMdp& mdp, const ValueTable& v, int s, int a);

/// Jacobi value iteration. The returned Q is the final backup and
/// V(s) = max_a Q(s, a) exactly.
ValueIterationResult value_iteration(const DiscreteMdp& mdp, const SolverOptions& opts = {});

ValueTable policy_evaluation(const DiscreteMdp& mdp, const TabularPolicy& policy,
                             const SolverOptions& opts = {});

/// Lowest-index argmax of the one-step lookahead through `mdp` (-1 at
/// terminal states).
std::vector<int> greedy_actions(const DiscreteMdp& mdp, const ValueTable& v);
TabularPolicy greedy_from_value(const DiscreteMdp& mdp, const ValueTable& v);

double value_mse(const ValueTable& a, const ValueTable& b);

// JSON (see README for the schema).
DiscreteMdp mdp_from_json_string(const std::string& text);
DiscreteMdp load_mdp(const std::string& path);
std::string mdp_to_json_string(const DiscreteMdp& mdp);
void save_mdp(const DiscreteMdp& mdp, const std::string& path);

}  // namespace laq
