#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "laq/gridworld.hpp"
#include "laq/refinement.hpp"
#include "laq/shaping.hpp"

namespace laq {

struct ExperimentConfig {
  std::string name = "fig1";
  std::uint64_t seed = 0;
  double gamma = 0.95;
  int episodes = 20000;
  double stickiness = 0.0;
  std::vector<std::string> methods;  // empty: every method of the experiment
  std::vector<double> p_grid = {0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
  std::vector<double> sigma_grid = {0.0, 0.25, 0.5, 0.75, 0.95};
  int num_seeds = 3;
  int refine_k = 4;
  double impurity = 0.5;
  int num_latent = 8;

  bool sampled = true;  // also run sampled Q-learning in the table experiment
  int sweeps = 200;
  int checkpoint_every = 5;

  int rl_episodes = 2000;
  int rl_seeds = 5;
  double sparse_scale = 5.0;
  double epsilon = 0.1;
  double alpha = 0.1;
  double threshold = 0.9;
  int window = 100;
  bool random_ties = false;

  int fuzz_trials = 100;
  int fuzz_controls = 20;

  std::string out_dir = ".";

  void validate() const;
  bool wants(const std::string& method) const;
  std::string to_json_string() const;
  /// Fields missing from the JSON keep their defaults; unknown keys throw.
  static ExperimentConfig from_json_string(const std::string& text, ExperimentConfig base);
  static ExperimentConfig from_json_string(const std::string& text);
};

struct ResultRow {
  std::string experiment;
  std::string method;
  std::string param;
  std::string metric;
  double value = 0.0;
  std::uint64_t seed = 0;
};

/// Append-only result collector with a fixed CSV schema:
/// experiment,method,param,metric,value,seed
class ResultTable {
 public:
  void add(std::string experiment, std::string method, std::string param, std::string metric, double value,
           std::uint64_t seed);
  void append(const ResultTable& other);

  const std::vector<ResultRow>& rows() const noexcept { return rows_; }
  bool empty() const noexcept { return rows_.empty(); }

  /// First matching row; an empty `param` matches any parameter.
  std::optional<double> find(const std::string& method, const std::string& metric, const std::string& param = "") const;
  std::vector<const ResultRow*> select(const std::string& experiment, const std::string& metric) const;

  std::string to_csv() const;
  void write_csv(const std::string& path) const;
  static ResultTable from_csv(const std::string& text);
  static ResultTable read_csv(const std::string& path);

 private:
  std::vector<ResultRow> rows_;
};

/// "name=value" with the shortest round-trip formatting of value.
std::string param(const std::string& name, double value);
/// Value of a "name=value" parameter string; nullopt when it does not match.
std::optional<double> param_value(const std::string& param, const std::string& name);
std::string format_double(double v);

ResultTable run_fig1(const ExperimentConfig& cfg);
ResultTable run_table_rows(const ExperimentConfig& cfg);
ResultTable run_impurity_sweep(const ExperimentConfig& cfg);
ResultTable run_stochasticity(const ExperimentConfig& cfg);

/// Rows for both values, dataset equality and an overall "ok" flag.
ResultTable run_counterexample();

struct TheoremCheckResult {
  ResultTable table;
  FuzzReport report;
};
TheoremCheckResult run_theorem_check(const ExperimentConfig& cfg);

struct DensifyResult {
  ResultTable table;
  std::vector<LearningCurve> sparse;
  std::vector<LearningCurve> dense;
};

/// Sparse-only versus densified agents over cfg.rl_seeds seeds. A run that
/// never reaches the success threshold counts as rl_episodes + 1 episodes.
DensifyResult compare_densified(const GridWorldEnv& env, const ValueMap& values, const ExperimentConfig& cfg);

/// Mines latent actions on a generated dataset, solves it by certainty
/// equivalence and compares the densified agent against sparse-only.
DensifyResult run_densify(const ExperimentConfig& cfg);

/// Dispatches on cfg.name: fig1, table, impurity, stochasticity,
/// counterexample, theorem, densify. Throws std::invalid_argument otherwise.
ResultTable run_experiment(const ExperimentConfig& cfg);
const std::vector<std::string>& experiment_names();

/// Columns: seed,episode,return,success,steps.
std::string curves_to_csv(const std::vector<LearningCurve>& curves);

}  // namespace laq
