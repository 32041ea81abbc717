#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "laq/dataset.hpp"
#include "laq/gridworld.hpp"
#include "laq/mdp.hpp"

namespace laq {

using ValueMap = std::map<Observation, double>;

/// r' = sparse_scale * r + V(s') - V(s). With `discounted` the potential
/// term is gamma * V(s') - V(s) instead.
struct ShapingConfig {
  double sparse_scale = 5.0;
  ValueMap values;
  double default_value = 0.0;  // V of observations missing from `values`
  bool discounted = false;
  double gamma = 0.95;

  double value(const Observation& o) const;
};

double shaped_reward(const ShapingConfig& cfg, double r, const Observation& s, const Observation& s_next);

/// Keys a value table by the observations of `index`.
ValueMap value_map(const StateIndex& index, const ValueTable& v);
std::string value_map_to_json_string(const ValueMap& values);
ValueMap value_map_from_json_string(const std::string& text);
void save_value_map(const ValueMap& values, const std::string& path);
ValueMap load_value_map(const std::string& path);

struct AgentOptions {
  int episodes = 2000;
  double epsilon = 0.1;
  double alpha = 0.1;
  double gamma = 0.95;
  std::uint64_t seed = 0;
  bool random_ties = false;  // break greedy ties uniformly instead of toward the lowest action
};

struct EpisodeStats {
  double ret = 0.0;  // unshaped, undiscounted sparse return
  bool success = false;
  int steps = 0;
};

struct LearningCurve {
  std::uint64_t seed = 0;
  std::vector<EpisodeStats> episodes;
};

/// Epsilon-greedy tabular Q-learning on the live grid (greedy ties toward the
/// lowest action unless opts.random_ties). Updates use the shaped reward when
/// `shaping` is given and the raw sparse reward otherwise.
LearningCurve online_q_agent(const GridWorldEnv& env, const ShapingConfig* shaping, const AgentOptions& opts);

/// First episode count e >= window at which the success rate over episodes
/// (e - window, e] reaches `threshold`.
std::optional<int> episodes_to_threshold(const LearningCurve& curve, double threshold, int window = 100);

/// Copy of `mdp` with every outcome reward replaced by the shaped reward,
/// using `potential` per state (terminal states keep their entry).
DiscreteMdp shaped_mdp(const DiscreteMdp& mdp, const std::vector<double>& potential, double sparse_scale,
                       bool discounted);

/// Per non-terminal state, the actions within `tol` of the optimal Q.
std::vector<std::vector<int>> optimal_action_sets(const DiscreteMdp& mdp, double tol = 1e-9);

}  // namespace laq
