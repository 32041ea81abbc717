#include "laq/shaping.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "laq/rng.hpp"

namespace laq {

using json = nlohmann::json;

double ShapingConfig::value(const Observation& o) const {
  auto it = values.find(o);
  return it == values.end() ? default_value : it->second;
}

double shaped_reward(const ShapingConfig& cfg, double r, const Observation& s, const Observation& s_next) {
  const double next = cfg.value(s_next);
  return cfg.sparse_scale * r + (cfg.discounted ? cfg.gamma * next : next) - cfg.value(s);
}

ValueMap value_map(const StateIndex& index, const ValueTable& v) {
  if (v.size() != static_cast<std::size_t>(index.num_states())) {
    throw std::invalid_argument("value table does not match the state index");
  }
  ValueMap out;
  for (int s = 0; s < index.num_states(); ++s) out[index.keys[static_cast<std::size_t>(s)]] = v[static_cast<std::size_t>(s)];
  return out;
}

std::string value_map_to_json_string(const ValueMap& values) {
  json entries = json::array();
  for (const auto& [obs, v] : values) entries.push_back({{"obs", obs}, {"v", v}});
  return json{{"values", entries}}.dump();
}

ValueMap value_map_from_json_string(const std::string& text) {
  const json doc = json::parse(text);
  ValueMap out;
  for (const auto& e : doc.at("values")) out[e.at("obs").get<Observation>()] = e.at("v").get<double>();
  return out;
}

void save_value_map(const ValueMap& values, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << value_map_to_json_string(values) << '\n';
}

ValueMap load_value_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return value_map_from_json_string(buf.str());
}

LearningCurve online_q_agent(const GridWorldEnv& env, const ShapingConfig* shaping, const AgentOptions& opts) {
  env.validate();
  if (opts.episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  if (!(opts.epsilon >= 0.0 && opts.epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  const int cells = env.num_cells();
  std::vector<double> q(static_cast<std::size_t>(cells) * kNumMoves, 0.0);
  auto qa = [&](int s, int a) -> double& { return q[static_cast<std::size_t>(s) * kNumMoves + static_cast<std::size_t>(a)]; };
  Rng rng(opts.seed);
  auto greedy = [&](int s) {
    int best = 0;
    int ties = 1;
    for (int a = 1; a < kNumMoves; ++a) {
      if (qa(s, a) > qa(s, best)) {
        best = a;
        ties = 1;
      } else if (opts.random_ties && qa(s, a) == qa(s, best) && uniform01(rng) * ++ties < 1.0) {
        best = a;
      }
    }
    return best;
  };

  LearningCurve curve;
  curve.seed = opts.seed;
  curve.episodes.reserve(static_cast<std::size_t>(opts.episodes));
  for (int e = 0; e < opts.episodes; ++e) {
    EpisodeStats stats;
    Cell c = env.start();
    int prev = -1;
    for (int t = 0; t < env.max_steps; ++t) {
      const int s = env.cell_index(c);
      const bool explore = uniform01(rng) < opts.epsilon;
      const int chosen = explore ? uniform_int(rng, kNumMoves) : greedy(s);
      const bool stick = prev >= 0 && uniform01(rng) < env.stickiness;
      const int executed = stick ? prev : chosen;
      const Cell next = env.move(c, executed);
      const bool done = env.is_goal(next);
      const double r = done ? 1.0 : 0.0;
      const double train_r = shaping ? shaped_reward(*shaping, r, env.observation(c), env.observation(next)) : r;
      const int s_next = env.cell_index(next);
      double boot = 0.0;
      if (!done) {
        for (int a = 0; a < kNumMoves; ++a) boot = a == 0 ? qa(s_next, a) : std::max(boot, qa(s_next, a));
      }
      qa(s, chosen) += opts.alpha * (train_r + opts.gamma * boot - qa(s, chosen));
      stats.ret += r;
      stats.steps = t + 1;
      prev = executed;
      c = next;
      if (done) {
        stats.success = true;
        break;
      }
    }
    curve.episodes.push_back(stats);
  }
  return curve;
}

std::optional<int> episodes_to_threshold(const LearningCurve& curve, double threshold, int window) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must lie in (0, 1]");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const auto& ep = curve.episodes;
  int successes = 0;
  for (std::size_t i = 0; i < ep.size(); ++i) {
    successes += ep[i].success ? 1 : 0;
    if (i >= static_cast<std::size_t>(window)) successes -= ep[i - static_cast<std::size_t>(window)].success ? 1 : 0;
    if (i + 1 >= static_cast<std::size_t>(window) &&
        static_cast<double>(successes) >= threshold * static_cast<double>(window)) {
      return static_cast<int>(i + 1);
    }
  }
  return std::nullopt;
}

DiscreteMdp shaped_mdp(const DiscreteMdp& mdp, const std::vector<double>& potential, double sparse_scale,
                       bool discounted) {
  if (potential.size() != static_cast<std::size_t>(mdp.num_states())) {
    throw std::invalid_argument("potential does not match the MDP");
  }
  DiscreteMdp out = mdp;
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      OutcomeRow row = mdp.outcomes(s, a);
      if (row.empty()) continue;
      for (auto& o : row) {
        const double next = potential[static_cast<std::size_t>(o.next_state)];
        o.reward = sparse_scale * o.reward + (discounted ? mdp.gamma() * next : next) -
                   potential[static_cast<std::size_t>(s)];
      }
      out.set_outcomes(s, a, std::move(row));
    }
  }
  return out;
}

std::vector<std::vector<int>> optimal_action_sets(const DiscreteMdp& mdp, double tol) {
  const auto vi = value_iteration(mdp);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    const double best = vi.q.max_value(s);
    for (int a = 0; a < mdp.num_actions(); ++a) {
      if (vi.q.available(s, a) && vi.q(s, a) >= best - tol) out[static_cast<std::size_t>(s)].push_back(a);
    }
  }
  return out;
}

}  // namespace laq
