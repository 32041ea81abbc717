#include "laq/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace laq {

using json = nlohmann::json;

DiscreteMdp::DiscreteMdp(int num_states, int num_actions, double gamma)
    : num_states_(num_states), num_actions_(num_actions), gamma_(gamma) {
  if (num_states <= 0 || num_actions <= 0) {
    throw MdpFormatError("num_states and num_actions must be positive");
  }
  rows_.resize(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions));
  terminal_.assign(static_cast<std::size_t>(num_states), 0);
  initial_.assign(static_cast<std::size_t>(num_states), 0.0);
  initial_[0] = 1.0;
}

void DiscreteMdp::set_outcomes(int s, int a, OutcomeRow row) { rows_[index(s, a)] = std::move(row); }

void DiscreteMdp::add_outcome(int s, int a, Outcome o) { rows_[index(s, a)].push_back(o); }

void DiscreteMdp::set_terminal(int s, bool terminal) {
  terminal_[static_cast<std::size_t>(s)] = terminal ? 1 : 0;
}

std::vector<int> DiscreteMdp::terminal_states() const {
  std::vector<int> out;
  for (int s = 0; s < num_states_; ++s) {
    if (is_terminal(s)) out.push_back(s);
  }
  return out;
}

void DiscreteMdp::set_initial_dist(std::vector<double> dist) { initial_ = std::move(dist); }

void DiscreteMdp::validate(ActionCoverage coverage) const {
  auto fail = [](const std::string& msg) { throw MdpFormatError(msg); };
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) fail("gamma: must lie in (0, 1)");
  if (initial_.size() != static_cast<std::size_t>(num_states_)) {
    fail("initial_dist: length must equal num_states");
  }
  double mass = 0.0;
  for (double p : initial_) {
    if (!(p >= 0.0) || !std::isfinite(p)) fail("initial_dist: entries must be non-negative");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-12) fail("initial_dist: must sum to 1");

  for (int s = 0; s < num_states_; ++s) {
    int available = 0;
    for (int a = 0; a < num_actions_; ++a) {
      const auto& row = outcomes(s, a);
      const std::string where = "outcomes[s=" + std::to_string(s) + ",a=" + std::to_string(a) + "]";
      if (is_terminal(s)) {
        if (!row.empty()) fail(where + ": terminal state must have no outcomes");
        continue;
      }
      if (row.empty()) {
        if (coverage == ActionCoverage::Full) fail(where + ": missing distribution");
        continue;
      }
      ++available;
      double total = 0.0;
      for (const auto& o : row) {
        if (o.next_state < 0 || o.next_state >= num_states_) {
          fail(where + ": s_next " + std::to_string(o.next_state) + " out of range");
        }
        if (!(o.prob > 0.0 && o.prob <= 1.0)) fail(where + ": p must lie in (0, 1]");
        if (!std::isfinite(o.reward)) fail(where + ": r must be finite");
        total += o.prob;
      }
      if (std::abs(total - 1.0) > 1e-12) fail(where + ": probabilities must sum to 1");
    }
    if (!is_terminal(s) && available == 0) {
      fail("outcomes[s=" + std::to_string(s) + "]: non-terminal state has no available action");
    }
  }
}

OutcomeRow canonical_row(const OutcomeRow& row) {
  OutcomeRow sorted = row;
  std::sort(sorted.begin(), sorted.end(), [](const Outcome& x, const Outcome& y) {
    if (x.next_state != y.next_state) return x.next_state < y.next_state;
    return x.reward < y.reward;
  });
  OutcomeRow merged;
  for (const auto& o : sorted) {
    if (!merged.empty() && merged.back().next_state == o.next_state &&
        merged.back().reward == o.reward) {
      merged.back().prob += o.prob;
    } else {
      merged.push_back(o);
    }
  }
  return merged;
}

bool rows_equal(const OutcomeRow& a, const OutcomeRow& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].next_state != b[i].next_state || a[i].reward != b[i].reward) return false;
    if (std::abs(a[i].prob - b[i].prob) > tol) return false;
  }
  return true;
}

TabularPolicy::TabularPolicy(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      probs_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions), 0.0) {}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
  TabularPolicy p(num_states, num_actions);
  std::fill(p.probs_.begin(), p.probs_.end(), 1.0 / num_actions);
  return p;
}

TabularPolicy TabularPolicy::deterministic(const std::vector<int>& actions, int num_actions) {
  TabularPolicy p(static_cast<int>(actions.size()), num_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    // Terminal states (action -1) still get a valid row.
    int a = actions[s] < 0 ? 0 : actions[s];
    p(static_cast<int>(s), a) = 1.0;
  }
  return p;
}

void TabularPolicy::validate_for(const DiscreteMdp& mdp, double tol) const {
  if (num_states_ != mdp.num_states() || num_actions_ != mdp.num_actions()) {
    throw std::invalid_argument("policy shape does not match MDP");
  }
  for (int s = 0; s < num_states_; ++s) {
    if (mdp.is_terminal(s)) continue;
    double total = 0.0;
    for (int a = 0; a < num_actions_; ++a) {
      double p = (*this)(s, a);
      if (!(p >= 0.0)) throw std::invalid_argument("policy has a negative entry");
      if (p > 0.0 && !mdp.has_action(s, a)) {
        throw std::invalid_argument("policy puts mass on an unavailable action at state " +
                                    std::to_string(s));
      }
      total += p;
    }
    if (std::abs(total - 1.0) > tol) {
      throw std::invalid_argument("policy row " + std::to_string(s) + " does not sum to 1");
    }
  }
}

QTable::QTable(int num_states, int num_actions)
    : num_states_(num_states),
      num_actions_(num_actions),
      values_(static_cast<std::size_t>(num_states) * static_cast<std::size_t>(num_actions), 0.0),
      available_(values_.size(), 1) {}

double QTable::max_value(int s) const {
  int a = argmax(s);
  return a < 0 ? 0.0 : (*this)(s, a);
}

int QTable::argmax(int s) const {
  int best = -1;
  for (int a = 0; a < num_actions_; ++a) {
    if (!available(s, a)) continue;
    if (best < 0 || (*this)(s, a) > (*this)(s, best)) best = a;
  }
  return best;
}

ValueTable QTable::state_values() const {
  ValueTable v(static_cast<std::size_t>(num_states_));
  for (int s = 0; s < num_states_; ++s) v[static_cast<std::size_t>(s)] = max_value(s);
  return v;
}

double backup(const DiscreteMdp& mdp, const ValueTable& v, int s, int a) {
  double q = 0.0;
  for (const auto& o : mdp.outcomes(s, a)) {
    q += o.prob * (o.reward + mdp.gamma() * v[static_cast<std::size_t>(o.next_state)]);
  }
  return q;
}

ValueIterationResult value_iteration(const DiscreteMdp& mdp, const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const int n = mdp.num_states();
  const int m = mdp.num_actions();
  ValueIterationResult result;
  result.q = QTable(n, m);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m; ++a) result.q.set_available(s, a, mdp.has_action(s, a));
  }
  ValueTable v(static_cast<std::size_t>(n));
  if (opts.record_iterates) result.iterates.push_back(v);

  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iters; ++it) {
    ValueTable next(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      if (mdp.is_terminal(s)) continue;
      for (int a = 0; a < m; ++a) {
        if (mdp.has_action(s, a)) result.q(s, a) = backup(mdp, v, s, a);
      }
      next[static_cast<std::size_t>(s)] = result.q.max_value(s);
    }
    residual = 0.0;
    for (int s = 0; s < n; ++s) {
      residual = std::max(residual, std::abs(next[static_cast<std::size_t>(s)] -
                                             v[static_cast<std::size_t>(s)]));
    }
    v = std::move(next);
    if (opts.record_iterates) result.iterates.push_back(v);
    if (residual < opts.tol) {
      result.values = std::move(v);
      result.iterations = it;
      result.residual = residual;
      return result;
    }
  }
  std::ostringstream msg;
  msg << "value iteration did not converge in " << opts.max_iters << " iterations (residual "
      << residual << ")";
  throw ConvergenceError(msg.str(), residual, opts.max_iters);
}

ValueTable policy_evaluation(const DiscreteMdp& mdp, const TabularPolicy& policy,
                             const SolverOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("tol must be positive");
  policy.validate_for(mdp);
  const int n = mdp.num_states();
  const int m = mdp.num_actions();
  ValueTable v(static_cast<std::size_t>(n));
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opts.max_iters; ++it) {
    ValueTable next(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      if (mdp.is_terminal(s)) continue;
      double total = 0.0;
      for (int a = 0; a < m; ++a) {
        double p = policy(s, a);
        if (p > 0.0) total += p * backup(mdp, v, s, a);
      }
      next[static_cast<std::size_t>(s)] = total;
    }
    residual = 0.0;
    for (int s = 0; s < n; ++s) {
      residual = std::max(residual, std::abs(next[static_cast<std::size_t>(s)] -
                                             v[static_cast<std::size_t>(s)]));
    }
    v = std::move(next);
    if (residual < opts.tol) return v;
  }
  std::ostringstream msg;
  msg << "policy evaluation did not converge in " << opts.max_iters << " iterations (residual "
      << residual << ")";
  throw ConvergenceError(msg.str(), residual, opts.max_iters);
}

std::vector<int> greedy_actions(const DiscreteMdp& mdp, const ValueTable& v) {
  if (v.size() != static_cast<std::size_t>(mdp.num_states())) {
    throw std::invalid_argument("value table length does not match MDP");
  }
  std::vector<int> actions(static_cast<std::size_t>(mdp.num_states()), -1);
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    int best = -1;
    double best_q = 0.0;
    for (int a = 0; a < mdp.num_actions(); ++a) {
      if (!mdp.has_action(s, a)) continue;
      double q = backup(mdp, v, s, a);
      if (best < 0 || q > best_q) {
        best = a;
        best_q = q;
      }
    }
    actions[static_cast<std::size_t>(s)] = best;
  }
  return actions;
}

TabularPolicy greedy_from_value(const DiscreteMdp& mdp, const ValueTable& v) {
  return TabularPolicy::deterministic(greedy_actions(mdp, v), mdp.num_actions());
}

double value_mse(const ValueTable& a, const ValueTable& b) {
  if (a.size() != b.size()) throw std::invalid_argument("value_mse: length mismatch");
  if (a.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    total += d * d;
  }
  return total / static_cast<double>(a.size());
}

namespace {

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

template <typename T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw MdpFormatError(where + "." + key + ": missing field");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw MdpFormatError(where + "." + key + ": wrong type");
  }
}

}  // namespace

DiscreteMdp mdp_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MdpFormatError("line " + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
  const std::string root = "$";
  const int n = field<int>(doc, "num_states", root);
  const int m = field<int>(doc, "num_actions", root);
  const double gamma = field<double>(doc, "gamma", root);
  if (n <= 0) throw MdpFormatError("$.num_states: must be positive");
  if (m <= 0) throw MdpFormatError("$.num_actions: must be positive");
  DiscreteMdp mdp(n, m, gamma);

  for (int s : field<std::vector<int>>(doc, "terminal_states", root)) {
    if (s < 0 || s >= n) throw MdpFormatError("$.terminal_states: index " + std::to_string(s) + " out of range");
    mdp.set_terminal(s);
  }
  mdp.set_initial_dist(field<std::vector<double>>(doc, "initial_dist", root));

  const json& outcomes = doc.contains("outcomes") ? doc.at("outcomes") : json();
  if (!outcomes.is_array()) throw MdpFormatError("$.outcomes: must be an array");
  std::vector<char> seen(static_cast<std::size_t>(n) * static_cast<std::size_t>(m), 0);
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const std::string where = "$.outcomes[" + std::to_string(i) + "]";
    const json& entry = outcomes[i];
    const int s = field<int>(entry, "s", where);
    const int a = field<int>(entry, "a", where);
    if (s < 0 || s >= n) throw MdpFormatError(where + ".s: out of range");
    if (a < 0 || a >= m) throw MdpFormatError(where + ".a: out of range");
    auto& flag = seen[static_cast<std::size_t>(s) * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)];
    if (flag) throw MdpFormatError(where + ": duplicate (s, a) entry");
    flag = 1;
    if (!entry.contains("rows") || !entry.at("rows").is_array()) {
      throw MdpFormatError(where + ".rows: must be an array");
    }
    OutcomeRow row;
    const json& rows = entry.at("rows");
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const std::string rw = where + ".rows[" + std::to_string(j) + "]";
      row.push_back({field<int>(rows[j], "s_next", rw), field<double>(rows[j], "r", rw),
                     field<double>(rows[j], "p", rw)});
    }
    mdp.set_outcomes(s, a, std::move(row));
  }
  mdp.validate(ActionCoverage::Full);
  return mdp;
}

DiscreteMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MdpFormatError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return mdp_from_json_string(buf.str());
  } catch (const MdpFormatError& e) {
    throw MdpFormatError(path + ": " + e.what());
  }
}

std::string mdp_to_json_string(const DiscreteMdp& mdp) {
  json doc;
  doc["num_states"] = mdp.num_states();
  doc["num_actions"] = mdp.num_actions();
  doc["gamma"] = mdp.gamma();
  doc["terminal_states"] = mdp.terminal_states();
  doc["initial_dist"] = mdp.initial_dist();
  json outcomes = json::array();
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      if (!mdp.has_action(s, a)) continue;
      json rows = json::array();
      for (const auto& o : mdp.outcomes(s, a)) {
        rows.push_back({{"s_next", o.next_state}, {"r", o.reward}, {"p", o.prob}});
      }
      outcomes.push_back({{"s", s}, {"a", a}, {"rows", rows}});
    }
  }
  doc["outcomes"] = outcomes;
  return doc.dump(1);
}

void save_mdp(const DiscreteMdp& mdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << mdp_to_json_string(mdp) << '\n';
}

}  // namespace laq
