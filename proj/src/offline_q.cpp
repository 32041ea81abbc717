#include "laq/offline_q.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "laq/rng.hpp"

namespace laq {

EmpiricalMdp build_empirical_mdp(const LabeledDataset& lds, double gamma) {
  lds.validate();
  if (lds.size() == 0) throw std::invalid_argument("empirical MDP needs a non-empty dataset");
  EmpiricalMdp emp;
  emp.index = StateIndex::build(*lds.source);
  const int n = emp.index.num_states();
  const int m = lds.num_labels;
  emp.mdp = DiscreteMdp(n, m, gamma);
  emp.visits.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(m), 0);

  std::vector<std::map<std::pair<int, double>, std::size_t>> counts(emp.visits.size());
  for (std::size_t i = 0; i < lds.size(); ++i) {
    const auto cell = static_cast<std::size_t>(emp.index.obs_state[i]) * static_cast<std::size_t>(m) +
                      static_cast<std::size_t>(lds.labels[i]);
    ++emp.visits[cell];
    ++counts[cell][{emp.index.next_state[i], lds.record(i).reward}];
  }
  for (int s = 0; s < n; ++s) {
    if (!emp.index.has_outgoing[static_cast<std::size_t>(s)]) {
      emp.mdp.set_terminal(s);
      continue;
    }
    for (int a = 0; a < m; ++a) {
      const auto cell = static_cast<std::size_t>(s) * static_cast<std::size_t>(m) + static_cast<std::size_t>(a);
      if (emp.visits[cell] == 0) continue;
      OutcomeRow row;
      const auto total = static_cast<double>(emp.visits[cell]);
      for (const auto& [key, c] : counts[cell]) row.push_back({key.first, key.second, static_cast<double>(c) / total});
      emp.mdp.set_outcomes(s, a, std::move(row));
    }
  }
  std::vector<double> init(static_cast<std::size_t>(n), 0.0);
  init[static_cast<std::size_t>(emp.index.obs_state.front())] = 1.0;
  emp.mdp.set_initial_dist(std::move(init));
  emp.mdp.validate(ActionCoverage::Partial);
  return emp;
}

TabularPolicy empirical_policy(const EmpiricalMdp& emp) {
  const int n = emp.mdp.num_states();
  const int m = emp.mdp.num_actions();
  TabularPolicy pi(n, m);
  for (int s = 0; s < n; ++s) {
    std::size_t total = 0;
    for (int a = 0; a < m; ++a) total += emp.visit_count(s, a);
    if (total == 0) continue;
    for (int a = 0; a < m; ++a) {
      pi(s, a) = static_cast<double>(emp.visit_count(s, a)) / static_cast<double>(total);
    }
  }
  return pi;
}

CeResult certainty_equivalence_q(const LabeledDataset& lds, double gamma, double tol) {
  CeResult out;
  out.empirical = build_empirical_mdp(lds, gamma);
  SolverOptions opts;
  opts.tol = tol;
  auto vi = value_iteration(out.empirical.mdp, opts);
  out.q = std::move(vi.q);
  out.values = std::move(vi.values);
  return out;
}

std::vector<double> TrainCurve::spearman_series() const {
  std::vector<double> out;
  for (const auto& c : checkpoints) {
    if (c.spearman) out.push_back(*c.spearman);
  }
  return out;
}

namespace {

double bellman_residual(const EmpiricalMdp& emp, const QTable& q) {
  const ValueTable v = q.state_values();
  double worst = 0.0;
  for (int s = 0; s < emp.mdp.num_states(); ++s) {
    for (int a = 0; a < emp.mdp.num_actions(); ++a) {
      if (!q.available(s, a)) continue;
      worst = std::max(worst, std::abs(backup(emp.mdp, v, s, a) - q(s, a)));
    }
  }
  return worst;
}

}  // namespace

SampledQResult sampled_q_learning(const LabeledDataset& lds, double gamma, const SampledQOptions& opts) {
  if (opts.sweeps < 1) throw std::invalid_argument("sweeps must be >= 1");
  if (opts.checkpoint_every < 1) throw std::invalid_argument("checkpoint_every must be >= 1");
  if (opts.alpha.kind == AlphaSchedule::Kind::Constant && !(opts.alpha.value > 0.0 && opts.alpha.value <= 1.0)) {
    throw std::invalid_argument("constant alpha must lie in (0, 1]");
  }
  SampledQResult out;
  out.empirical = build_empirical_mdp(lds, gamma);
  const auto& emp = out.empirical;
  const int n = emp.mdp.num_states();
  const int m = emp.mdp.num_actions();
  out.q = QTable(n, m);
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m; ++a) out.q.set_available(s, a, emp.mdp.has_action(s, a));
  }
  if (opts.reference && opts.reference->size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("reference values do not match the dataset's states");
  }

  QTable& q = out.q;
  const std::size_t records = lds.size();
  std::vector<std::size_t> order(records);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Running max over the labels observed at each state (all Q start at 0).
  std::vector<double> state_max(static_cast<std::size_t>(n), 0.0);
  std::vector<double> target_max;
  std::vector<std::size_t> updates(static_cast<std::size_t>(n) * static_cast<std::size_t>(m), 0);

  for (int sweep = 1; sweep <= opts.sweeps; ++sweep) {
    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(sweep)));
    for (std::size_t i = records; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    if (opts.alpha.kind == AlphaSchedule::Kind::SweepVisitDecay) std::fill(updates.begin(), updates.end(), 0);
    if (opts.frozen_targets) target_max = state_max;
    const std::vector<double>& boot_from = opts.frozen_targets ? target_max : state_max;

    for (std::size_t idx : order) {
      const int s = emp.index.obs_state[idx];
      const int a = lds.labels[idx];
      const int next = emp.index.next_state[idx];
      const double boot = emp.mdp.is_terminal(next) ? 0.0 : boot_from[static_cast<std::size_t>(next)];
      const double target = lds.record(idx).reward + gamma * boot;
      auto& count = updates[static_cast<std::size_t>(s) * static_cast<std::size_t>(m) + static_cast<std::size_t>(a)];
      const double alpha = opts.alpha.kind == AlphaSchedule::Kind::Constant
                               ? opts.alpha.value
                               : 1.0 / (1.0 + static_cast<double>(count));
      ++count;
      const double old = q(s, a);
      q(s, a) += alpha * (target - old);
      auto& best = state_max[static_cast<std::size_t>(s)];
      if (q(s, a) >= best) {
        best = q(s, a);
      } else if (old == best) {
        best = q.max_value(s);
      }
    }

    if (sweep % opts.checkpoint_every == 0 || sweep == opts.sweeps) {
      Checkpoint c;
      c.sweep = sweep;
      c.values = q.state_values();
      c.residual = bellman_residual(emp, q);
      if (opts.reference) c.spearman = spearman_on_states(c.values, *opts.reference, emp.index);
      out.curve.checkpoints.push_back(std::move(c));
    }
  }
  out.values = q.state_values();
  return out;
}

double q_sup_diff(const QTable& a, const QTable& b) {
  if (a.num_states() != b.num_states() || a.num_actions() != b.num_actions()) {
    throw std::invalid_argument("Q tables differ in shape");
  }
  double worst = 0.0;
  for (int s = 0; s < a.num_states(); ++s) {
    for (int x = 0; x < a.num_actions(); ++x) {
      if (a.available(s, x)) worst = std::max(worst, std::abs(a(s, x) - b(s, x)));
    }
  }
  return worst;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman inputs differ in length");
  if (x.size() < 2) throw std::invalid_argument("spearman needs at least 2 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman_on_states(const ValueTable& v, const ValueTable& ref, const StateIndex& index) {
  if (v.size() != static_cast<std::size_t>(index.num_states()) || ref.size() != v.size()) {
    throw std::invalid_argument("value tables do not match the state index");
  }
  std::vector<double> a;
  std::vector<double> b;
  for (int s = 0; s < index.num_states(); ++s) {
    if (!index.has_outgoing[static_cast<std::size_t>(s)]) continue;
    a.push_back(v[static_cast<std::size_t>(s)]);
    b.push_back(ref[static_cast<std::size_t>(s)]);
  }
  return spearman(a, b);
}

double behavior_correctness(const ValueTable& v, const DiscreteMdp& reference, double tol) {
  if (v.size() != static_cast<std::size_t>(reference.num_states())) {
    throw std::invalid_argument("value table does not match the reference MDP");
  }
  const auto star = value_iteration(reference);
  const auto greedy = greedy_actions(reference, v);
  int states = 0;
  int correct = 0;
  for (int s = 0; s < reference.num_states(); ++s) {
    if (reference.is_terminal(s)) continue;
    ++states;
    const int a = greedy[static_cast<std::size_t>(s)];
    if (a >= 0 && star.q.available(s, a) && star.q(s, a) >= star.q.max_value(s) - tol) ++correct;
  }
  return states == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(states);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty series");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double model_selection_p95(const TrainCurve& curve) {
  const auto series = curve.spearman_series();
  if (series.empty()) throw std::invalid_argument("training curve has no Spearman entries");
  return percentile(series, 0.95);
}

}  // namespace laq
