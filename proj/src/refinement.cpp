#include "laq/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "laq/rng.hpp"

namespace laq {

namespace {

void require_same_space(const DiscreteMdp& m, const DiscreteMdp& m_hat) {
  if (m.num_states() != m_hat.num_states()) {
    throw std::invalid_argument("state-space mismatch: " + std::to_string(m.num_states()) +
                                " vs " + std::to_string(m_hat.num_states()) + " states");
  }
  if (m.gamma() != m_hat.gamma()) throw std::invalid_argument("discount mismatch");
  for (int s = 0; s < m.num_states(); ++s) {
    if (m.is_terminal(s) != m_hat.is_terminal(s)) {
      throw std::invalid_argument("terminal sets differ at state " + std::to_string(s));
    }
  }
}

std::vector<OutcomeRow> canonical_rows(const DiscreteMdp& mdp, int s) {
  std::vector<OutcomeRow> rows(static_cast<std::size_t>(mdp.num_actions()));
  for (int a = 0; a < mdp.num_actions(); ++a) {
    if (mdp.has_action(s, a)) rows[static_cast<std::size_t>(a)] = canonical_row(mdp.outcomes(s, a));
  }
  return rows;
}

// Actions of m_hat at state s whose distribution equals `dist`.
std::vector<int> matching_actions(const std::vector<OutcomeRow>& rows, const OutcomeRow& dist,
                                  double tol) {
  std::vector<int> out;
  for (std::size_t a = 0; a < rows.size(); ++a) {
    if (!rows[a].empty() && rows_equal(rows[a], dist, tol)) out.push_back(static_cast<int>(a));
  }
  return out;
}

std::vector<double> dirichlet_ones(Rng& rng, int n) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(static_cast<std::size_t>(n));
  double total = 0.0;
  for (auto& x : w) {
    x = std::max(expo(rng), 1e-12);
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

}  // namespace

FundamentalPartition fundamental_partition(const DiscreteMdp& mdp, double tol) {
  FundamentalPartition part;
  part.states.resize(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    auto& sp = part.states[static_cast<std::size_t>(s)];
    sp.class_of.assign(static_cast<std::size_t>(mdp.num_actions()), -1);
    const auto rows = canonical_rows(mdp, s);
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const auto& row = rows[static_cast<std::size_t>(a)];
      if (row.empty()) continue;
      int found = -1;
      for (std::size_t b = 0; b < sp.distributions.size(); ++b) {
        if (rows_equal(sp.distributions[b], row, tol)) {
          found = static_cast<int>(b);
          break;
        }
      }
      if (found < 0) {
        found = static_cast<int>(sp.classes.size());
        sp.classes.emplace_back();
        sp.distributions.push_back(row);
      }
      sp.classes[static_cast<std::size_t>(found)].push_back(a);
      sp.class_of[static_cast<std::size_t>(a)] = found;
    }
  }
  return part;
}

RefinementVerdict is_refinement(const DiscreteMdp& m, const DiscreteMdp& m_hat, double tol) {
  require_same_space(m, m_hat);
  RefinementVerdict verdict;
  for (int s = 0; s < m.num_states(); ++s) {
    const auto rows = canonical_rows(m, s);
    const auto rows_hat = canonical_rows(m_hat, s);
    for (std::size_t ah = 0; ah < rows_hat.size(); ++ah) {
      if (rows_hat[ah].empty()) continue;
      if (matching_actions(rows, rows_hat[ah], tol).empty()) {
        verdict.missing_forward.emplace_back(s, static_cast<int>(ah));
      }
    }
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (rows[a].empty()) continue;
      if (matching_actions(rows_hat, rows[a], tol).empty()) {
        verdict.missing_backward.emplace_back(s, static_cast<int>(a));
      }
    }
  }
  verdict.is_refinement = verdict.missing_forward.empty() && verdict.missing_backward.empty();
  return verdict;
}

DiscreteMdp make_refinement(const DiscreteMdp& mdp, int k, RefinementMode mode, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("make_refinement: k must be >= 1");
  const int m = mdp.num_actions();
  const int mk = m * k;
  DiscreteMdp out(mdp.num_states(), mk, mdp.gamma());
  for (int s : mdp.terminal_states()) out.set_terminal(s);
  out.set_initial_dist(mdp.initial_dist());

  std::vector<int> base(static_cast<std::size_t>(mk));
  for (int j = 0; j < mk; ++j) base[static_cast<std::size_t>(j)] = j % m;

  Rng global_rng(seed);
  std::vector<int> global_map = base;
  std::shuffle(global_map.begin(), global_map.end(), global_rng);

  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.is_terminal(s)) continue;
    std::vector<int> map = global_map;
    if (mode == RefinementMode::StateShuffled) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
      map = base;
      std::shuffle(map.begin(), map.end(), rng);
    }
    for (int j = 0; j < mk; ++j) {
      out.set_outcomes(s, j, mdp.outcomes(s, map[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

TabularPolicy lift_policy(const TabularPolicy& policy_hat, const DiscreteMdp& m,
                          const DiscreteMdp& m_hat, double tol) {
  const auto verdict = is_refinement(m, m_hat, tol);
  if (!verdict.is_refinement) {
    throw std::invalid_argument("lift_policy: m_hat is not a refinement of m");
  }
  policy_hat.validate_for(m_hat);
  const auto part = fundamental_partition(m, tol);
  TabularPolicy lifted(m.num_states(), m.num_actions());
  for (int s = 0; s < m.num_states(); ++s) {
    if (m.is_terminal(s)) {
      lifted(s, 0) = 1.0;
      continue;
    }
    const auto rows_hat = canonical_rows(m_hat, s);
    const auto& sp = part.states[static_cast<std::size_t>(s)];
    for (std::size_t b = 0; b < sp.classes.size(); ++b) {
      double mass = 0.0;
      for (int ah : matching_actions(rows_hat, sp.distributions[b], tol)) mass += policy_hat(s, ah);
      const double share = mass / static_cast<double>(sp.classes[b].size());
      for (int a : sp.classes[b]) lifted(s, a) = share;
    }
  }
  return lifted;
}

TabularPolicy push_policy(const TabularPolicy& policy, const DiscreteMdp& m,
                          const DiscreteMdp& m_hat, double tol) {
  const auto verdict = is_refinement(m, m_hat, tol);
  if (!verdict.is_refinement) {
    throw std::invalid_argument("push_policy: m_hat is not a refinement of m");
  }
  policy.validate_for(m);
  const auto part = fundamental_partition(m, tol);
  TabularPolicy pushed(m_hat.num_states(), m_hat.num_actions());
  for (int s = 0; s < m.num_states(); ++s) {
    if (m.is_terminal(s)) {
      pushed(s, 0) = 1.0;
      continue;
    }
    const auto rows_hat = canonical_rows(m_hat, s);
    const auto& sp = part.states[static_cast<std::size_t>(s)];
    for (std::size_t b = 0; b < sp.classes.size(); ++b) {
      double mass = 0.0;
      for (int a : sp.classes[b]) mass += policy(s, a);
      const auto targets = matching_actions(rows_hat, sp.distributions[b], tol);
      for (int ah : targets) pushed(s, ah) = mass / static_cast<double>(targets.size());
    }
  }
  return pushed;
}

std::pair<DiscreteMdp, DiscreteMdp> counterexample_pair() {
  // States: 0 = s1, 1 = s2, 2 = st (terminal, reward 1 on entry).
  // Actions: 0 = a1, 1 = a2.
  DiscreteMdp m1(3, 2, 0.9);
  m1.set_terminal(2);
  m1.set_initial_dist({0.5, 0.5, 0.0});
  m1.set_outcomes(0, 0, {{1, 0.0, 1.0}});
  m1.set_outcomes(1, 0, {{2, 1.0, 1.0}});
  m1.set_outcomes(0, 1, {{2, 1.0, 1.0}});
  m1.set_outcomes(1, 1, {{0, 0.0, 1.0}});

  DiscreteMdp m2 = m1;
  m2.set_outcomes(0, 1, {{1, 0.0, 0.9}, {2, 1.0, 0.1}});
  return {m1, m2};
}

std::set<TransitionTriple> complete_dataset(const DiscreteMdp& mdp) {
  std::set<TransitionTriple> triples;
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      for (const auto& o : mdp.outcomes(s, a)) {
        if (o.prob > 0.0) triples.emplace(s, o.next_state, o.reward);
      }
    }
  }
  return triples;
}

DiscreteMdp random_mdp(const RandomMdpCaps& caps, std::uint64_t seed) {
  Rng rng(seed);
  const int n = 2 + uniform_int(rng, std::max(1, caps.max_states - 1));
  const int m = 1 + uniform_int(rng, std::max(1, caps.max_actions));
  DiscreteMdp mdp(n, m, caps.gamma);
  const int terminal = n - 1;
  mdp.set_terminal(terminal);
  std::vector<double> init(static_cast<std::size_t>(n), 1.0 / (n - 1));
  init[static_cast<std::size_t>(terminal)] = 0.0;
  mdp.set_initial_dist(init);

  std::vector<int> states(static_cast<std::size_t>(n));
  std::iota(states.begin(), states.end(), 0);
  for (int s = 0; s < terminal; ++s) {
    for (int a = 0; a < m; ++a) {
      const int support = 1 + uniform_int(rng, std::min(caps.max_support, n));
      std::shuffle(states.begin(), states.end(), rng);
      const auto probs = dirichlet_ones(rng, support);
      OutcomeRow row;
      for (int i = 0; i < support; ++i) {
        row.push_back({states[static_cast<std::size_t>(i)], static_cast<double>(uniform_int(rng, 2)),
                       probs[static_cast<std::size_t>(i)]});
      }
      mdp.set_outcomes(s, a, canonical_row(row));
    }
  }
  mdp.validate();
  return mdp;
}

TabularPolicy random_policy(const DiscreteMdp& mdp, std::uint64_t seed) {
  Rng rng(seed);
  TabularPolicy pi(mdp.num_states(), mdp.num_actions());
  for (int s = 0; s < mdp.num_states(); ++s) {
    std::vector<int> avail;
    for (int a = 0; a < mdp.num_actions(); ++a) {
      if (mdp.has_action(s, a)) avail.push_back(a);
    }
    if (avail.empty()) {
      pi(s, 0) = 1.0;
      continue;
    }
    const auto w = dirichlet_ones(rng, static_cast<int>(avail.size()));
    for (std::size_t i = 0; i < avail.size(); ++i) pi(s, avail[i]) = w[i];
  }
  return pi;
}

namespace {

double sup_gap(const ValueTable& a, const ValueTable& b) {
  double gap = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) gap = std::max(gap, std::abs(a[i] - b[i]));
  return gap;
}

OutcomeRow noisy_row(const OutcomeRow& base, int n) {
  OutcomeRow row;
  for (const auto& o : base) row.push_back({o.next_state, o.reward, 0.7 * o.prob});
  for (int t = 0; t < n; ++t) row.push_back({t, 0.0, 0.3 / n});
  return canonical_row(row);
}

// Mixes 30% uniform-over-states noise (reward 0) into one refined row.
// Rows are tried in random order and the first one that moves V* is kept;
// duplicated copies of an action otherwise hide the change.
// Falls back to the greedy-optimal row at a random non-terminal state.
DiscreteMdp perturb_one_row(const DiscreteMdp& m_hat, Rng& rng) {
  const int n = m_hat.num_states();
  const SolverOptions opts{1e-12, 100000, false};
  const auto base = value_iteration(m_hat, opts);
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> candidates;
  for (int s = 0; s < n; ++s) {
    if (m_hat.is_terminal(s)) continue;
    candidates.push_back(s);
    for (int a = 0; a < m_hat.num_actions(); ++a) {
      if (m_hat.has_action(s, a)) pairs.push_back({s, a});
    }
  }
  for (int i = static_cast<int>(pairs.size()) - 1; i > 0; --i) {
    std::swap(pairs[static_cast<std::size_t>(i)], pairs[static_cast<std::size_t>(uniform_int(rng, i + 1))]);
  }
  for (const auto& [s, a] : pairs) {
    DiscreteMdp out = m_hat;
    out.set_outcomes(s, a, noisy_row(m_hat.outcomes(s, a), n));
    if (sup_gap(base.values, value_iteration(out, opts).values) > 1e-9) return out;
  }
  const int s = candidates[static_cast<std::size_t>(uniform_int(rng, static_cast<int>(candidates.size())))];
  const int a = base.q.argmax(s);
  DiscreteMdp out = m_hat;
  out.set_outcomes(s, a, noisy_row(m_hat.outcomes(s, a), n));
  return out;
}

}  // namespace

FuzzReport theorem1_fuzz(int num_trials, std::uint64_t seed, const FuzzCaps& caps, int num_controls) {
  FuzzReport report;
  const SolverOptions opts{1e-12, 100000, false};
  for (int i = 0; i < num_trials + num_controls; ++i) {
    FuzzTrial trial;
    trial.trial = i;
    trial.seed = derive_seed(seed, static_cast<std::uint64_t>(i));
    trial.control = i >= num_trials;
    Rng rng(trial.seed);
    const DiscreteMdp m = random_mdp(caps.mdp, rng());
    trial.num_states = m.num_states();
    trial.num_actions = m.num_actions();
    trial.k = 1 + uniform_int(rng, std::max(1, caps.max_k));
    trial.mode = (i % 2 == 0) ? RefinementMode::GlobalDuplicate : RefinementMode::StateShuffled;
    DiscreteMdp m_hat = make_refinement(m, trial.k, trial.mode, rng());
    if (trial.control) m_hat = perturb_one_row(m_hat, rng);

    trial.verdict = is_refinement(m, m_hat).is_refinement;
    trial.value_gap = sup_gap(value_iteration(m, opts).values, value_iteration(m_hat, opts).values);
    if (trial.control) {
      trial.passed = !trial.verdict;
      if (!trial.verdict) ++report.controls_detected;
      if (trial.value_gap > 1e-12) ++report.controls_with_gap;
    } else {
      trial.passed = trial.verdict && trial.value_gap < 1e-8;
      report.max_refinement_gap = std::max(report.max_refinement_gap, trial.value_gap);
    }
    if (!trial.passed) ++report.failures;
    report.trials.push_back(trial);
  }
  return report;
}

std::string FuzzReport::to_csv() const {
  std::ostringstream out;
  out << "trial,seed,num_states,num_actions,k,mode,control,verdict,value_gap,passed\n";
  out << std::setprecision(17);
  for (const auto& t : trials) {
    out << t.trial << ',' << t.seed << ',' << t.num_states << ',' << t.num_actions << ',' << t.k << ','
        << (t.mode == RefinementMode::GlobalDuplicate ? "global-duplicate" : "state-shuffled") << ','
        << (t.control ? 1 : 0) << ',' << (t.verdict ? 1 : 0) << ',' << t.value_gap << ','
        << (t.passed ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace laq
