#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "laq/experiments.hpp"
#include "laq/gridworld.hpp"
#include "laq/labeling.hpp"
#include "laq/latent_mining.hpp"
#include "laq/offline_q.hpp"
#include "laq/refinement.hpp"
#include "laq/shaping.hpp"

namespace py = pybind11;
using namespace laq;

namespace {

using Row = std::vector<std::tuple<int, double, double>>;  // (next_state, reward, prob)

py::dict vi_dict(const DiscreteMdp& mdp, double tol) {
  const auto vi = value_iteration(mdp, {tol, 100000, false});
  std::vector<std::vector<double>> q(static_cast<std::size_t>(mdp.num_states()));
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) q[static_cast<std::size_t>(s)].push_back(vi.q(s, a));
  }
  py::dict out;
  out["values"] = vi.values.values;
  out["q"] = q;
  out["iterations"] = vi.iterations;
  out["residual"] = vi.residual;
  return out;
}

ForwardMode parse_mode(const std::string& mode) {
  if (mode == "tabular") return ForwardMode::Tabular;
  if (mode == "linear" || mode == "shared-linear") return ForwardMode::SharedLinear;
  throw std::invalid_argument("unknown mining mode: " + mode);
}

ClusterFeature parse_feature(const std::string& f) {
  if (f == "concat") return ClusterFeature::Concat;
  if (f == "diff") return ClusterFeature::Diff;
  throw std::invalid_argument("unknown cluster feature: " + f);
}

double spearman_or_nan(const std::vector<double>& x, const std::vector<double>& y) {
  return spearman(x, y).value_or(std::numeric_limits<double>::quiet_NaN());
}

py::dict value_dict(const CeResult& ce) {
  py::dict out;
  out["observations"] = ce.empirical.index.keys;
  out["values"] = ce.values.values;
  return out;
}

}  // namespace

PYBIND11_MODULE(_laq, m) {
  m.doc() = "Tabular MDPs, latent action mining and offline Q-learning on a gridworld";

  py::register_exception<MdpFormatError>(m, "MdpFormatError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  py::class_<DiscreteMdp>(m, "DiscreteMdp")
      .def(py::init<int, int, double>(), py::arg("num_states"), py::arg("num_actions"), py::arg("gamma"))
      .def_property_readonly("num_states", &DiscreteMdp::num_states)
      .def_property_readonly("num_actions", &DiscreteMdp::num_actions)
      .def_property_readonly("gamma", &DiscreteMdp::gamma)
      .def("set_outcomes",
           [](DiscreteMdp& mdp, int s, int a, const Row& row) {
             OutcomeRow r;
             for (const auto& [t, rew, p] : row) r.push_back({t, rew, p});
             mdp.set_outcomes(s, a, std::move(r));
           })
      .def("outcomes",
           [](const DiscreteMdp& mdp, int s, int a) {
             Row out;
             for (const auto& o : mdp.outcomes(s, a)) out.emplace_back(o.next_state, o.reward, o.prob);
             return out;
           })
      .def("set_terminal", &DiscreteMdp::set_terminal, py::arg("s"), py::arg("terminal") = true)
      .def("is_terminal", &DiscreteMdp::is_terminal)
      .def("validate", [](const DiscreteMdp& mdp, bool partial) {
             mdp.validate(partial ? ActionCoverage::Partial : ActionCoverage::Full);
           }, py::arg("partial") = false)
      .def("to_json", &mdp_to_json_string)
      .def_static("from_json", &mdp_from_json_string);

  m.def("value_iteration", &vi_dict, py::arg("mdp"), py::arg("tol") = 1e-10);
  m.def("is_refinement", [](const DiscreteMdp& a, const DiscreteMdp& b, double tol) {
    return is_refinement(a, b, tol).is_refinement;
  }, py::arg("m"), py::arg("m_hat"), py::arg("tol") = 1e-9);
  m.def("make_refinement", [](const DiscreteMdp& mdp, int k, bool shuffled, std::uint64_t seed) {
    return make_refinement(mdp, k, shuffled ? RefinementMode::StateShuffled : RefinementMode::GlobalDuplicate, seed);
  }, py::arg("mdp"), py::arg("k"), py::arg("shuffled") = false, py::arg("seed") = 0);
  m.def("counterexample_pair", &counterexample_pair);
  m.def("theorem_fuzz", [](int trials, int controls, std::uint64_t seed) {
    const auto r = theorem1_fuzz(trials, seed, {}, controls);
    py::dict out;
    out["failures"] = r.failures;
    out["controls_detected"] = r.controls_detected;
    out["controls_with_gap"] = r.controls_with_gap;
    out["max_gap"] = r.max_refinement_gap;
    return out;
  }, py::arg("trials") = 100, py::arg("controls") = 20, py::arg("seed") = 0);

  py::class_<GridWorldEnv>(m, "GridWorld")
      .def(py::init([](int width, int height, double stickiness, int max_steps) {
             GridWorldEnv env{width, height, stickiness, max_steps};
             env.validate();
             return env;
           }),
           py::arg("width") = 6, py::arg("height") = 6, py::arg("stickiness") = 0.0, py::arg("max_steps") = 200)
      .def_readwrite("stickiness", &GridWorldEnv::stickiness)
      .def_readonly("width", &GridWorldEnv::width)
      .def_readonly("height", &GridWorldEnv::height)
      .def("move", [](const GridWorldEnv& env, int x, int y, int a) {
        const Cell c = env.move({x, y}, a);
        return std::make_pair(c.x, c.y);
      })
      .def("to_mdp", &grid_to_mdp, py::arg("gamma") = 0.95);

  py::class_<TransitionDataset, std::shared_ptr<TransitionDataset>>(m, "Dataset")
      .def("__len__", &TransitionDataset::size)
      .def("save", [](const TransitionDataset& ds, const std::string& path) { save_dataset(ds, path); })
      .def_static("load", [](const std::string& path) {
        return std::make_shared<TransitionDataset>(load_dataset(path));
      })
      .def_property_readonly("gt_actions", [](const TransitionDataset& ds) {
        std::vector<int> out;
        for (const auto& r : ds.records) out.push_back(r.gt_action.value_or(-1));
        return out;
      });

  m.def("generate_dataset", [](const GridWorldEnv& env, int episodes, std::uint64_t seed) {
    return std::make_shared<TransitionDataset>(generate_dataset(env, data_policy(env), episodes, seed));
  }, py::arg("env"), py::arg("episodes"), py::arg("seed") = 0);

  py::class_<LabeledDataset>(m, "LabeledDataset")
      .def("__len__", &LabeledDataset::size)
      .def_readonly("labels", &LabeledDataset::labels)
      .def_readonly("num_labels", &LabeledDataset::num_labels)
      .def_readonly("scheme", &LabeledDataset::scheme);

  auto as_ptr = [](const std::shared_ptr<TransitionDataset>& ds) { return DatasetPtr(ds); };
  m.def("label_ground_truth", [as_ptr](const std::shared_ptr<TransitionDataset>& ds) {
    return label_ground_truth(as_ptr(ds));
  });
  m.def("label_single", [as_ptr](const std::shared_ptr<TransitionDataset>& ds) { return label_single(as_ptr(ds)); });
  m.def("label_refined", [as_ptr](const std::shared_ptr<TransitionDataset>& ds, int k, std::uint64_t seed) {
    return label_refined(as_ptr(ds), k, seed);
  }, py::arg("ds"), py::arg("k") = 4, py::arg("seed") = 0);
  m.def("label_obfuscated", [as_ptr](const std::shared_ptr<TransitionDataset>& ds, double p, std::uint64_t seed) {
    return label_obfuscated(as_ptr(ds), p, seed);
  }, py::arg("ds"), py::arg("p") = 0.5, py::arg("seed") = 0);
  m.def("mine", [as_ptr](const std::shared_ptr<TransitionDataset>& ds, int num_latent, const std::string& mode,
                         std::uint64_t seed, int max_iters) {
    MiningConfig cfg;
    cfg.num_latent = num_latent;
    cfg.mode = parse_mode(mode);
    cfg.seed = seed;
    cfg.max_em_iters = max_iters;
    auto res = mine_latent_actions(as_ptr(ds), cfg);
    py::dict report;
    report["losses"] = res.report.losses;
    report["iterations"] = res.report.iterations;
    report["converged"] = res.report.converged;
    return py::make_tuple(res.labels, report);
  }, py::arg("ds"), py::arg("num_latent") = 8, py::arg("mode") = "tabular", py::arg("seed") = 0,
     py::arg("max_iters") = 100);
  m.def("cluster", [as_ptr](const std::shared_ptr<TransitionDataset>& ds, const std::string& feature, int k,
                            std::uint64_t seed, int restarts) {
    return cluster_baseline(as_ptr(ds), parse_feature(feature), k, seed, restarts);
  }, py::arg("ds"), py::arg("feature") = "diff", py::arg("k") = 8, py::arg("seed") = 0, py::arg("restarts") = 100);
  m.def("purity", &purity);

  m.def("certainty_equivalence", [](const LabeledDataset& lds, double gamma) {
    return value_dict(certainty_equivalence_q(lds, gamma));
  }, py::arg("lds"), py::arg("gamma") = 0.95);
  m.def("sampled_q", [](const LabeledDataset& lds, double gamma, int sweeps, std::uint64_t seed) {
    SampledQOptions opts;
    opts.sweeps = sweeps;
    opts.seed = seed;
    const auto res = sampled_q_learning(lds, gamma, opts);
    py::dict out;
    out["observations"] = res.empirical.index.keys;
    out["values"] = res.values.values;
    out["sup_gap_to_ce"] = q_sup_diff(certainty_equivalence_q(lds, gamma).q, res.q);
    return out;
  }, py::arg("lds"), py::arg("gamma") = 0.95, py::arg("sweeps") = 200, py::arg("seed") = 0);
  m.def("spearman", &spearman_or_nan);
  m.def("percentile", &percentile);

  m.def("shaped_reward", [](const std::vector<std::pair<Observation, double>>& values, double r,
                            const Observation& s, const Observation& s_next, double scale) {
    ShapingConfig cfg;
    cfg.sparse_scale = scale;
    for (const auto& [o, v] : values) cfg.values[o] = v;
    return shaped_reward(cfg, r, s, s_next);
  }, py::arg("values"), py::arg("r"), py::arg("s"), py::arg("s_next"), py::arg("scale") = 5.0);

  m.def("experiment_names", &experiment_names);
  m.def("run_experiment", [](const std::string& config_json) {
    return run_experiment(ExperimentConfig::from_json_string(config_json)).to_csv();
  }, py::arg("config_json"));
}
