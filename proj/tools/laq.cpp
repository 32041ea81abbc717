#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "laq/experiments.hpp"
#include "laq/gridworld.hpp"
#include "laq/labeling.hpp"
#include "laq/latent_mining.hpp"
#include "laq/offline_q.hpp"
#include "laq/plots.hpp"
#include "laq/refinement.hpp"
#include "laq/shaping.hpp"

namespace fs = std::filesystem;
using namespace laq;

namespace {

// Exit codes: 0 ok, 1 a check failed, 2 usage or runtime error.
constexpr int kCheckFailed = 1;
constexpr int kError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string in_out_dir(const ExperimentConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

DatasetPtr load_source(const std::string& path) {
  return std::make_shared<const TransitionDataset>(load_dataset(path));
}

AlphaSchedule parse_alpha(const std::string& text) {
  AlphaSchedule a;
  if (text == "sweep-visit") {
    a.kind = AlphaSchedule::Kind::SweepVisitDecay;
  } else if (text == "visit") {
    a.kind = AlphaSchedule::Kind::VisitDecay;
  } else {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size() || !(v > 0.0 && v <= 1.0)) {
      throw std::invalid_argument("--alpha must be sweep-visit, visit or a number in (0, 1]");
    }
    a.kind = AlphaSchedule::Kind::Constant;
    a.value = v;
  }
  return a;
}

void print_pairs(const char* what, const std::vector<std::pair<int, int>>& pairs) {
  std::printf("%s:", what);
  if (pairs.empty()) std::printf(" none");
  for (const auto& [s, a] : pairs) std::printf(" (s=%d,a=%d)", s, a);
  std::printf("\n");
}

int ok_status(const ResultTable& table) {
  for (const auto& r : table.rows()) {
    if (r.metric == "ok" && r.value == 0.0) return kCheckFailed;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent action Q-learning lab on a discrete gridworld"};
  app.fallthrough();
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = ".";
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--config", config_path, "JSON file with ExperimentConfig fields")->check(CLI::ExistingFile);
  app.add_option("--out-dir", out_dir, "Directory for outputs");

  // generate-data
  auto* gen = app.add_subcommand("generate-data", "Roll out the data policy on the gridworld");
  int gen_episodes = 0;
  double gen_sticky = 0.0;
  std::string gen_out;
  gen->add_option("--episodes", gen_episodes, "Number of episodes");
  gen->add_option("--stickiness", gen_sticky, "Sticky-action probability");
  gen->add_option("--out", gen_out, "Dataset path (default <out-dir>/dataset.jsonl)");

  // label
  auto* lab = app.add_subcommand("label", "Attach action labels to a dataset");
  std::string lab_scheme = "gt";
  int lab_k = 0;
  double lab_p = 0.0;
  int lab_actions = kNumMoves;
  int lab_top_k = 0;
  std::string lab_model, lab_in, lab_out;
  lab->add_option("--scheme", lab_scheme, "Labeling scheme")
      ->check(CLI::IsMember({"gt", "single", "refined", "obfuscated", "latent"}));
  lab->add_option("--k", lab_k, "Refinement factor (refined)");
  lab->add_option("--p", lab_p, "Obfuscation probability (obfuscated)");
  lab->add_option("--num-actions", lab_actions, "Number of ground-truth actions");
  lab->add_option("--model", lab_model, "Forward model JSON (latent)");
  lab->add_option("--top-k", lab_top_k, "Keep only the k most frequent latent labels (latent)");
  lab->add_option("--in", lab_in, "Input dataset")->required();
  lab->add_option("--out", lab_out, "Labeled dataset path")->required();

  // mine
  auto* mine = app.add_subcommand("mine", "Mine latent actions with hard EM");
  std::string mine_mode = "tabular";
  MiningConfig mcfg;
  std::string mine_in, mine_model, mine_labels, mine_report;
  mine->add_option("--mode", mine_mode, "Forward model family")
      ->check(CLI::IsMember({"tabular", "linear", "shared-linear"}));
  mine->add_option("--num-latent", mcfg.num_latent, "Number of latent actions");
  mine->add_option("--max-iters", mcfg.max_em_iters, "Maximum EM iterations");
  mine->add_option("--learning-rate", mcfg.learning_rate, "Linear M-step learning rate");
  mine->add_option("--epochs", mcfg.epochs, "Linear M-step epochs");
  mine->add_option("--batch-size", mcfg.batch_size, "Linear M-step minibatch size");
  mine->add_option("--in", mine_in, "Input dataset")->required();
  mine->add_option("--out-model", mine_model, "Model path (default <out-dir>/model.json)");
  mine->add_option("--out-labels", mine_labels, "Labeled dataset path (default <out-dir>/latent.jsonl)");
  mine->add_option("--report", mine_report, "Per-iteration loss CSV");

  // qlearn
  auto* ql = app.add_subcommand("qlearn", "Offline Q-learning on a labeled dataset");
  std::string ql_method = "ce";
  double ql_gamma = 0.95;
  int ql_sweeps = 200;
  int ql_every = 10;
  bool ql_live = false;
  std::string ql_alpha = "sweep-visit";
  std::string ql_in, ql_out, ql_curve, ql_reference;
  ql->add_option("--method", ql_method, "ce (exact fixed point) or sampled")->check(CLI::IsMember({"ce", "sampled"}));
  ql->add_option("--gamma", ql_gamma, "Discount");
  ql->add_option("--sweeps", ql_sweeps, "Passes over the data (sampled)");
  ql->add_option("--alpha", ql_alpha, "sweep-visit, visit or a constant step size (sampled)");
  ql->add_option("--checkpoint-every", ql_every, "Sweeps between checkpoints (sampled)");
  ql->add_flag("--live-targets", ql_live, "Bootstrap from the live table instead of a per-sweep copy");
  ql->add_option("--reference", ql_reference, "Value map to correlate checkpoints against");
  ql->add_option("--in", ql_in, "Labeled dataset")->required();
  ql->add_option("--out", ql_out, "Value map path (default <out-dir>/values.json)");
  ql->add_option("--curve", ql_curve, "Checkpoint CSV (sampled)");

  // densify
  auto* den = app.add_subcommand("densify", "Compare sparse and value-shaped online Q-learning");
  std::string den_value, den_out;
  double den_scale = 5.0;
  int den_episodes = 2000;
  int den_seeds = 5;
  double den_sticky = 0.0;
  den->add_option("--value", den_value, "Value map used as potential")->required();
  den->add_option("--scale", den_scale, "Sparse reward scale");
  den->add_option("--episodes", den_episodes, "Episodes per agent");
  den->add_option("--seeds", den_seeds, "Agents per condition");
  den->add_option("--stickiness", den_sticky, "Sticky-action probability of the live grid");
  den->add_option("--out", den_out, "Densified learning curves (default <out-dir>/curves.csv)");

  // check-refinement
  auto* chk = app.add_subcommand("check-refinement", "Check whether one MDP refines another");
  std::string chk_m, chk_mhat;
  double chk_tol = 1e-9;
  chk->add_option("--m", chk_m, "Original MDP JSON")->required();
  chk->add_option("--m-hat", chk_mhat, "Candidate refinement JSON")->required();
  chk->add_option("--tol", chk_tol, "Distribution tolerance");

  // theorem-check
  auto* thm = app.add_subcommand("theorem-check", "Fuzz refinement value equality on random MDPs");
  int thm_trials = 100;
  int thm_controls = 20;
  thm->add_option("--trials", thm_trials, "Refinement trials");
  thm->add_option("--controls", thm_controls, "Perturbed non-refinement controls");

  // experiment
  auto* exp = app.add_subcommand("experiment", "Run a named experiment and write <out-dir>/<name>.csv");
  std::string exp_name;
  exp->add_option("name", exp_name, "Experiment name")->required()->check(CLI::IsMember(experiment_names()));

  // plot
  auto* plt = app.add_subcommand("plot", "Render SVG charts from a results CSV");
  std::string plt_in;
  double plt_gamma = 0.95;
  plt->add_option("--in", plt_in, "Results CSV")->required();
  plt->add_option("--gamma", plt_gamma, "Discount used for greedy arrows");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = ExperimentConfig::from_json_string(read_file(config_path));
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--out-dir")) cfg.out_dir = out_dir;
    fs::create_directories(cfg.out_dir);

    if (*gen) {
      GridWorldEnv env;
      env.stickiness = gen->count("--stickiness") ? gen_sticky : cfg.stickiness;
      const int episodes = gen->count("--episodes") ? gen_episodes : cfg.episodes;
      const auto ds = generate_dataset(env, data_policy(env), episodes, cfg.seed);
      const std::string path = gen_out.empty() ? in_out_dir(cfg, "dataset.jsonl") : gen_out;
      save_dataset(ds, path);
      std::printf("wrote %zu transitions from %d episodes to %s\n", ds.size(), episodes, path.c_str());
      return 0;
    }

    if (*lab) {
      const auto ds = load_source(lab_in);
      LabeledDataset lds;
      if (lab_scheme == "gt") {
        lds = label_ground_truth(ds, lab_actions);
      } else if (lab_scheme == "single") {
        lds = label_single(ds);
      } else if (lab_scheme == "refined") {
        lds = label_refined(ds, lab->count("--k") ? lab_k : cfg.refine_k, cfg.seed, lab_actions);
      } else if (lab_scheme == "obfuscated") {
        lds = label_obfuscated(ds, lab->count("--p") ? lab_p : cfg.impurity, cfg.seed, lab_actions);
      } else {
        if (lab_model.empty()) throw std::invalid_argument("--scheme latent needs --model");
        const auto model = ForwardModel::load(lab_model);
        lds = label_with_model(ds, model);
        lds.model_id = fs::path(lab_model).filename().string();
        if (lab_top_k > 0) lds = dominant_filter(lds, lab_top_k, model);
      }
      save_labeled(lds, lab_out);
      std::printf("labeled %zu transitions with %d labels (%s) to %s\n", lds.size(), lds.num_labels,
                  lds.scheme.c_str(), lab_out.c_str());
      return 0;
    }

    if (*mine) {
      mcfg.mode = mine_mode == "tabular" ? ForwardMode::Tabular : ForwardMode::SharedLinear;
      mcfg.seed = cfg.seed;
      if (!mine->count("--num-latent")) mcfg.num_latent = cfg.num_latent;
      const auto result = mine_latent_actions(load_source(mine_in), mcfg);
      const std::string model_path = mine_model.empty() ? in_out_dir(cfg, "model.json") : mine_model;
      const std::string labels_path = mine_labels.empty() ? in_out_dir(cfg, "latent.jsonl") : mine_labels;
      write_file(model_path, result.model.to_json_string() + "\n");
      save_labeled(result.labels, labels_path);
      if (!mine_report.empty()) write_file(mine_report, result.report.to_csv());
      std::printf("iterations %d converged %d reinits %d final loss %.6g\n", result.report.iterations,
                  result.report.converged ? 1 : 0, result.report.reinits,
                  result.report.losses.empty() ? 0.0 : result.report.losses.back());
      if (result.labels.record(0).gt_action) std::printf("purity %.6f\n", purity(result.labels));
      return 0;
    }

    if (*ql) {
      const auto lds = load_labeled(ql_in);
      const double gamma = ql->count("--gamma") ? ql_gamma : cfg.gamma;
      const std::string out = ql_out.empty() ? in_out_dir(cfg, "values.json") : ql_out;
      if (ql_method == "ce") {
        const auto ce = certainty_equivalence_q(lds, gamma);
        save_value_map(value_map(ce.empirical.index, ce.values), out);
        std::printf("certainty equivalence over %d states, wrote %s\n", ce.empirical.index.num_states(), out.c_str());
        return 0;
      }
      SampledQOptions opts;
      opts.sweeps = ql->count("--sweeps") ? ql_sweeps : cfg.sweeps;
      opts.alpha = parse_alpha(ql_alpha);
      opts.seed = cfg.seed;
      opts.checkpoint_every = ql_every;
      opts.frozen_targets = !ql_live;
      ValueTable reference;
      if (!ql_reference.empty()) {
        ShapingConfig lookup;
        lookup.values = load_value_map(ql_reference);
        const auto index = StateIndex::build(*lds.source);
        reference = ValueTable(static_cast<std::size_t>(index.num_states()));
        for (int s = 0; s < index.num_states(); ++s) {
          reference[static_cast<std::size_t>(s)] = lookup.value(index.keys[static_cast<std::size_t>(s)]);
        }
        opts.reference = &reference;
      }
      const auto res = sampled_q_learning(lds, gamma, opts);
      save_value_map(value_map(res.empirical.index, res.values), out);
      if (!ql_curve.empty()) {
        std::string csv = "sweep,residual,spearman\n";
        for (const auto& c : res.curve.checkpoints) {
          csv += std::to_string(c.sweep) + ',' + format_double(c.residual) + ',' +
                 (c.spearman ? format_double(*c.spearman) : std::string()) + '\n';
        }
        write_file(ql_curve, csv);
      }
      const auto ce = certainty_equivalence_q(lds, gamma);
      std::printf("sampled Q-learning, %d sweeps, sup |Q - Q_ce| = %.3g, wrote %s\n", opts.sweeps,
                  q_sup_diff(ce.q, res.q), out.c_str());
      if (opts.reference && !res.curve.checkpoints.empty()) {
        std::printf("p95 spearman %.6f\n", model_selection_p95(res.curve));
      }
      return 0;
    }

    if (*den) {
      if (den->count("--scale")) cfg.sparse_scale = den_scale;
      if (den->count("--episodes")) cfg.rl_episodes = den_episodes;
      if (den->count("--seeds")) cfg.rl_seeds = den_seeds;
      cfg.validate();
      GridWorldEnv env;
      env.stickiness = den->count("--stickiness") ? den_sticky : cfg.stickiness;
      const auto res = compare_densified(env, load_value_map(den_value), cfg);
      const std::string out = den_out.empty() ? in_out_dir(cfg, "curves.csv") : den_out;
      const fs::path op(out);
      const std::string sparse_out =
          (op.parent_path() / (op.stem().string() + "_sparse" + op.extension().string())).string();
      write_file(out, curves_to_csv(res.dense));
      write_file(sparse_out, curves_to_csv(res.sparse));
      res.table.write_csv(in_out_dir(cfg, "densify.csv"));
      std::printf("mean episodes to %.0f%% success: sparse %.1f, densified %.1f\n", 100 * cfg.threshold,
                  res.table.find("sparse", "mean_episodes_to_threshold").value_or(-1),
                  res.table.find("densified", "mean_episodes_to_threshold").value_or(-1));
      return 0;
    }

    if (*chk) {
      const auto m = load_mdp(chk_m);
      const auto m_hat = load_mdp(chk_mhat);
      const auto verdict = is_refinement(m, m_hat, chk_tol);
      std::printf("refinement: %s\n", verdict.is_refinement ? "yes" : "no");
      print_pairs("unmatched refined actions", verdict.missing_forward);
      print_pairs("unrepresented original actions", verdict.missing_backward);
      return verdict.is_refinement ? 0 : kCheckFailed;
    }

    if (*thm) {
      if (thm->count("--trials")) cfg.fuzz_trials = thm_trials;
      if (thm->count("--controls")) cfg.fuzz_controls = thm_controls;
      const auto res = run_theorem_check(cfg);
      const auto& rep = res.report;
      int controls = 0;
      for (const auto& t : rep.trials) controls += t.control ? 1 : 0;
      const int refinements = static_cast<int>(rep.trials.size()) - controls;
      std::printf("%-28s %10s %s\n", "check", "value", "status");
      std::printf("%-28s %10d %s\n", "refinement trials", refinements, "");
      std::printf("%-28s %10d %s\n", "failures", rep.failures, rep.failures == 0 ? "PASS" : "FAIL");
      std::printf("%-28s %10.3g %s\n", "max refinement value gap", rep.max_refinement_gap,
                  rep.max_refinement_gap < 1e-8 ? "PASS" : "FAIL");
      std::printf("%-28s %6d/%-3d %s\n", "controls detected", rep.controls_detected, controls,
                  rep.controls_detected == controls ? "PASS" : "FAIL");
      std::printf("%-28s %6d/%-3d\n", "controls with a value gap", rep.controls_with_gap, controls);
      res.table.write_csv(in_out_dir(cfg, "theorem.csv"));
      write_file(in_out_dir(cfg, "theorem_trials.csv"), rep.to_csv());
      return ok_status(res.table);
    }

    if (*exp) {
      cfg.name = exp_name;
      ResultTable table;
      if (exp_name == "densify") {
        const auto res = run_densify(cfg);
        write_file(in_out_dir(cfg, "densify_curves.csv"), curves_to_csv(res.dense));
        write_file(in_out_dir(cfg, "densify_curves_sparse.csv"), curves_to_csv(res.sparse));
        table = res.table;
      } else {
        table = run_experiment(cfg);
      }
      const std::string path = in_out_dir(cfg, exp_name + ".csv");
      table.write_csv(path);
      write_file(in_out_dir(cfg, exp_name + "_config.json"), cfg.to_json_string() + "\n");
      std::printf("wrote %zu rows to %s\n", table.rows().size(), path.c_str());
      const int status = ok_status(table);
      if (status != 0) std::printf("assertion failed: an ok row is 0\n");
      return status;
    }

    if (*plt) {
      const auto table = ResultTable::read_csv(plt_in);
      const auto paths = render_plots(table, cfg.out_dir, plt_gamma);
      for (const auto& p : paths) std::printf("%s\n", p.c_str());
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "laq: %s\n", e.what());
    return kError;
  }
  return kError;
}
