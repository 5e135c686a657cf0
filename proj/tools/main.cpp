#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saddle/bench.hpp"
#include "saddle/dataset.hpp"
#include "saddle/errors.hpp"
#include "saddle/known.hpp"
#include "saddle/lmdp.hpp"
#include "saddle/solver.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw saddle::ArgumentError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    if (text.empty() || text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw saddle::ArgumentError("cannot open output file: " + out_path);
  out << text;
}

saddle::Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const saddle::Vec>(v.data(), static_cast<int>(v.size()));
}

// Comparator policy and optimal value for the instance under the given mode,
// mirroring the sweep harness.
struct OracleView {
  saddle::TabularPolicy comparator;
  double j0_star = 0.0;
  bool constrained = false;
};

OracleView oracle_view(const saddle::LinearCmdp& mdp, saddle::SolverMode mode) {
  OracleView view;
  view.constrained = mode != saddle::SolverMode::kUnconstrained &&
                     mdp.num_constraints() >= 1;
  if (view.constrained) {
    view.j0_star = saddle::optimal_constrained(mdp, mdp.tau, 10001).j0_star;
    view.comparator = saddle::constrained_comparator(mdp).policy;
  } else {
    const saddle::UnconstrainedOpt opt = saddle::optimal_unconstrained(mdp, 1e-10);
    view.j0_star = opt.j_star;
    view.comparator = opt.policy;
  }
  return view;
}

saddle::BehaviorDistribution make_behavior(const saddle::LinearCmdp& mdp,
                                           const std::string& kind, double kappa,
                                           const saddle::TabularPolicy& comparator) {
  saddle::BehaviorDistribution mu_b;
  mu_b.probs = saddle::Vec::Constant(mdp.num_pairs(), 1.0 / mdp.num_pairs());
  if (kind == "mix_optimal") {
    const saddle::Vec mu_target =
        saddle::exact_eval(mdp, comparator, saddle::Vec::Zero(mdp.num_constraints()))
            .mu;
    mu_b.probs = kappa * mu_target + (1.0 - kappa) * mu_b.probs;
  } else if (kind != "uniform") {
    throw saddle::ArgumentError("behavior must be 'uniform' or 'mix_optimal'");
  }
  mu_b.validate();
  return mu_b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Primal-dual offline solver for linear MDPs with an exact tabular oracle"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a random instance as JSON");
  std::uint64_t gen_seed = 0;
  int gen_states = 6, gen_actions = 3, gen_dim = 5, gen_constraints = 0;
  double gen_gamma = 0.9;
  std::vector<double> gen_tau;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--num-states", gen_states, "Number of states");
  gen->add_option("--num-actions", gen_actions, "Number of actions");
  gen->add_option("--dim", gen_dim, "Feature dimension");
  gen->add_option("--num-constraints", gen_constraints, "Number of constraints");
  gen->add_option("--gamma", gen_gamma, "Discount factor");
  gen->add_option("--tau", gen_tau, "Constraint thresholds");
  gen->add_option("--out", gen_out, "Output path (stdout when omitted)");

  // sample
  auto* sample = app.add_subcommand("sample", "Sample an offline dataset as CSV");
  std::string sample_instance, sample_out, sample_behavior = "uniform";
  std::string sample_mode = "unconstrained";
  int sample_n = 1000;
  std::uint64_t sample_seed = 0;
  double sample_kappa = 0.5;
  sample->add_option("--instance", sample_instance, "Instance JSON path")->required();
  sample->add_option("--n", sample_n, "Number of transitions");
  sample->add_option("--seed", sample_seed, "Sampling seed");
  sample->add_option("--behavior", sample_behavior, "uniform | mix_optimal");
  sample->add_option("--kappa", sample_kappa, "Comparator weight in the blend");
  sample->add_option("--mode", sample_mode,
                     "Comparator used by mix_optimal (solver mode name)");
  sample->add_option("--out", sample_out, "Output path (stdout when omitted)");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Run the solver on a dataset");
  std::string solve_instance, solve_data, solve_out;
  std::string solve_mode = "unconstrained";
  int solve_t_iters = 0;
  std::uint64_t solve_seed = 0;
  double solve_alpha = 0.0, solve_eta = 0.0, solve_epsilon = 0.1, solve_phi = 0.0;
  double solve_c_star = 0.0;
  std::vector<double> solve_tau;
  solve_cmd->add_option("--instance", solve_instance, "Instance JSON path")->required();
  solve_cmd->add_option("--data", solve_data, "Dataset CSV path")->required();
  solve_cmd->add_option("--mode", solve_mode,
                        "unconstrained | constrained | constrained_exact_feasibility");
  solve_cmd->add_option("--t-iters", solve_t_iters, "Iteration count (0 = derived)");
  solve_cmd->add_option("--alpha", solve_alpha, "Policy step size (0 = derived)");
  solve_cmd->add_option("--eta", solve_eta, "OCO step size (0 = derived)");
  solve_cmd->add_option("--epsilon", solve_epsilon, "Target accuracy");
  solve_cmd->add_option("--phi", solve_phi, "Slater margin (constrained modes)");
  solve_cmd->add_option("--tau", solve_tau, "Threshold override");
  solve_cmd->add_option("--c-star", solve_c_star, "Coefficient bound fed to the solver")
      ->required();
  solve_cmd->add_option("--seed", solve_seed, "Config seed recorded with the run");
  solve_cmd->add_option("--out", solve_out, "Policy JSON path (stdout when omitted)");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy against the oracle");
  std::string eval_instance, eval_policy, eval_out;
  std::string eval_mode = "unconstrained";
  eval_cmd->add_option("--instance", eval_instance, "Instance JSON path")->required();
  eval_cmd->add_option("--policy", eval_policy, "Policy JSON path")->required();
  eval_cmd->add_option("--mode", eval_mode, "Comparator mode for the optimum");
  eval_cmd->add_option("--out", eval_out, "Metrics JSON path (stdout when omitted)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run an experiment spec");
  std::string sweep_spec, sweep_out;
  sweep->add_option("--spec", sweep_spec, "Experiment spec JSON path")->required();
  sweep->add_option("--out", sweep_out, "Report CSV path (overrides the spec)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      saddle::LinearCmdp mdp = saddle::build_random_cmdp(
          gen_seed, gen_states, gen_actions, gen_dim, gen_constraints, gen_gamma);
      if (!gen_tau.empty()) {
        mdp.tau = to_vec(gen_tau);
        mdp.validate();
      }
      emit(gen_out, mdp.to_json());
    } else if (sample->parsed()) {
      const saddle::LinearCmdp mdp = saddle::LinearCmdp::from_json(read_file(sample_instance));
      const saddle::SolverMode mode = saddle::solver_mode_from_string(sample_mode);
      saddle::TabularPolicy comparator =
          saddle::TabularPolicy::uniform(mdp.num_states, mdp.num_actions);
      if (sample_behavior == "mix_optimal") comparator = oracle_view(mdp, mode).comparator;
      const saddle::BehaviorDistribution mu_b =
          make_behavior(mdp, sample_behavior, sample_kappa, comparator);
      const saddle::OfflineDataset ds =
          saddle::sample_dataset(mdp, mu_b, sample_n, sample_seed);
      emit(sample_out, ds.to_csv());
    } else if (solve_cmd->parsed()) {
      saddle::LinearCmdp mdp = saddle::LinearCmdp::from_json(read_file(solve_instance));
      if (!solve_tau.empty()) {
        mdp.tau = to_vec(solve_tau);
        mdp.validate();
      }
      const saddle::KnownModel km = saddle::KnownModel::from(mdp);
      const saddle::OfflineDataset ds = saddle::OfflineDataset::from_csv(
          read_file(solve_data), km.phi, km.num_actions);
      saddle::SolverConfig cfg;
      cfg.mode = saddle::solver_mode_from_string(solve_mode);
      cfg.t_iters = solve_t_iters;
      cfg.epsilon = solve_epsilon;
      cfg.phi = solve_phi;
      cfg.seed = solve_seed;
      cfg.bounds.alpha = solve_alpha;
      cfg.bounds.oco_step = solve_eta;
      cfg.bounds.c_star = solve_c_star;
      cfg.record_iterates = false;
      const auto result = saddle::solve(ds, km, cfg);
      emit(solve_out, result.first.to_json());
    } else if (eval_cmd->parsed()) {
      const saddle::LinearCmdp mdp = saddle::LinearCmdp::from_json(read_file(eval_instance));
      const saddle::MixturePolicy mix =
          saddle::MixturePolicy::from_json(read_file(eval_policy));
      const saddle::SolverMode mode = saddle::solver_mode_from_string(eval_mode);
      const OracleView view = oracle_view(mdp, mode);
      const saddle::Vec js = saddle::evaluate_mixture(mdp, mix);
      nlohmann::json doc;
      doc["j"] = std::vector<double>(js.data(), js.data() + js.size());
      doc["j0_mix"] = js[0];
      doc["j0_star"] = view.j0_star;
      doc["subopt"] = view.j0_star - js[0];
      std::vector<double> viol;
      if (view.constrained) {
        for (int i = 0; i < mdp.num_constraints(); ++i) {
          viol.push_back(std::max(0.0, mdp.tau[i] - js[i + 1]));
        }
      }
      doc["viol"] = viol;
      doc["viol_max"] = viol.empty() ? 0.0 : *std::max_element(viol.begin(), viol.end());
      emit(eval_out, doc.dump(2));
    } else if (sweep->parsed()) {
      saddle::ExperimentSpec spec = saddle::ExperimentSpec::from_json(read_file(sweep_spec));
      if (!sweep_out.empty()) spec.out_path = sweep_out;
      const std::vector<saddle::ReportRow> rows = saddle::run_experiment(spec);
      if (rows.empty()) {
        std::cerr << "sweep produced no rows\n";
        return 1;
      }
      if (spec.out_path.empty()) {
        std::cout << saddle::report(rows, "csv");
      } else {
        std::cout << saddle::report(rows, "summary");
      }
    }
  } catch (const saddle::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
