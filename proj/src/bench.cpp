#include "saddle/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "saddle/dataset.hpp"
#include "saddle/errors.hpp"
#include "saddle/known.hpp"

namespace saddle {

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string format_double(double x, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, x);
  return buf;
}

// Per-seed stream seed mixed from the spec seed (splitmix64 finalizer). The
// dataset size is deliberately left out: grid points sharing a seed index
// draw from one sample stream, so a smaller dataset is a prefix of a larger
// one and the data-benefit trend is measured on nested samples.
std::uint64_t stream_seed(std::uint64_t base, int seed_index) {
  std::uint64_t x = base ^ 0x9E3779B97F4A7C15ULL;
  x += 0x94D049BB133111EBULL * static_cast<std::uint64_t>(seed_index + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (instance_path.empty()) {
    if (num_states < 1 || num_actions < 1 || dim < 1 || num_constraints < 0) {
      throw ArgumentError("ExperimentSpec: invalid instance sizes");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
      throw ArgumentError("ExperimentSpec: discount must lie in (0, 1)");
    }
    if (!tau.empty() && static_cast<int>(tau.size()) != num_constraints) {
      throw ArgumentError("ExperimentSpec: tau length must match the constraint count");
    }
  }
  if (behavior != "uniform" && behavior != "mix_optimal") {
    throw ArgumentError("ExperimentSpec: behavior must be 'uniform' or 'mix_optimal'");
  }
  if (!(kappa >= 0.0 && kappa <= 1.0)) {
    throw ArgumentError("ExperimentSpec: kappa must lie in [0, 1]");
  }
  if (n_grid.empty()) throw ArgumentError("ExperimentSpec: n_grid must be nonempty");
  for (size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ArgumentError("ExperimentSpec: dataset sizes must be positive");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
      throw ArgumentError("ExperimentSpec: n_grid must be strictly increasing");
    }
  }
  if (num_seeds < 1) throw ArgumentError("ExperimentSpec: num_seeds must be positive");
}

ExperimentSpec ExperimentSpec::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("ExperimentSpec: bad JSON: ") + e.what());
  }
  ExperimentSpec spec;
  try {
    if (doc.contains("instance_path")) spec.instance_path = doc["instance_path"];
    if (doc.contains("num_states")) spec.num_states = doc["num_states"];
    if (doc.contains("num_actions")) spec.num_actions = doc["num_actions"];
    if (doc.contains("dim")) spec.dim = doc["dim"];
    if (doc.contains("num_constraints")) spec.num_constraints = doc["num_constraints"];
    if (doc.contains("gamma")) spec.gamma = doc["gamma"];
    if (doc.contains("instance_seed")) {
      spec.instance_seed = doc["instance_seed"].get<std::uint64_t>();
    }
    if (doc.contains("tau")) spec.tau = doc["tau"].get<std::vector<double>>();
    if (doc.contains("behavior")) spec.behavior = doc["behavior"];
    if (doc.contains("kappa")) spec.kappa = doc["kappa"];
    spec.n_grid = doc.at("n_grid").get<std::vector<int>>();
    if (doc.contains("num_seeds")) spec.num_seeds = doc["num_seeds"];
    if (doc.contains("mode")) {
      spec.mode = solver_mode_from_string(doc["mode"].get<std::string>());
    }
    if (doc.contains("t_iters")) spec.t_iters = doc["t_iters"];
    if (doc.contains("t_max")) spec.t_max = doc["t_max"];
    if (doc.contains("epsilon")) spec.epsilon = doc["epsilon"];
    if (doc.contains("phi")) spec.phi = doc["phi"];
    if (doc.contains("alpha")) spec.alpha = doc["alpha"];
    if (doc.contains("eta")) spec.eta = doc["eta"];
    if (doc.contains("out")) spec.out_path = doc["out"];
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("ExperimentSpec: missing or mistyped field: ") +
                        e.what());
  }
  spec.validate();
  return spec;
}

double ReportRow::viol_max() const {
  return violations.size() > 0 ? violations.maxCoeff() : 0.0;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ArgumentError("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("quantile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * (static_cast<double>(values.size()) - 1.0);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = static_cast<size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::string report_header() {
  return "n,seed,mode,J0_mix,J0_star,subopt,viol_max,c_star,T,wall_ms";
}

std::string to_csv_line(const ReportRow& row) {
  std::ostringstream out;
  out << row.n << ',' << row.seed << ',' << to_string(row.mode) << ','
      << format_double(row.j0_mix, "%.17g") << ','
      << format_double(row.j0_star, "%.17g") << ','
      << format_double(row.subopt, "%.17g") << ','
      << format_double(row.viol_max(), "%.17g") << ','
      << format_double(row.c_star, "%.17g") << ',' << row.t_iters << ','
      << format_double(row.wall_ms, "%.3f");
  return out.str();
}

namespace {

struct PointOutcome {
  bool ok = false;
  ReportRow row;
  std::string reason;
};

struct ExperimentContext {
  LinearCmdp mdp;
  KnownModel km;
  BehaviorDistribution mu_b;
  SolverConfig base_cfg;
  double j0_star = 0.0;
  double c_star = 0.0;
  bool constrained = false;
  std::uint64_t stream_seed = 0;
};

PointOutcome run_point(const ExperimentContext& ctx, int n, int seed_index) {
  PointOutcome out;
  try {
    const OfflineDataset ds =
        sample_dataset(ctx.mdp, ctx.mu_b, n, stream_seed(ctx.stream_seed, seed_index));
    SolverConfig cfg = ctx.base_cfg;
    cfg.seed = static_cast<std::uint64_t>(seed_index);
    const auto t0 = std::chrono::steady_clock::now();
    const auto solved = solve(ds, ctx.km, cfg);
    const auto t1 = std::chrono::steady_clock::now();
    const Vec js = evaluate_mixture(ctx.mdp, solved.first);

    ReportRow& row = out.row;
    row.n = n;
    row.seed = seed_index;
    row.mode = ctx.base_cfg.mode;
    row.j0_mix = js[0];
    row.j0_star = ctx.j0_star;
    row.subopt = ctx.j0_star - js[0];
    if (ctx.constrained) {
      row.violations.resize(ctx.mdp.num_constraints());
      for (int i = 0; i < ctx.mdp.num_constraints(); ++i) {
        row.violations[i] = std::max(0.0, ctx.mdp.tau[i] - js[i + 1]);
      }
    }
    row.c_star = ctx.c_star;
    row.t_iters = static_cast<int>(solved.first.zs.rows());
    row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    out.ok = true;
  } catch (const Error& e) {
    out.reason = e.what();
  }
  return out;
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentSpec& spec) {
  spec.validate();

  ExperimentContext ctx;
  if (!spec.instance_path.empty()) {
    ctx.mdp = LinearCmdp::from_json(read_text_file(spec.instance_path));
  } else {
    ctx.mdp = build_random_cmdp(spec.instance_seed, spec.num_states, spec.num_actions,
                                spec.dim, spec.num_constraints, spec.gamma);
  }
  // The threshold override applies to loaded instances as well, matching the
  // solve subcommand's --tau semantics.
  if (!spec.tau.empty()) {
    if (static_cast<int>(spec.tau.size()) != ctx.mdp.num_constraints()) {
      throw ArgumentError("ExperimentSpec: tau length must match the instance");
    }
    ctx.mdp.tau = Eigen::Map<const Vec>(spec.tau.data(),
                                        static_cast<int>(spec.tau.size()));
  }
  ctx.km = KnownModel::from(ctx.mdp);
  ctx.stream_seed = spec.instance_seed;

  ctx.base_cfg.mode = spec.mode;
  ctx.base_cfg.t_iters = spec.t_iters;
  ctx.base_cfg.t_max = spec.t_max;
  ctx.base_cfg.epsilon = spec.epsilon;
  ctx.base_cfg.phi = spec.phi;
  ctx.base_cfg.bounds.alpha = spec.alpha;
  ctx.base_cfg.bounds.oco_step = spec.eta;
  ctx.base_cfg.record_iterates = false;

  ctx.constrained =
      spec.mode != SolverMode::kUnconstrained && ctx.mdp.num_constraints() >= 1;

  // Oracle phase: comparator policy, its optimum value and the behavior
  // distribution derived from it. An infeasible instance voids every row.
  TabularPolicy comparator;
  try {
    if (ctx.constrained) {
      const ConstrainedOpt copt = optimal_constrained(ctx.mdp, ctx.mdp.tau, 10001);
      ctx.j0_star = copt.j0_star;
      comparator = constrained_comparator(ctx.mdp).policy;
    } else {
      const UnconstrainedOpt uopt = optimal_unconstrained(ctx.mdp, 1e-10);
      ctx.j0_star = uopt.j_star;
      comparator = uopt.policy;
    }
  } catch (const InfeasibleError& e) {
    for (int n : spec.n_grid) {
      for (int s = 0; s < spec.num_seeds; ++s) {
        std::cerr << "skipping n=" << n << " seed=" << s << ": " << e.what() << "\n";
      }
    }
    return {};
  }

  const int pairs = ctx.mdp.num_pairs();
  ctx.mu_b.probs = Vec::Constant(pairs, 1.0 / pairs);
  if (spec.behavior == "mix_optimal") {
    const Vec mu_target =
        exact_eval(ctx.mdp, comparator, Vec::Zero(ctx.mdp.num_constraints())).mu;
    ctx.mu_b.probs = spec.kappa * mu_target + (1.0 - spec.kappa) * ctx.mu_b.probs;
  }
  ctx.mu_b.validate();
  ctx.c_star = concentrability(ctx.mdp, comparator, ctx.mu_b);
  ctx.base_cfg.bounds.c_star = ctx.c_star;

  std::vector<std::pair<int, int>> tasks;
  tasks.reserve(spec.n_grid.size() * static_cast<size_t>(spec.num_seeds));
  for (int n : spec.n_grid) {
    for (int s = 0; s < spec.num_seeds; ++s) tasks.emplace_back(n, s);
  }

  std::vector<std::unique_ptr<PointOutcome>> results(tasks.size());
  std::atomic<size_t> next_task{0};
  std::mutex mtx;
  std::condition_variable ready;

  auto worker = [&]() {
    while (true) {
      const size_t i = next_task.fetch_add(1);
      if (i >= tasks.size()) return;
      auto outcome =
          std::make_unique<PointOutcome>(run_point(ctx, tasks[i].first, tasks[i].second));
      {
        std::lock_guard<std::mutex> lock(mtx);
        results[i] = std::move(outcome);
      }
      ready.notify_all();
    }
  };

  const unsigned hw = std::thread::hardware_concurrency();
  const size_t pool_size = std::min<size_t>(std::max(1u, hw), tasks.size());
  std::vector<std::thread> pool;
  pool.reserve(pool_size);
  for (size_t i = 0; i < pool_size; ++i) pool.emplace_back(worker);

  std::ofstream file;
  if (!spec.out_path.empty()) {
    file.open(spec.out_path, std::ios::binary | std::ios::trunc);
    if (!file) {
      next_task.store(tasks.size());
      for (auto& t : pool) t.join();
      throw ArgumentError("run_experiment: cannot open output file: " + spec.out_path);
    }
    file << report_header() << "\n" << std::flush;
  }

  // Commit rows in grid order as they become available so the CSV is
  // deterministic regardless of pool scheduling.
  std::vector<ReportRow> rows;
  rows.reserve(tasks.size());
  for (size_t i = 0; i < tasks.size(); ++i) {
    std::unique_lock<std::mutex> lock(mtx);
    ready.wait(lock, [&]() { return results[i] != nullptr; });
    const PointOutcome& outcome = *results[i];
    lock.unlock();
    if (outcome.ok) {
      rows.push_back(outcome.row);
      if (file.is_open()) file << to_csv_line(outcome.row) << "\n" << std::flush;
    } else {
      std::cerr << "skipping n=" << tasks[i].first << " seed=" << tasks[i].second
                << ": " << outcome.reason << "\n";
    }
  }
  for (auto& t : pool) t.join();
  return rows;
}

std::vector<SummaryLine> summarize(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw ArgumentError("summarize: no rows");
  std::vector<int> ns;
  for (const ReportRow& row : rows) {
    if (std::find(ns.begin(), ns.end(), row.n) == ns.end()) ns.push_back(row.n);
  }
  std::sort(ns.begin(), ns.end());

  std::vector<SummaryLine> lines;
  for (int n : ns) {
    std::vector<double> subopt, viol, wall;
    for (const ReportRow& row : rows) {
      if (row.n != n) continue;
      subopt.push_back(row.subopt);
      viol.push_back(row.viol_max());
      wall.push_back(row.wall_ms);
    }
    SummaryLine line;
    line.n = n;
    line.count = static_cast<int>(subopt.size());
    line.subopt_median = quantile(subopt, 0.5);
    line.subopt_iqr = quantile(subopt, 0.75) - quantile(subopt, 0.25);
    line.viol_median = quantile(viol, 0.5);
    line.viol_iqr = quantile(viol, 0.75) - quantile(viol, 0.25);
    line.wall_ms_median = quantile(wall, 0.5);
    lines.push_back(line);
  }
  return lines;
}

std::string report(const std::vector<ReportRow>& rows, const std::string& format) {
  if (rows.empty()) throw ArgumentError("report: no rows");
  std::ostringstream out;
  if (format == "csv") {
    out << report_header() << "\n";
    for (const ReportRow& row : rows) out << to_csv_line(row) << "\n";
  } else if (format == "summary") {
    for (const SummaryLine& line : summarize(rows)) {
      out << "n=" << line.n << " count=" << line.count
          << " subopt_median=" << format_double(line.subopt_median, "%.6g")
          << " subopt_iqr=" << format_double(line.subopt_iqr, "%.6g")
          << " viol_median=" << format_double(line.viol_median, "%.6g")
          << " viol_iqr=" << format_double(line.viol_iqr, "%.6g")
          << " wall_ms_median=" << format_double(line.wall_ms_median, "%.6g") << "\n";
    }
  } else {
    throw ArgumentError("report: format must be 'csv' or 'summary'");
  }
  return out.str();
}

}  // namespace saddle
