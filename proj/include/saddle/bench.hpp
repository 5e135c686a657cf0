#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saddle/lmdp.hpp"
#include "saddle/solver.hpp"
#include "saddle/types.hpp"

namespace saddle {

/// Declarative description of one sweep: the instance (loaded from a file or
/// generated from sizes), the behavior distribution, the dataset-size grid,
/// the seed count and the solver settings shared by every grid point.
struct ExperimentSpec {
  std::string instance_path;  // when nonempty, wins over the size fields
  int num_states = 6;
  int num_actions = 3;
  int dim = 5;
  int num_constraints = 0;
  double gamma = 0.9;
  std::uint64_t instance_seed = 1;
  std::vector<double> tau;  // thresholds applied to a generated instance

  std::string behavior = "mix_optimal";  // or "uniform"
  double kappa = 0.5;  // weight on the comparator occupancy in the blend

  std::vector<int> n_grid;  // strictly increasing dataset sizes
  int num_seeds = 10;

  SolverMode mode = SolverMode::kUnconstrained;
  int t_iters = 0;
  int t_max = 200000;
  double epsilon = 0.1;
  double phi = 0.0;
  double alpha = 0.0;  // 0 -> solver default
  double eta = 0.0;    // 0 -> solver default

  std::string out_path;  // when nonempty, rows stream to this CSV file

  void validate() const;
  static ExperimentSpec from_json(const std::string& text);
};

/// One completed grid point.
struct ReportRow {
  int n = 0;
  int seed = 0;  // seed index within the sweep
  SolverMode mode = SolverMode::kUnconstrained;
  double j0_mix = 0.0;
  double j0_star = 0.0;
  double subopt = 0.0;
  Vec violations;  // per-constraint max(0, tau_i - J_i(mixture)); empty when
                   // the run is effectively unconstrained
  double c_star = 0.0;  // concentrability of the comparator vs the behavior
  int t_iters = 0;
  double wall_ms = 0.0;  // solve call only

  double viol_max() const;
};

/// Per-n aggregate used by the summary report.
struct SummaryLine {
  int n = 0;
  int count = 0;
  double subopt_median = 0.0;
  double subopt_iqr = 0.0;
  double viol_median = 0.0;
  double viol_iqr = 0.0;
  double wall_ms_median = 0.0;
};

/// Linear-interpolation quantile of an unsorted sample, p in [0, 1].
double quantile(std::vector<double> values, double p);

std::string report_header();
std::string to_csv_line(const ReportRow& row);

/// Runs every (n, seed) grid point. Points execute on a small worker pool;
/// rows are committed in grid order and, when the spec names an output file,
/// streamed to it as they complete so an interrupted run keeps everything
/// already finished. Grid points that cannot produce a row (infeasible
/// instance, failed solve) are reported on stderr and skipped.
std::vector<ReportRow> run_experiment(const ExperimentSpec& spec);

std::vector<SummaryLine> summarize(const std::vector<ReportRow>& rows);

/// Renders rows either as the report CSV ("csv") or as per-n medians and
/// interquartile ranges ("summary").
std::string report(const std::vector<ReportRow>& rows, const std::string& format);

}  // namespace saddle
