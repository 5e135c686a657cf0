#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "saddle/dataset.hpp"
#include "saddle/estimators.hpp"
#include "saddle/known.hpp"
#include "saddle/players.hpp"
#include "saddle/spanner.hpp"
#include "saddle/types.hpp"

namespace saddle {

enum class SolverMode {
  kUnconstrained,
  kConstrained,
  kConstrainedExactFeasibility,
};

std::string to_string(SolverMode mode);
SolverMode solver_mode_from_string(const std::string& name);

/// Solver configuration. Zero-valued entries of bounds, t_iters and
/// tau_input are derived by finalize_config; explicitly set values are
/// validated against the mode's requirements.
struct SolverConfig {
  int t_iters = 0;      // 0 -> ceil(d log|A| / ((1-gamma)^2 eps^2)), capped
  int t_max = 200000;
  SolverMode mode = SolverMode::kUnconstrained;
  double epsilon = 0.1;
  double phi = 0.0;     // Slater margin, required for constrained modes
  Vec tau_input;        // thresholds fed to the loop; derived per mode
  std::uint64_t seed = 0;
  PlayerBounds bounds;
  bool record_iterates = true;
};

/// The returned policy: T softmax parameters, executed as a uniform mixture.
struct MixturePolicy {
  Mat zs;  // T x d, row t parameterizes pi_t
  double alpha = 0.0;

  std::string to_json() const;
  static MixturePolicy from_json(const std::string& text);
};

/// Per-iteration records of a solve, plus oracle diagnostics filled in
/// afterwards by annotate_trace (never by the solver itself).
struct RunTrace {
  Vec zeta_obj;     // <zeta_t, g_t>, the direction player's objective value
  Vec lambda_norm;  // |lambda(c'_t)|
  Mat ws;           // T x I
  Mat zetas;        // T x d when record_iterates, else empty
  Mat lambdas;      // T x d when record_iterates, else empty
  Vec j_pi;             // oracle: J_0(pi_t)
  Mat j_constraints;    // oracle: T x I of J_i(pi_t)
  PlayerBounds bounds;  // effective values used
  Vec tau_input;
  int t_iters = 0;
};

/// Fills every derived field of the config for the given instance knowledge
/// and sample count, and validates the mode invariants.
SolverConfig finalize_config(SolverConfig cfg, const KnownModel& km, int n);

/// Runs the primal-dual loop on the dataset. The inputs carry no transition
/// information; everything data-driven comes from the dataset and the two
/// estimators. Deterministic for fixed inputs.
std::pair<MixturePolicy, RunTrace> solve(const OfflineDataset& ds,
                                         const KnownModel& km,
                                         const SolverConfig& cfg);

/// Exact returns (J_0, ..., J_I) of the uniform mixture over the iterate
/// policies; the mixture runs one sampled policy for a whole trajectory, so
/// its return is the arithmetic mean of per-iterate returns.
Vec evaluate_mixture(const LinearCmdp& mdp, const MixturePolicy& mix);

/// Oracle-side diagnostics: fills j_pi and j_constraints of an existing
/// trace from exact evaluations of each iterate policy.
void annotate_trace(const LinearCmdp& mdp, const MixturePolicy& mix, RunTrace& trace);

}  // namespace saddle
