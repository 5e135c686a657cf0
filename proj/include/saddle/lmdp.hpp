#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "saddle/types.hpp"

namespace saddle {

/// Synthetic linear (constrained) MDP. Transitions factor through the feature
/// map as P = Phi * Psi and rewards as r_i = Phi * theta_i. Every feature row
/// phi(s,a) lies on the probability simplex and every row of Psi is a
/// probability distribution over states, so P is automatically a valid
/// transition kernel and the measure-norm bound constant d_psi equals 1.
struct LinearCmdp {
  int num_states = 0;
  int num_actions = 0;
  int dim = 0;
  Mat phi;                  // (|S|*|A|) x d, row pair_index(s, a)
  Mat psi;                  // d x |S|, row i is the measure psi_i over states
  std::vector<Vec> thetas;  // theta_0 .. theta_I, each length d, entries in [0,1]
  double gamma = 0.0;       // discount in [0, 1)
  int s0 = 0;               // initial state (point-mass initial distribution)
  Vec tau;                  // constraint thresholds, length I
  double d_psi = 1.0;

  int pair_index(int s, int a) const { return s * num_actions + a; }
  int num_pairs() const { return num_states * num_actions; }
  int num_constraints() const { return static_cast<int>(thetas.size()) - 1; }

  /// Reward vector r_i over all (s,a) pairs.
  Vec reward(int i) const;

  /// Columns theta_1..theta_I stacked as a d x I matrix (empty when I = 0).
  Mat theta_matrix() const;

  /// Throws ArgumentError when any structural invariant fails.
  void validate() const;

  std::string to_json() const;
  static LinearCmdp from_json(const std::string& text);
};

/// Tabular policy pi(a|s) as an |S| x |A| row-stochastic matrix.
struct TabularPolicy {
  Mat probs;

  void validate() const;
  static TabularPolicy uniform(int num_states, int num_actions);
};

/// Exact evaluation of a policy under the linearized reward r_0 + w . r.
struct ExactEval {
  Vec v;          // V over states
  Mat q;          // Q, |S| x |A|
  Vec zeta;       // theta_0 + Theta w + gamma * Psi V
  double j;       // normalized return (1-gamma) <nu0, V>
  Vec mu;         // occupancy over (s,a) pairs, sums to 1
  Vec lambda_pi;  // Phi^T mu
  Vec nu;         // state occupancy
};

/// Result of the unconstrained oracle: greedy-optimal policy and its return.
struct UnconstrainedOpt {
  TabularPolicy policy;
  double j_star = 0.0;
};

/// Result of the constrained oracle (single constraint).
struct ConstrainedOpt {
  double j0_star = 0.0;        // dual upper bound on the constrained optimum
  double slater_margin = 0.0;  // best constraint slack seen over grid policies
  double w_at_min = 0.0;       // grid point attaining the dual minimum
};

/// Generates a random instance with simplex-sampled features and measures,
/// uniform [0,1] reward parameters, and thresholds initialized to zero for
/// the caller to overwrite. Deterministic per seed.
LinearCmdp build_random_cmdp(std::uint64_t seed, int num_states, int num_actions,
                             int dim, int num_constraints, double gamma);

/// Dense transition matrix P[(s,a), s'] = <phi(s,a), psi(s')>.
Mat transition_matrix(const LinearCmdp& mdp);

/// Exact policy evaluation by direct dense solves of the Bellman and
/// occupancy-flow systems.
ExactEval exact_eval(const LinearCmdp& mdp, const TabularPolicy& pi, const Vec& w);

/// Same as exact_eval but reuses a precomputed transition matrix.
ExactEval exact_eval_with_p(const LinearCmdp& mdp, const Mat& p,
                            const TabularPolicy& pi, const Vec& w);

/// Exact returns (J_0, ..., J_I) of a policy from one occupancy solve.
Vec all_returns(const LinearCmdp& mdp, const TabularPolicy& pi);
Vec all_returns_with_p(const LinearCmdp& mdp, const Mat& p, const TabularPolicy& pi);

/// Value iteration on r_0 to within tol of the optimum, then the greedy
/// policy; the returned j_star is that policy's exact return.
UnconstrainedOpt optimal_unconstrained(const LinearCmdp& mdp, double tol);

/// Dual grid search for the single-constraint optimum: minimizes
/// g(w) = max_pi [J_0(pi) + w (J_1(pi) - tau_1)] over a uniform grid of
/// w in [0, w_max]. The minimum is an upper bound on the constrained optimum
/// (tight as the grid refines); slater_margin is the best constraint slack
/// among the grid's greedy policies, a lower bound on the Slater constant.
ConstrainedOpt optimal_constrained(const LinearCmdp& mdp, const Vec& tau, int grid,
                                   double w_max = 20.0);

/// Constrained-optimal comparator for a single-constraint instance. The
/// optimum is attained by mixing the two scalarized greedy policies that
/// bracket the feasibility crossing of J_1; bisection on the scalarization
/// weight locates the crossing and the mixture occupancy is realized as one
/// stationary policy via its occupancy ratios.
struct ConstrainedComparator {
  TabularPolicy policy;  // stationary policy with the optimal mixture occupancy
  Vec j;                 // exact returns (J_0 .. J_I) of that policy
  double w_star = 0.0;   // scalarization weight at the crossing
  double beta = 1.0;     // mixture weight on the feasible-side greedy policy
};

ConstrainedComparator constrained_comparator(const LinearCmdp& mdp,
                                             double w_max = 20.0);

}  // namespace saddle
