#pragma once

#include "saddle/lmdp.hpp"
#include "saddle/types.hpp"

namespace saddle {

/// Oracle-side Lagrangian machinery. These functions see the full instance
/// (including Psi) and exist to verify identities and measure per-iteration
/// regret; the solver never calls them.

/// Occupancy-like measure induced by a lambda vector and a policy:
/// mu(s,a) = pi(a|s) [(1-gamma) nu0(s) + gamma <psi(s), lambda>].
Vec mu_of_lambda(const LinearCmdp& mdp, const Vec& lambda, const TabularPolicy& pi);

/// Policy-averaged action-value surrogate v(s) = sum_a pi(a|s) <zeta, phi(s,a)>
/// over all states.
Vec v_of_zeta(const LinearCmdp& mdp, const Vec& zeta, const TabularPolicy& pi);

/// Feature expectation Phi^T mu_of_lambda, the exact counterpart of the
/// data-driven mu-estimate.
Vec phi_mu_exact(const LinearCmdp& mdp, const Vec& lambda, const TabularPolicy& pi);

/// Exact Psi v for a full state-value vector.
Vec psi_v_exact(const LinearCmdp& mdp, const Vec& v_full);

/// Lagrangian of the unconstrained saddle problem, occupancy form:
/// f = <lambda, theta_0> + <zeta, Phi^T mu_{lambda,pi} - lambda>.
double lagrangian_primal(const LinearCmdp& mdp, const Vec& zeta, const Vec& lambda,
                         const TabularPolicy& pi);

/// Same Lagrangian, value form:
/// f = (1-gamma) v(s0) + <lambda, theta_0 + gamma Psi v - zeta>.
double lagrangian_dual(const LinearCmdp& mdp, const Vec& zeta, const Vec& lambda,
                       const TabularPolicy& pi);

/// Constrained Lagrangian, occupancy form: adds -<w, tau - Theta^T lambda>.
double lagrangian_primal_constrained(const LinearCmdp& mdp, const Vec& zeta,
                                     const Vec& lambda, const Vec& w,
                                     const TabularPolicy& pi, const Vec& tau);

/// Constrained Lagrangian, value form.
double lagrangian_dual_constrained(const LinearCmdp& mdp, const Vec& zeta,
                                   const Vec& lambda, const Vec& w,
                                   const TabularPolicy& pi, const Vec& tau);

/// L(pi, w) = J_0(pi) + <w, J(pi) - tau>, from exact returns.
double lagrange_value(const LinearCmdp& mdp, const TabularPolicy& pi, const Vec& w,
                      const Vec& tau);

}  // namespace saddle
