#include "saddle/lagrangian.hpp"

#include "saddle/errors.hpp"

namespace saddle {

Vec mu_of_lambda(const LinearCmdp& mdp, const Vec& lambda, const TabularPolicy& pi) {
  const Vec state_mass = mdp.gamma * (mdp.psi.transpose() * lambda);
  Vec mu(mdp.num_pairs());
  for (int s = 0; s < mdp.num_states; ++s) {
    const double base = (s == mdp.s0 ? 1.0 - mdp.gamma : 0.0) + state_mass[s];
    for (int a = 0; a < mdp.num_actions; ++a) {
      mu[mdp.pair_index(s, a)] = pi.probs(s, a) * base;
    }
  }
  return mu;
}

Vec v_of_zeta(const LinearCmdp& mdp, const Vec& zeta, const TabularPolicy& pi) {
  const Vec q = mdp.phi * zeta;
  Vec v = Vec::Zero(mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      v[s] += pi.probs(s, a) * q[mdp.pair_index(s, a)];
    }
  }
  return v;
}

Vec phi_mu_exact(const LinearCmdp& mdp, const Vec& lambda, const TabularPolicy& pi) {
  return mdp.phi.transpose() * mu_of_lambda(mdp, lambda, pi);
}

Vec psi_v_exact(const LinearCmdp& mdp, const Vec& v_full) {
  return mdp.psi * v_full;
}

double lagrangian_primal(const LinearCmdp& mdp, const Vec& zeta, const Vec& lambda,
                         const TabularPolicy& pi) {
  const Vec feat = phi_mu_exact(mdp, lambda, pi);
  return lambda.dot(mdp.thetas[0]) + zeta.dot(feat - lambda);
}

double lagrangian_dual(const LinearCmdp& mdp, const Vec& zeta, const Vec& lambda,
                       const TabularPolicy& pi) {
  const Vec v = v_of_zeta(mdp, zeta, pi);
  const Vec inner = mdp.thetas[0] + mdp.gamma * (mdp.psi * v) - zeta;
  return (1.0 - mdp.gamma) * v[mdp.s0] + lambda.dot(inner);
}

namespace {

double constraint_term(const LinearCmdp& mdp, const Vec& lambda, const Vec& w,
                       const Vec& tau) {
  if (w.size() != mdp.num_constraints() || tau.size() != w.size()) {
    throw ArgumentError("lagrangian: w and tau must match the constraint count");
  }
  if (w.size() == 0) return 0.0;
  const Vec g = tau - mdp.theta_matrix().transpose() * lambda;
  return -w.dot(g);
}

}  // namespace

double lagrangian_primal_constrained(const LinearCmdp& mdp, const Vec& zeta,
                                     const Vec& lambda, const Vec& w,
                                     const TabularPolicy& pi, const Vec& tau) {
  return lagrangian_primal(mdp, zeta, lambda, pi) + constraint_term(mdp, lambda, w, tau);
}

double lagrangian_dual_constrained(const LinearCmdp& mdp, const Vec& zeta,
                                   const Vec& lambda, const Vec& w,
                                   const TabularPolicy& pi, const Vec& tau) {
  return lagrangian_dual(mdp, zeta, lambda, pi) + constraint_term(mdp, lambda, w, tau);
}

double lagrange_value(const LinearCmdp& mdp, const TabularPolicy& pi, const Vec& w,
                      const Vec& tau) {
  const Vec js = all_returns(mdp, pi);
  double out = js[0];
  for (int i = 0; i < w.size(); ++i) out += w[i] * (js[i + 1] - tau[i]);
  return out;
}

}  // namespace saddle
