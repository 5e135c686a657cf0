#include "saddle/players.hpp"

#include <cmath>

#include "saddle/errors.hpp"

namespace saddle {

Vec softmax_block(const Mat& block, const Vec& z) {
  Vec logits = block * z;
  logits.array() -= logits.maxCoeff();
  Vec probs = logits.array().exp();
  return probs / probs.sum();
}

Vec softmax_at(const SoftmaxPolicy& pol, int s, const KnownModel& km) {
  return softmax_block(km.state_block(s), pol.z);
}

SoftmaxPolicy pi_update(const SoftmaxPolicy& pol, const Vec& zeta, double alpha) {
  SoftmaxPolicy out;
  out.z = pol.z + alpha * zeta;
  return out;
}

Vec zeta_greedy(const Vec& g, double d_zeta) {
  if (!(d_zeta > 0.0)) throw ArgumentError("zeta_greedy: radius must be positive");
  const double norm = g.norm();
  if (norm <= 1e-14) return Vec::Zero(g.size());
  return (-d_zeta / norm) * g;
}

Vec w_greedy(const Vec& lambda, const Mat& thetas, const Vec& tau, double d_w) {
  const int i_count = static_cast<int>(thetas.cols());
  if (i_count < 1) throw ArgumentError("w_greedy: no constraints");
  if (tau.size() != i_count) {
    throw ArgumentError("w_greedy: tau length must match constraint count");
  }
  const Vec g = tau - thetas.transpose() * lambda;
  int best = 0;
  for (int i = 1; i < i_count; ++i) {
    if (g[i] < g[best]) best = i;
  }
  Vec w = Vec::Zero(i_count);
  if (g[best] < 0.0) w[best] = d_w;
  return w;
}

void oco_step_core(Vec& coefs, const Mat& x, const Vec& xi_hat, double eta,
                   double bound) {
  coefs += (eta / x.rows()) * (x * xi_hat);
  coefs = coefs.cwiseMax(-bound).cwiseMin(bound);
}

CoefLambda oco_step(const CoefLambda& c, const Vec& xi_hat, const OfflineDataset& ds,
                    double eta, double bound) {
  if (c.coefs.size() != ds.n) {
    throw ArgumentError("oco_step: coefficient length must equal the sample count");
  }
  if (c.coefs.cwiseAbs().maxCoeff() > bound + 1e-12) {
    throw ArgumentError("oco_step: coefficients start outside the box");
  }
  Vec next = c.coefs;
  oco_step_core(next, ds.feature_rows, xi_hat, eta, bound);
  return make_coef_lambda(next, bound, ds);
}

TabularPolicy materialize_policy(const Mat& phi, int num_actions, const Vec& z) {
  const int num_states = static_cast<int>(phi.rows()) / num_actions;
  TabularPolicy pi;
  pi.probs.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    pi.probs.row(s) =
        softmax_block(phi.middleRows(static_cast<Eigen::Index>(s) * num_actions,
                                     num_actions),
                      z)
            .transpose();
  }
  return pi;
}

}  // namespace saddle
