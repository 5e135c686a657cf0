#pragma once

#include "saddle/known.hpp"
#include "saddle/spanner.hpp"
#include "saddle/types.hpp"

namespace saddle {

/// Softmax policy pi(a|s) proportional to exp(<phi(s,a), z>); z accumulates
/// the scaled ball-player directions over iterations.
struct SoftmaxPolicy {
  Vec z;
};

/// Radii and step sizes of the four per-iteration strategies.
struct PlayerBounds {
  double d_zeta = 0.0;   // ball radius of the direction player
  double d_w = 0.0;      // scale of the constraint-weight simplex
  double d_pi = 0.0;     // policy-parameter radius alpha * T * d_zeta
  double alpha = 0.0;    // policy step size
  double oco_step = 0.0; // gradient step size of the coefficient player
  double c_star = 0.0;   // coefficient box bound (the concentrability bound)
};

/// Action distribution of the softmax policy at one state, stabilized by
/// subtracting the max logit.
Vec softmax_at(const SoftmaxPolicy& pol, int s, const KnownModel& km);

/// Softmax probabilities for an explicit |A| x d feature block.
Vec softmax_block(const Mat& block, const Vec& z);

/// Policy update z <- z + alpha * zeta (multiplicative-weights in logit form).
SoftmaxPolicy pi_update(const SoftmaxPolicy& pol, const Vec& zeta, double alpha);

/// Minimizer of <zeta, g> over the radius-d_zeta ball: -d_zeta * g / |g|,
/// or zero when g vanishes.
Vec zeta_greedy(const Vec& g, double d_zeta);

/// Minimizer of <w, tau - Theta^T lambda> over {w >= 0, sum w <= d_w}:
/// either zero or d_w on the most negative coordinate (lowest index wins
/// ties).
Vec w_greedy(const Vec& lambda, const Mat& thetas, const Vec& tau, double d_w);

/// One projected gradient-ascent step on <lambda(c), xi_hat> in coefficient
/// space, clipped to the box [-bound, bound]^n.
CoefLambda oco_step(const CoefLambda& c, const Vec& xi_hat, const OfflineDataset& ds,
                    double eta, double bound);

/// In-place coefficient update used by oco_step; x = feature_rows.
void oco_step_core(Vec& coefs, const Mat& x, const Vec& xi_hat, double eta,
                   double bound);

/// Full tabular policy induced by z over every state (oracle-side helper).
TabularPolicy materialize_policy(const Mat& phi, int num_actions, const Vec& z);

}  // namespace saddle
