#pragma once

#include "saddle/dataset.hpp"
#include "saddle/known.hpp"
#include "saddle/players.hpp"
#include "saddle/spanner.hpp"
#include "saddle/types.hpp"

namespace saddle {

/// Policy-averaged feature values at the only states the solver may touch:
/// the initial state and the dataset's next states.
struct ValueAtStates {
  double at_s0 = 0.0;
  Vec at_next;  // length n
};

/// v(s) = sum_a pi(a|s) <zeta, phi(s,a)> evaluated at s0 and all next states.
ValueAtStates v_values(const Vec& zeta, const SoftmaxPolicy& pi,
                       const OfflineDataset& ds, const KnownModel& km);

/// Regularized least-squares estimate
/// (n lambda_hat + I)^{-1} sum_k v(s'_k) phi(s_k, a_k)
/// using the Gram matrix's cached factorization.
Vec psi_v_hat(const ValueAtStates& vals, const OfflineDataset& ds,
              const GramMatrix& gram);

/// Plug-in feature expectation of the measure induced by lambda(c') and pi:
/// (1-gamma) phi(s0, pi) + (gamma/n) sum_k c'_k phi(s'_k, pi),
/// where phi(s, pi) = sum_a pi(a|s) phi(s, a).
Vec phi_mu_hat(const CoefLambda& c_prime, const SoftmaxPolicy& pi,
               const OfflineDataset& ds, const KnownModel& km);

}  // namespace saddle
