#include "saddle/estimators.hpp"

#include "saddle/errors.hpp"

namespace saddle {

ValueAtStates v_values(const Vec& zeta, const SoftmaxPolicy& pi,
                       const OfflineDataset& ds, const KnownModel& km) {
  ValueAtStates out;
  {
    const Mat block = km.state_block(km.s0);
    out.at_s0 = softmax_block(block, pi.z).dot(block * zeta);
  }
  out.at_next.resize(ds.n);
  for (int k = 0; k < ds.n; ++k) {
    const Mat block = km.state_block(ds.s_next[k]);
    out.at_next[k] = softmax_block(block, pi.z).dot(block * zeta);
  }
  return out;
}

Vec psi_v_hat(const ValueAtStates& vals, const OfflineDataset& ds,
              const GramMatrix& gram) {
  if (vals.at_next.size() != ds.n) {
    throw ArgumentError("psi_v_hat: value vector length must equal the sample count");
  }
  return gram.reg_solve(ds.feature_rows.transpose() * vals.at_next);
}

Vec phi_mu_hat(const CoefLambda& c_prime, const SoftmaxPolicy& pi,
               const OfflineDataset& ds, const KnownModel& km) {
  if (c_prime.coefs.size() != ds.n) {
    throw ArgumentError("phi_mu_hat: coefficient length must equal the sample count");
  }
  const Mat s0_block = km.state_block(km.s0);
  Vec out = (1.0 - km.gamma) * (s0_block.transpose() * softmax_block(s0_block, pi.z));
  if (km.gamma > 0.0) {
    Vec acc = Vec::Zero(km.dim);
    for (int k = 0; k < ds.n; ++k) {
      if (c_prime.coefs[k] == 0.0) continue;
      const Mat block = km.state_block(ds.s_next[k]);
      acc += c_prime.coefs[k] * (block.transpose() * softmax_block(block, pi.z));
    }
    out += (km.gamma / ds.n) * acc;
  }
  return out;
}

}  // namespace saddle
