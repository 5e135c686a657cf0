#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Cholesky>

#include "saddle/lmdp.hpp"
#include "saddle/types.hpp"

namespace saddle {

/// Behavior distribution over state-action pairs, as an explicit table.
struct BehaviorDistribution {
  Vec probs;  // length |S|*|A|, nonnegative, sums to 1

  void validate() const;
};

/// Offline dataset of n i.i.d. triples (s_k, a_k, s'_k) with the feature rows
/// of the sampled pairs cached. Immutable after construction.
struct OfflineDataset {
  IVec s;            // length n
  IVec a;            // length n
  IVec s_next;       // length n
  Mat feature_rows;  // n x d, row k = phi(s_k, a_k)
  int n = 0;

  /// CSV with header k,s,a,s_next and one row per triple.
  std::string to_csv() const;

  /// Parses the CSV form; feature rows are rebuilt from the supplied feature
  /// matrix (row layout s*num_actions + a).
  static OfflineDataset from_csv(const std::string& text, const Mat& phi,
                                 int num_actions);
};

/// Empirical second-moment matrix of the dataset features and its derived
/// inverses. The regularized factorization is computed once and reused for
/// every least-squares solve.
struct GramMatrix {
  Mat lambda_hat;           // (1/n) sum phi_k phi_k^T
  Mat pseudo_inverse;       // Moore-Penrose inverse of lambda_hat
  Mat regularized_inverse;  // (n lambda_hat + I)^{-1}
  Eigen::LDLT<Mat> reg_factor;
  int n = 0;

  /// Solves (n lambda_hat + I) x = rhs via the cached factorization.
  Vec reg_solve(const Vec& rhs) const { return reg_factor.solve(rhs); }
};

/// Draws n i.i.d. pairs from mu_b and next states from the instance kernel.
OfflineDataset sample_dataset(const LinearCmdp& mdp, const BehaviorDistribution& mu_b,
                              int n, std::uint64_t seed);

/// Computes the Gram matrix, its pseudo-inverse (eigenvalue cutoff at
/// 1e-10 times the largest eigenvalue) and the regularized inverse.
GramMatrix gram_matrix(const OfflineDataset& ds);

/// Concentrability of the target policy's occupancy against the behavior
/// distribution: max ratio over pairs the behavior can sample. Pairs with
/// zero occupancy are ignored; positive occupancy outside the behavior
/// support is a coverage error.
double concentrability(const LinearCmdp& mdp, const TabularPolicy& target,
                       const BehaviorDistribution& mu_b);

/// Oracle-side check that every sampled next state is actually reachable.
void validate_dataset(const LinearCmdp& mdp, const OfflineDataset& ds);

}  // namespace saddle
