#pragma once

#include "saddle/dataset.hpp"
#include "saddle/types.hpp"

namespace saddle {

/// Approximate barycentric spanner of the dataset feature rows: a subset of
/// at most d rows such that every row is a linear combination of the subset
/// with coefficients bounded by the approximation constant.
struct Spanner {
  std::vector<int> indices;  // dataset row indices of the basis, size = rank
  Mat basis;                 // rank x d, the chosen feature rows
  Mat conversion;            // n x rank, entry (k, j) = b_{kj}
  int rank = 0;
};

/// Coefficient vector over dataset indices together with the vector it
/// parameterizes, lambda(c) = (1/n) sum_k c_k phi(s_k, a_k).
struct CoefLambda {
  Vec coefs;
  double bound = 0.0;
  Vec lambda;
};

/// Builds a CoefLambda with a consistent cached lambda.
CoefLambda make_coef_lambda(const Vec& c, double bound, const OfflineDataset& ds);

/// Exact weighted feature average lambda(c).
Vec lambda_of(const Vec& c, const OfflineDataset& ds);

/// Swap algorithm: starts from a maximal independent subset found by
/// column-pivoted factorization, then swaps in any row whose substitution
/// multiplies the working-basis determinant (within the feature span) by
/// more than c_approx. Rank-deficient inputs are handled by working in an
/// orthonormal basis of the span.
Spanner compute_spanner(const OfflineDataset& ds, double c_approx = 2.0);

/// Re-expresses c on the spanner indices: c'_j = sum_k b_{kj} c_k, leaving
/// lambda(.) unchanged. The returned bound is max_j |c'_j|.
CoefLambda convert_coeffs(const CoefLambda& c, const Spanner& sp);

}  // namespace saddle
