#include "saddle/spanner.hpp"

#include <cmath>

#include <Eigen/QR>

#include "saddle/errors.hpp"

namespace saddle {

CoefLambda make_coef_lambda(const Vec& c, double bound, const OfflineDataset& ds) {
  CoefLambda out;
  out.coefs = c;
  out.bound = bound;
  out.lambda = lambda_of(c, ds);
  return out;
}

Vec lambda_of(const Vec& c, const OfflineDataset& ds) {
  if (c.size() != ds.n) {
    throw ArgumentError("lambda_of: coefficient length must equal the sample count");
  }
  return (ds.feature_rows.transpose() * c) / ds.n;
}

Spanner compute_spanner(const OfflineDataset& ds, double c_approx) {
  if (ds.n < 1) throw ArgumentError("compute_spanner: empty dataset");
  if (!(c_approx > 1.0)) {
    throw ArgumentError("compute_spanner: approximation constant must exceed 1");
  }
  const int n = ds.n;
  const int d = static_cast<int>(ds.feature_rows.cols());

  // Column-pivoted QR of the d x n transposed feature matrix: pivot order
  // gives a maximal independent subset, Q an orthonormal basis of the span.
  Eigen::ColPivHouseholderQR<Mat> qr(ds.feature_rows.transpose());
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  if (rank == 0) {
    throw DegenerateInputError("compute_spanner: all feature rows are zero");
  }

  Spanner sp;
  sp.rank = rank;
  sp.indices.resize(rank);
  const auto perm = qr.colsPermutation().indices();
  for (int j = 0; j < rank; ++j) sp.indices[j] = perm[j];

  const Mat q_basis = qr.householderQ() * Mat::Identity(d, rank);
  // Span coordinates of every row; all determinant work happens here.
  const Mat y = ds.feature_rows * q_basis;  // n x rank

  Mat m(rank, rank);  // rows = span coordinates of the current basis
  for (int j = 0; j < rank; ++j) m.row(j) = y.row(sp.indices[j]);

  const int cap = 64 * d * static_cast<int>(std::ceil(std::log2(d) + 1.0));
  int swaps = 0;
  Mat coeffs;  // n x rank, row k = coefficients of y_k in the basis
  while (true) {
    // Row k of coeffs solves m^T b = y_k; each |b_j| equals the factor by
    // which swapping row k into basis slot j scales |det m|.
    coeffs = m.transpose().partialPivLu().solve(y.transpose()).transpose();
    int best_k = -1, best_j = -1;
    double best = c_approx;
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < rank; ++j) {
        const double b = std::abs(coeffs(k, j));
        if (b > best) {
          best = b;
          best_k = k;
          best_j = j;
        }
      }
    }
    if (best_k < 0) break;
    sp.indices[best_j] = best_k;
    m.row(best_j) = y.row(best_k);
    if (++swaps > cap) {
      throw InternalError("compute_spanner: swap count exceeded the iteration cap");
    }
  }

  sp.conversion = coeffs;
  sp.basis.resize(rank, d);
  for (int j = 0; j < rank; ++j) sp.basis.row(j) = ds.feature_rows.row(sp.indices[j]);
  return sp;
}

CoefLambda convert_coeffs(const CoefLambda& c, const Spanner& sp) {
  const int n = static_cast<int>(sp.conversion.rows());
  if (c.coefs.size() != n) {
    throw ArgumentError("convert_coeffs: coefficient length must equal the sample count");
  }
  if (!std::isfinite(c.bound)) {
    throw ArgumentError("convert_coeffs: coefficient bound must be finite");
  }
  const Vec on_basis = sp.conversion.transpose() * c.coefs;  // length rank
  CoefLambda out;
  out.coefs = Vec::Zero(n);
  for (int j = 0; j < sp.rank; ++j) out.coefs[sp.indices[j]] += on_basis[j];
  out.bound = out.coefs.cwiseAbs().maxCoeff();
  out.lambda = (sp.basis.transpose() * on_basis) / n;
  return out;
}

}  // namespace saddle
