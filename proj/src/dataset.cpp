#include "saddle/dataset.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "saddle/errors.hpp"
#include "saddle/rng.hpp"

namespace saddle {

void BehaviorDistribution::validate() const {
  if (probs.size() == 0) throw ArgumentError("BehaviorDistribution: empty table");
  if (probs.minCoeff() < 0.0) {
    throw ArgumentError("BehaviorDistribution: negative probability");
  }
  if (std::abs(probs.sum() - 1.0) > 1e-12) {
    throw ArgumentError("BehaviorDistribution: probabilities must sum to 1");
  }
  if (probs.maxCoeff() <= 0.0) {
    throw ArgumentError("BehaviorDistribution: support is empty");
  }
}

std::string OfflineDataset::to_csv() const {
  std::ostringstream out;
  out << "k,s,a,s_next\n";
  for (int k = 0; k < n; ++k) {
    out << k << ',' << s[k] << ',' << a[k] << ',' << s_next[k] << '\n';
  }
  return out.str();
}

OfflineDataset OfflineDataset::from_csv(const std::string& text, const Mat& phi,
                                        int num_actions) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "k,s,a,s_next") {
    throw ArgumentError("OfflineDataset: missing k,s,a,s_next header");
  }
  std::vector<int> ss, as, ns;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int k, sv, av, nv;
    char c1, c2, c3;
    std::istringstream row(line);
    if (!(row >> k >> c1 >> sv >> c2 >> av >> c3 >> nv) || c1 != ',' || c2 != ',' ||
        c3 != ',') {
      throw ArgumentError("OfflineDataset: malformed row: " + line);
    }
    ss.push_back(sv);
    as.push_back(av);
    ns.push_back(nv);
  }
  OfflineDataset ds;
  ds.n = static_cast<int>(ss.size());
  if (ds.n == 0) throw ArgumentError("OfflineDataset: no rows");
  ds.s = Eigen::Map<const IVec>(ss.data(), ds.n);
  ds.a = Eigen::Map<const IVec>(as.data(), ds.n);
  ds.s_next = Eigen::Map<const IVec>(ns.data(), ds.n);
  ds.feature_rows.resize(ds.n, phi.cols());
  const int num_states = static_cast<int>(phi.rows()) / num_actions;
  for (int k = 0; k < ds.n; ++k) {
    if (ds.s[k] < 0 || ds.s[k] >= num_states || ds.a[k] < 0 || ds.a[k] >= num_actions ||
        ds.s_next[k] < 0 || ds.s_next[k] >= num_states) {
      throw ArgumentError("OfflineDataset: index out of range in row " +
                          std::to_string(k));
    }
    ds.feature_rows.row(k) = phi.row(ds.s[k] * num_actions + ds.a[k]);
  }
  return ds;
}

OfflineDataset sample_dataset(const LinearCmdp& mdp, const BehaviorDistribution& mu_b,
                              int n, std::uint64_t seed) {
  if (n < 1) throw ArgumentError("sample_dataset: n must be positive");
  mu_b.validate();
  if (mu_b.probs.size() != mdp.num_pairs()) {
    throw ArgumentError("sample_dataset: behavior table size must be |S||A|");
  }
  const Mat p = transition_matrix(mdp);
  Rng rng(seed);
  OfflineDataset ds;
  ds.n = n;
  ds.s.resize(n);
  ds.a.resize(n);
  ds.s_next.resize(n);
  ds.feature_rows.resize(n, mdp.dim);
  for (int k = 0; k < n; ++k) {
    const int pair = rng.categorical(mu_b.probs);
    ds.s[k] = pair / mdp.num_actions;
    ds.a[k] = pair % mdp.num_actions;
    ds.s_next[k] = rng.categorical(p.row(pair).transpose());
    ds.feature_rows.row(k) = mdp.phi.row(pair);
  }
  return ds;
}

GramMatrix gram_matrix(const OfflineDataset& ds) {
  if (ds.n < 1) throw ArgumentError("gram_matrix: empty dataset");
  const int d = static_cast<int>(ds.feature_rows.cols());
  GramMatrix out;
  out.n = ds.n;
  out.lambda_hat = (ds.feature_rows.transpose() * ds.feature_rows) / ds.n;
  out.lambda_hat = 0.5 * (out.lambda_hat + out.lambda_hat.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> eig(out.lambda_hat);
  const Vec evals = eig.eigenvalues();
  const double cutoff = 1e-10 * std::max(evals.maxCoeff(), 0.0);
  Vec inv_evals = Vec::Zero(d);
  for (int i = 0; i < d; ++i) {
    if (evals[i] > cutoff && evals[i] > 0.0) inv_evals[i] = 1.0 / evals[i];
  }
  out.pseudo_inverse =
      eig.eigenvectors() * inv_evals.asDiagonal() * eig.eigenvectors().transpose();

  const Mat reg = static_cast<double>(ds.n) * out.lambda_hat + Mat::Identity(d, d);
  out.reg_factor = reg.ldlt();
  out.regularized_inverse = out.reg_factor.solve(Mat::Identity(d, d));
  return out;
}

double concentrability(const LinearCmdp& mdp, const TabularPolicy& target,
                       const BehaviorDistribution& mu_b) {
  mu_b.validate();
  if (mu_b.probs.size() != mdp.num_pairs()) {
    throw ArgumentError("concentrability: behavior table size must be |S||A|");
  }
  const Vec mu = exact_eval(mdp, target, Vec::Zero(mdp.num_constraints())).mu;
  // Dense occupancy solves leave tiny negative/positive dust on unvisited
  // pairs; mass below this threshold counts as unsupported.
  const double support_tol = 1e-12;
  double c_star = 0.0;
  for (int i = 0; i < mu.size(); ++i) {
    if (mu[i] <= support_tol) continue;
    if (mu_b.probs[i] <= 0.0) {
      const int s = i / mdp.num_actions;
      const int a = i % mdp.num_actions;
      throw CoverageError("concentrability: target visits pair (s=" +
                          std::to_string(s) + ", a=" + std::to_string(a) +
                          ") outside the behavior support");
    }
    c_star = std::max(c_star, mu[i] / mu_b.probs[i]);
  }
  return c_star;
}

void validate_dataset(const LinearCmdp& mdp, const OfflineDataset& ds) {
  const Mat p = transition_matrix(mdp);
  for (int k = 0; k < ds.n; ++k) {
    const int pair = mdp.pair_index(ds.s[k], ds.a[k]);
    if (p(pair, ds.s_next[k]) <= 0.0) {
      throw ArgumentError("dataset: unreachable next state in row " + std::to_string(k));
    }
    if ((ds.feature_rows.row(k) - mdp.phi.row(pair)).cwiseAbs().maxCoeff() != 0.0) {
      throw ArgumentError("dataset: cached feature row mismatch at row " +
                          std::to_string(k));
    }
  }
}

}  // namespace saddle
