#include "saddle/lmdp.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

#include "saddle/errors.hpp"
#include "saddle/rng.hpp"

namespace saddle {

namespace {

std::vector<double> flatten(const Mat& m) {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(m.size()));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Mat unflatten(const std::vector<double>& v, int rows, int cols) {
  if (static_cast<int>(v.size()) != rows * cols) {
    throw ArgumentError("LinearCmdp: matrix payload has wrong length");
  }
  Mat m(rows, cols);
  size_t k = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = v[k++];
  }
  return m;
}

}  // namespace

namespace {

// Policy-averaged transition matrix P_pi[s, s'] and reward vector r_pi.
Mat policy_transition(const LinearCmdp& mdp, const Mat& p, const TabularPolicy& pi) {
  Mat p_pi = Mat::Zero(mdp.num_states, mdp.num_states);
  for (int s = 0; s < mdp.num_states; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      p_pi.row(s) += pi.probs(s, a) * p.row(mdp.pair_index(s, a));
    }
  }
  return p_pi;
}

// State occupancy nu solving nu = (1-gamma) e_{s0} + gamma P_pi^T nu, then
// expanded to pairs by the policy.
void occupancy(const LinearCmdp& mdp, const Mat& p_pi, const TabularPolicy& pi,
               Vec* nu, Vec* mu) {
  const int ns = mdp.num_states;
  Mat lhs = Mat::Identity(ns, ns) - mdp.gamma * p_pi.transpose();
  Vec rhs = Vec::Zero(ns);
  rhs[mdp.s0] = 1.0 - mdp.gamma;
  *nu = lhs.partialPivLu().solve(rhs);
  mu->resize(mdp.num_pairs());
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      (*mu)[mdp.pair_index(s, a)] = pi.probs(s, a) * (*nu)[s];
    }
  }
}

}  // namespace

Vec LinearCmdp::reward(int i) const {
  return phi * thetas.at(static_cast<size_t>(i));
}

Mat LinearCmdp::theta_matrix() const {
  const int i_count = num_constraints();
  Mat theta(dim, i_count);
  for (int i = 0; i < i_count; ++i) theta.col(i) = thetas[static_cast<size_t>(i + 1)];
  return theta;
}

void LinearCmdp::validate() const {
  if (num_states < 1 || num_actions < 1) {
    throw ArgumentError("LinearCmdp: state and action counts must be positive");
  }
  if (dim < 1 || dim > num_pairs()) {
    throw ArgumentError("LinearCmdp: feature dimension must be in [1, |S||A|]");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ArgumentError("LinearCmdp: discount must lie in [0, 1)");
  }
  if (s0 < 0 || s0 >= num_states) {
    throw ArgumentError("LinearCmdp: initial state out of range");
  }
  if (phi.rows() != num_pairs() || phi.cols() != dim) {
    throw ArgumentError("LinearCmdp: phi has wrong shape");
  }
  if (psi.rows() != dim || psi.cols() != num_states) {
    throw ArgumentError("LinearCmdp: psi has wrong shape");
  }
  if (thetas.empty()) throw ArgumentError("LinearCmdp: theta_0 is required");
  if (tau.size() != num_constraints()) {
    throw ArgumentError("LinearCmdp: tau length must match constraint count");
  }
  const double tol = 1e-12;
  for (int r = 0; r < phi.rows(); ++r) {
    if (phi.row(r).minCoeff() < -tol || std::abs(phi.row(r).sum() - 1.0) > tol) {
      throw ArgumentError("LinearCmdp: feature rows must lie on the simplex");
    }
  }
  for (int r = 0; r < psi.rows(); ++r) {
    if (psi.row(r).minCoeff() < -tol || std::abs(psi.row(r).sum() - 1.0) > tol) {
      throw ArgumentError("LinearCmdp: psi rows must be distributions");
    }
  }
  for (const Vec& th : thetas) {
    if (th.size() != dim) throw ArgumentError("LinearCmdp: theta has wrong length");
    if (th.minCoeff() < 0.0 || th.maxCoeff() > 1.0) {
      throw ArgumentError("LinearCmdp: theta entries must lie in [0, 1]");
    }
  }
}

std::string LinearCmdp::to_json() const {
  nlohmann::json doc;
  doc["num_states"] = num_states;
  doc["num_actions"] = num_actions;
  doc["dim"] = dim;
  doc["gamma"] = gamma;
  doc["s0"] = s0;
  doc["phi"] = flatten(phi);
  doc["psi"] = flatten(psi);
  std::vector<std::vector<double>> th;
  for (const Vec& t : thetas) th.emplace_back(t.data(), t.data() + t.size());
  doc["thetas"] = th;
  doc["tau"] = std::vector<double>(tau.data(), tau.data() + tau.size());
  return doc.dump();
}

LinearCmdp LinearCmdp::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("LinearCmdp: bad JSON: ") + e.what());
  }
  LinearCmdp mdp;
  try {
    mdp.num_states = doc.at("num_states").get<int>();
    mdp.num_actions = doc.at("num_actions").get<int>();
    mdp.dim = doc.at("dim").get<int>();
    mdp.gamma = doc.at("gamma").get<double>();
    mdp.s0 = doc.at("s0").get<int>();
    mdp.phi = unflatten(doc.at("phi").get<std::vector<double>>(),
                        mdp.num_states * mdp.num_actions, mdp.dim);
    mdp.psi = unflatten(doc.at("psi").get<std::vector<double>>(), mdp.dim,
                        mdp.num_states);
    for (const auto& t : doc.at("thetas")) {
      const auto entries = t.get<std::vector<double>>();
      mdp.thetas.push_back(Eigen::Map<const Vec>(entries.data(),
                                                 static_cast<int>(entries.size())));
    }
    const auto tau = doc.at("tau").get<std::vector<double>>();
    mdp.tau = Eigen::Map<const Vec>(tau.data(), static_cast<int>(tau.size()));
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("LinearCmdp: missing or mistyped field: ") + e.what());
  }
  mdp.d_psi = 1.0;
  mdp.validate();
  return mdp;
}

void TabularPolicy::validate() const {
  const double tol = 1e-12;
  for (int s = 0; s < probs.rows(); ++s) {
    if (probs.row(s).minCoeff() < -tol || std::abs(probs.row(s).sum() - 1.0) > tol) {
      throw ArgumentError("TabularPolicy: rows must be distributions");
    }
  }
}

TabularPolicy TabularPolicy::uniform(int num_states, int num_actions) {
  TabularPolicy pi;
  pi.probs = Mat::Constant(num_states, num_actions, 1.0 / num_actions);
  return pi;
}

LinearCmdp build_random_cmdp(std::uint64_t seed, int num_states, int num_actions,
                             int dim, int num_constraints, double gamma) {
  if (num_states < 1 || num_actions < 1) {
    throw ArgumentError("build_random_cmdp: state and action counts must be positive");
  }
  if (dim < 1 || dim > num_states * num_actions) {
    throw ArgumentError("build_random_cmdp: need 1 <= d <= |S||A|");
  }
  if (num_constraints < 0) {
    throw ArgumentError("build_random_cmdp: constraint count must be nonnegative");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw ArgumentError("build_random_cmdp: discount must lie in (0, 1)");
  }
  Rng rng(seed);
  LinearCmdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.dim = dim;
  mdp.gamma = gamma;
  mdp.s0 = 0;
  mdp.d_psi = 1.0;
  mdp.phi.resize(mdp.num_pairs(), dim);
  for (int r = 0; r < mdp.phi.rows(); ++r) mdp.phi.row(r) = rng.simplex(dim).transpose();
  mdp.psi.resize(dim, num_states);
  for (int r = 0; r < dim; ++r) mdp.psi.row(r) = rng.simplex(num_states).transpose();
  mdp.thetas.resize(static_cast<size_t>(num_constraints) + 1);
  for (Vec& th : mdp.thetas) {
    th.resize(dim);
    for (int i = 0; i < dim; ++i) th[i] = rng.uniform();
  }
  mdp.tau = Vec::Zero(num_constraints);
  mdp.validate();
  return mdp;
}

Mat transition_matrix(const LinearCmdp& mdp) {
  return mdp.phi * mdp.psi;
}

ExactEval exact_eval_with_p(const LinearCmdp& mdp, const Mat& p,
                            const TabularPolicy& pi, const Vec& w) {
  if (w.size() != mdp.num_constraints()) {
    throw ArgumentError("exact_eval: weight length must match constraint count");
  }
  if (w.size() > 0 && w.minCoeff() < 0.0) {
    throw ArgumentError("exact_eval: weights must be nonnegative");
  }
  const int ns = mdp.num_states;
  const int na = mdp.num_actions;

  Vec u = mdp.thetas[0];
  for (int i = 0; i < w.size(); ++i) u += w[i] * mdp.thetas[static_cast<size_t>(i + 1)];
  const Vec r_u = mdp.phi * u;

  const Mat p_pi = policy_transition(mdp, p, pi);
  Vec r_pi = Vec::Zero(ns);
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) r_pi[s] += pi.probs(s, a) * r_u[mdp.pair_index(s, a)];
  }

  ExactEval out;
  Mat lhs = Mat::Identity(ns, ns) - mdp.gamma * p_pi;
  out.v = lhs.partialPivLu().solve(r_pi);
  if (!out.v.allFinite()) throw InternalError("exact_eval: singular Bellman system");

  const Vec q_flat = r_u + mdp.gamma * (p * out.v);
  out.q = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                         Eigen::RowMajor>>(q_flat.data(), ns, na);
  out.zeta = u + mdp.gamma * (mdp.psi * out.v);

  occupancy(mdp, p_pi, pi, &out.nu, &out.mu);
  out.j = out.mu.dot(r_u);
  out.lambda_pi = mdp.phi.transpose() * out.mu;
  return out;
}

ExactEval exact_eval(const LinearCmdp& mdp, const TabularPolicy& pi, const Vec& w) {
  return exact_eval_with_p(mdp, transition_matrix(mdp), pi, w);
}

Vec all_returns_with_p(const LinearCmdp& mdp, const Mat& p, const TabularPolicy& pi) {
  Vec nu, mu;
  occupancy(mdp, policy_transition(mdp, p, pi), pi, &nu, &mu);
  const Vec lambda_pi = mdp.phi.transpose() * mu;
  Vec out(mdp.num_constraints() + 1);
  for (size_t i = 0; i < mdp.thetas.size(); ++i) {
    out[static_cast<int>(i)] = lambda_pi.dot(mdp.thetas[i]);
  }
  return out;
}

Vec all_returns(const LinearCmdp& mdp, const TabularPolicy& pi) {
  return all_returns_with_p(mdp, transition_matrix(mdp), pi);
}

namespace {

// Value iteration on the linearized reward; returns the greedy policy.
TabularPolicy value_iteration(const LinearCmdp& mdp, const Mat& p, const Vec& r,
                              double gap_target) {
  const int ns = mdp.num_states;
  const int na = mdp.num_actions;
  Vec v = Vec::Zero(ns);
  Vec v_next(ns);
  const int max_sweeps = 1000000;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const Vec q = r + mdp.gamma * (p * v);
    for (int s = 0; s < ns; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < na; ++a) best = std::max(best, q[mdp.pair_index(s, a)]);
      v_next[s] = best;
    }
    const double gap = (v_next - v).cwiseAbs().maxCoeff();
    v = v_next;
    if (gap <= gap_target) break;
  }
  const Vec q = r + mdp.gamma * (p * v);
  TabularPolicy pi;
  pi.probs = Mat::Zero(ns, na);
  for (int s = 0; s < ns; ++s) {
    int best_a = 0;
    for (int a = 1; a < na; ++a) {
      if (q[mdp.pair_index(s, a)] > q[mdp.pair_index(s, best_a)]) best_a = a;
    }
    pi.probs(s, best_a) = 1.0;
  }
  return pi;
}

}  // namespace

UnconstrainedOpt optimal_unconstrained(const LinearCmdp& mdp, double tol) {
  if (!(tol > 0.0)) throw ArgumentError("optimal_unconstrained: tol must be positive");
  const Mat p = transition_matrix(mdp);
  const double gap_target =
      mdp.gamma > 0.0 ? tol * (1.0 - mdp.gamma) / (2.0 * mdp.gamma) : 0.0;
  UnconstrainedOpt out;
  out.policy = value_iteration(mdp, p, mdp.reward(0), gap_target);
  out.j_star = all_returns_with_p(mdp, p, out.policy)[0];
  return out;
}

ConstrainedOpt optimal_constrained(const LinearCmdp& mdp, const Vec& tau, int grid,
                                   double w_max) {
  if (mdp.num_constraints() < 1) {
    throw ArgumentError("optimal_constrained: instance has no constraints");
  }
  if (mdp.num_constraints() > 1) {
    throw UnsupportedError("optimal_constrained: oracle supports exactly one constraint");
  }
  if (tau.size() != 1) throw ArgumentError("optimal_constrained: tau must have length 1");
  if (grid < 100) throw ArgumentError("optimal_constrained: grid must be at least 100");
  if (!(w_max > 0.0)) throw ArgumentError("optimal_constrained: w_max must be positive");

  const Mat p = transition_matrix(mdp);
  const Vec r0 = mdp.reward(0);
  const Vec r1 = mdp.reward(1);
  // The dual value along the grid is evaluated with exact returns of each
  // greedy policy; value iteration only needs to identify that policy, so a
  // fixed modest gap target suffices.
  const double gap_target =
      mdp.gamma > 0.0 ? 1e-10 * (1.0 - mdp.gamma) / (2.0 * mdp.gamma) : 0.0;

  ConstrainedOpt out;
  out.j0_star = std::numeric_limits<double>::infinity();
  out.slater_margin = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid; ++k) {
    const double w = w_max * static_cast<double>(k) / (grid - 1);
    const TabularPolicy pi = value_iteration(mdp, p, r0 + w * r1, gap_target);
    const Vec js = all_returns_with_p(mdp, p, pi);
    const double dual = js[0] + w * (js[1] - tau[0]);
    if (dual < out.j0_star) {
      out.j0_star = dual;
      out.w_at_min = w;
    }
    out.slater_margin = std::max(out.slater_margin, js[1] - tau[0]);
  }
  if (out.slater_margin < 0.0) {
    throw InfeasibleError("optimal_constrained: every grid policy violates the threshold");
  }
  return out;
}

namespace {

struct ScalarizedCand {
  TabularPolicy pi;
  Vec js;
  Vec mu;
};

}  // namespace

ConstrainedComparator constrained_comparator(const LinearCmdp& mdp, double w_max) {
  if (mdp.num_constraints() != 1) {
    throw UnsupportedError(
        "constrained_comparator: oracle supports exactly one constraint");
  }
  if (!(w_max > 0.0)) {
    throw ArgumentError("constrained_comparator: w_max must be positive");
  }
  const double tau = mdp.tau[0];
  const Mat p = transition_matrix(mdp);
  const Vec r0 = mdp.reward(0);
  const Vec r1 = mdp.reward(1);
  const double gap_target =
      mdp.gamma > 0.0 ? 1e-12 * (1.0 - mdp.gamma) / (2.0 * mdp.gamma) : 0.0;

  auto eval_at = [&](double w) {
    ScalarizedCand c;
    c.pi = value_iteration(mdp, p, r0 + w * r1, gap_target);
    Vec nu;
    occupancy(mdp, policy_transition(mdp, p, c.pi), c.pi, &nu, &c.mu);
    const Vec lam = mdp.phi.transpose() * c.mu;
    c.js.resize(mdp.num_constraints() + 1);
    for (size_t i = 0; i < mdp.thetas.size(); ++i) {
      c.js[static_cast<int>(i)] = lam.dot(mdp.thetas[i]);
    }
    return c;
  };

  ConstrainedComparator out;
  ScalarizedCand lo = eval_at(0.0);
  if (lo.js[1] >= tau) {
    out.policy = lo.pi;
    out.j = lo.js;
    out.w_star = 0.0;
    out.beta = 1.0;
    return out;
  }
  ScalarizedCand hi = eval_at(w_max);
  if (hi.js[1] < tau) {
    throw InfeasibleError(
        "constrained_comparator: threshold unreachable within the scalarization range");
  }

  // The dual subgradient J_1(pi_w) - tau is nondecreasing in w, so the sign
  // change sits at the dual-optimal kink; bisect to machine width.
  double w_lo = 0.0;
  double w_hi = w_max;
  for (int it = 0; it < 200 && w_hi - w_lo > 1e-13; ++it) {
    const double mid = 0.5 * (w_lo + w_hi);
    ScalarizedCand cand = eval_at(mid);
    if (cand.js[1] >= tau) {
      w_hi = mid;
      hi = std::move(cand);
    } else {
      w_lo = mid;
      lo = std::move(cand);
    }
  }

  const double denom = hi.js[1] - lo.js[1];
  out.beta = denom > 0.0
                 ? std::min(1.0, std::max(0.0, (tau - lo.js[1]) / denom))
                 : 1.0;
  out.w_star = 0.5 * (w_lo + w_hi);

  // Any convex combination of achievable occupancies is itself achievable by
  // the stationary policy with matching action ratios.
  const Vec mu_mix = out.beta * hi.mu + (1.0 - out.beta) * lo.mu;
  out.policy.probs.resize(mdp.num_states, mdp.num_actions);
  for (int s = 0; s < mdp.num_states; ++s) {
    double mass = 0.0;
    for (int a = 0; a < mdp.num_actions; ++a) mass += mu_mix[mdp.pair_index(s, a)];
    for (int a = 0; a < mdp.num_actions; ++a) {
      out.policy.probs(s, a) = mass > 0.0 ? mu_mix[mdp.pair_index(s, a)] / mass
                                          : 1.0 / mdp.num_actions;
    }
  }
  out.policy.validate();
  out.j = all_returns_with_p(mdp, p, out.policy);
  return out;
}

}  // namespace saddle
