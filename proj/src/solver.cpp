#include "saddle/solver.hpp"

#include <cmath>

#include <json.hpp>

#include "saddle/errors.hpp"

namespace saddle {

std::string to_string(SolverMode mode) {
  switch (mode) {
    case SolverMode::kUnconstrained:
      return "unconstrained";
    case SolverMode::kConstrained:
      return "constrained";
    case SolverMode::kConstrainedExactFeasibility:
      return "constrained_exact_feasibility";
  }
  throw ArgumentError("SolverMode: unknown value");
}

SolverMode solver_mode_from_string(const std::string& name) {
  if (name == "unconstrained") return SolverMode::kUnconstrained;
  if (name == "constrained") return SolverMode::kConstrained;
  if (name == "constrained_exact_feasibility") {
    return SolverMode::kConstrainedExactFeasibility;
  }
  throw ArgumentError("SolverMode: unknown name '" + name + "'");
}

std::string MixturePolicy::to_json() const {
  nlohmann::json doc;
  doc["alpha"] = alpha;
  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<size_t>(zs.rows()));
  for (int t = 0; t < zs.rows(); ++t) {
    std::vector<double> row(static_cast<size_t>(zs.cols()));
    for (int i = 0; i < zs.cols(); ++i) row[static_cast<size_t>(i)] = zs(t, i);
    rows.push_back(std::move(row));
  }
  doc["zs"] = rows;
  return doc.dump();
}

MixturePolicy MixturePolicy::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("MixturePolicy: bad JSON: ") + e.what());
  }
  MixturePolicy mix;
  try {
    mix.alpha = doc.at("alpha").get<double>();
    const auto rows = doc.at("zs").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw ArgumentError("MixturePolicy: zs must be nonempty");
    mix.zs.resize(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].size() != rows[0].size()) {
        throw ArgumentError("MixturePolicy: ragged zs rows");
      }
      for (size_t i = 0; i < rows[t].size(); ++i) {
        mix.zs(static_cast<int>(t), static_cast<int>(i)) = rows[t][i];
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("MixturePolicy: missing or mistyped field: ") +
                        e.what());
  }
  return mix;
}

namespace {

bool close(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

SolverConfig finalize_config(SolverConfig cfg, const KnownModel& km, int n) {
  if (n < 1) throw ArgumentError("finalize_config: empty dataset");
  const int i_count = km.num_constraints();
  const int d = km.dim;
  const double gamma = km.gamma;
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  // With no constraints the constrained modes degrade to exactly the
  // unconstrained dynamics.
  const bool constrained = cfg.mode != SolverMode::kUnconstrained && i_count >= 1;

  if (!(cfg.epsilon > 0.0)) throw ArgumentError("finalize_config: epsilon must be positive");
  if (!(cfg.bounds.c_star > 0.0)) {
    throw ArgumentError("finalize_config: the coefficient bound c_star is required");
  }

  if (constrained) {
    if (!(cfg.phi > 0.0)) {
      throw ArgumentError("finalize_config: constrained modes require a positive phi");
    }
    const double d_w_required = cfg.mode == SolverMode::kConstrained
                                    ? 1.0 + 1.0 / cfg.phi
                                    : 4.0 / cfg.phi;
    if (cfg.bounds.d_w != 0.0 && !close(cfg.bounds.d_w, d_w_required)) {
      throw ArgumentError("finalize_config: d_w is fixed by the mode's formula");
    }
    cfg.bounds.d_w = d_w_required;

    Vec tau_required = km.tau;
    if (cfg.mode == SolverMode::kConstrainedExactFeasibility) {
      tau_required.array() += cfg.phi * cfg.epsilon;
    }
    if (cfg.tau_input.size() != 0) {
      if (cfg.tau_input.size() != i_count ||
          (cfg.tau_input - tau_required).cwiseAbs().maxCoeff() > 1e-9) {
        throw ArgumentError("finalize_config: tau_input is fixed by the mode's formula");
      }
    }
    cfg.tau_input = tau_required;
  } else {
    cfg.bounds.d_w = 0.0;
    cfg.tau_input = Vec(0);
  }

  if (cfg.bounds.d_zeta == 0.0) {
    cfg.bounds.d_zeta =
        constrained
            ? 1.0 + cfg.bounds.d_w +
                  gamma * sqrt_d * (1.0 + cfg.bounds.d_w) / (1.0 - gamma)
            : sqrt_d + gamma * sqrt_d / (1.0 - gamma);
  }
  if (!(cfg.bounds.d_zeta > 0.0)) {
    throw ArgumentError("finalize_config: d_zeta must be positive");
  }

  const double log_a =
      km.num_actions > 1 ? std::log(static_cast<double>(km.num_actions)) : 1.0;
  if (cfg.t_iters == 0) {
    const double t_raw =
        d * log_a / ((1.0 - gamma) * (1.0 - gamma) * cfg.epsilon * cfg.epsilon);
    cfg.t_iters = static_cast<int>(
        std::min(std::ceil(t_raw), static_cast<double>(cfg.t_max)));
    cfg.t_iters = std::max(cfg.t_iters, 1);
  }
  if (cfg.t_iters < 1) throw ArgumentError("finalize_config: t_iters must be positive");

  if (cfg.bounds.alpha == 0.0) {
    cfg.bounds.alpha = (1.0 - gamma) * std::sqrt(log_a / (d * cfg.t_iters));
  }
  if (cfg.bounds.oco_step == 0.0) {
    const double g_bound = 1.0 + cfg.bounds.d_w + cfg.bounds.d_zeta +
                           gamma * cfg.bounds.d_zeta * sqrt_d;
    cfg.bounds.oco_step =
        cfg.bounds.c_star * n / (g_bound * std::sqrt(static_cast<double>(cfg.t_iters)));
  }
  if (!(cfg.bounds.alpha > 0.0) || !(cfg.bounds.oco_step > 0.0)) {
    throw ArgumentError("finalize_config: step sizes must be positive");
  }
  cfg.bounds.d_pi = cfg.bounds.alpha * cfg.t_iters * cfg.bounds.d_zeta;
  return cfg;
}

std::pair<MixturePolicy, RunTrace> solve(const OfflineDataset& ds,
                                         const KnownModel& km,
                                         const SolverConfig& cfg_in) {
  if (ds.n < 1) throw ArgumentError("solve: empty dataset");
  if (ds.feature_rows.cols() != km.dim) {
    throw ArgumentError("solve: dataset feature width does not match the instance");
  }
  if (km.tau.size() != km.num_constraints()) {
    throw ArgumentError("solve: tau length must match the constraint count");
  }
  const SolverConfig cfg = finalize_config(cfg_in, km, ds.n);
  const int n = ds.n;
  const int d = km.dim;
  const int na = km.num_actions;
  const int t_iters = cfg.t_iters;
  const double gamma = km.gamma;
  const bool constrained =
      cfg.mode != SolverMode::kUnconstrained && km.num_constraints() >= 1;
  const int i_count = constrained ? km.num_constraints() : 0;

  // Everything state-dependent is gathered once, up front; the loop itself
  // only touches dataset-sized arrays.
  const GramMatrix gram = gram_matrix(ds);
  const Spanner span = compute_spanner(ds);
  const Mat s0_block = km.state_block(km.s0);
  Mat next_phi(static_cast<Eigen::Index>(n) * na, d);
  for (int k = 0; k < n; ++k) {
    next_phi.middleRows(static_cast<Eigen::Index>(k) * na, na) =
        km.state_block(ds.s_next[k]);
  }
  const Mat& x = ds.feature_rows;
  const Vec& theta0 = km.thetas[0];
  const Mat theta = constrained ? km.theta_matrix() : Mat(d, 0);

  const double b = cfg.bounds.c_star;
  const double eta = cfg.bounds.oco_step;
  const double alpha = cfg.bounds.alpha;

  MixturePolicy mix;
  mix.alpha = alpha;
  mix.zs.resize(t_iters, d);

  RunTrace trace;
  trace.t_iters = t_iters;
  trace.bounds = cfg.bounds;
  trace.tau_input = cfg.tau_input;
  trace.zeta_obj.resize(t_iters);
  trace.lambda_norm.resize(t_iters);
  trace.ws.resize(t_iters, i_count);
  if (cfg.record_iterates) {
    trace.zetas.resize(t_iters, d);
    trace.lambdas.resize(t_iters, d);
  }

  Vec z = Vec::Zero(d);            // pi_1 is uniform
  Vec coefs = Vec::Zero(n);        // OCO iterate c_t
  Vec on_basis = Vec::Zero(span.rank);  // converted coefficients c'_t
  Vec lambda = Vec::Zero(d);       // lambda(c'_1) = 0

  Vec logits(static_cast<Eigen::Index>(n) * na);
  Vec zeta_logits(static_cast<Eigen::Index>(n) * na);
  Vec v_next(n);

  using AStride = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic>>;

  for (int t = 0; t < t_iters; ++t) {
    // Softmax probabilities of pi_t at every next state, column k = state
    // s'_k, computed in place over the logit buffer.
    logits.noalias() = next_phi * z;
    AStride probs(logits.data(), na, n);
    const Eigen::RowVectorXd col_max = probs.colwise().maxCoeff();
    probs = (probs.rowwise() - col_max).array().exp();
    const Eigen::RowVectorXd col_sum = probs.colwise().sum();
    probs.array().rowwise() /= col_sum.array();

    const Vec p0 = softmax_block(s0_block, z);

    // Direction-player objective gradient
    // g = (1-gamma) phi(s0,pi) + (gamma/n) sum_j c'_j phi(s'_j,pi) - lambda;
    // c' is supported on the spanner indices only.
    Vec g = (1.0 - gamma) * (s0_block.transpose() * p0);
    for (int j = 0; j < span.rank; ++j) {
      if (on_basis[j] == 0.0) continue;
      const int k = span.indices[j];
      g.noalias() += (gamma * on_basis[j] / n) *
                     (next_phi.middleRows(static_cast<Eigen::Index>(k) * na, na)
                          .transpose() *
                      probs.col(k));
    }
    g -= lambda;

    const Vec zeta = zeta_greedy(g, cfg.bounds.d_zeta);

    Vec w(i_count);
    if (constrained) {
      w = w_greedy(lambda, theta, cfg.tau_input, cfg.bounds.d_w);
    }

    // v_{zeta,pi_t} at the next states, reusing the probability columns.
    zeta_logits.noalias() = next_phi * zeta;
    AStride zq(zeta_logits.data(), na, n);
    v_next = (zq.array() * probs.array()).colwise().sum();

    Vec xi = theta0 - zeta + gamma * gram.reg_solve(x.transpose() * v_next);
    if (constrained) xi.noalias() += theta * w;

    if (!zeta.allFinite() || !xi.allFinite() || !z.allFinite()) {
      throw NumericalError("solve: non-finite value at iteration " +
                           std::to_string(t + 1));
    }

    mix.zs.row(t) = z.transpose();
    trace.zeta_obj[t] = zeta.dot(g);
    trace.lambda_norm[t] = lambda.norm();
    if (constrained) trace.ws.row(t) = w.transpose();
    if (cfg.record_iterates) {
      trace.zetas.row(t) = zeta.transpose();
      trace.lambdas.row(t) = lambda.transpose();
    }

    oco_step_core(coefs, x, xi, eta, b);
    on_basis.noalias() = span.conversion.transpose() * coefs;
    lambda.noalias() = (span.basis.transpose() * on_basis) / n;
    z += alpha * zeta;
  }

  return {std::move(mix), std::move(trace)};
}

Vec evaluate_mixture(const LinearCmdp& mdp, const MixturePolicy& mix) {
  if (mix.zs.rows() < 1) throw ArgumentError("evaluate_mixture: empty mixture");
  const Mat p = transition_matrix(mdp);
  Vec acc = Vec::Zero(mdp.num_constraints() + 1);
  for (int t = 0; t < mix.zs.rows(); ++t) {
    const TabularPolicy pi =
        materialize_policy(mdp.phi, mdp.num_actions, mix.zs.row(t).transpose());
    acc += all_returns_with_p(mdp, p, pi);
  }
  return acc / mix.zs.rows();
}

void annotate_trace(const LinearCmdp& mdp, const MixturePolicy& mix, RunTrace& trace) {
  const Mat p = transition_matrix(mdp);
  const int t_iters = static_cast<int>(mix.zs.rows());
  trace.j_pi.resize(t_iters);
  trace.j_constraints.resize(t_iters, mdp.num_constraints());
  for (int t = 0; t < t_iters; ++t) {
    const TabularPolicy pi =
        materialize_policy(mdp.phi, mdp.num_actions, mix.zs.row(t).transpose());
    const Vec js = all_returns_with_p(mdp, p, pi);
    trace.j_pi[t] = js[0];
    trace.j_constraints.row(t) = js.tail(mdp.num_constraints()).transpose();
  }
}

}  // namespace saddle
