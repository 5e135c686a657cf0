#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include "saddle/bench.hpp"
#include "saddle/dataset.hpp"
#include "saddle/errors.hpp"
#include "saddle/estimators.hpp"
#include "saddle/known.hpp"
#include "saddle/lagrangian.hpp"
#include "saddle/lmdp.hpp"
#include "saddle/players.hpp"
#include "saddle/rng.hpp"
#include "saddle/solver.hpp"
#include "saddle/spanner.hpp"

using namespace saddle;

namespace {

BehaviorDistribution uniform_behavior(int num_pairs) {
  BehaviorDistribution mu;
  mu.probs = Vec::Constant(num_pairs, 1.0 / num_pairs);
  return mu;
}

SolverConfig base_config(int t_iters) {
  SolverConfig cfg;
  cfg.t_iters = t_iters;
  cfg.bounds.c_star = 2.0;
  return cfg;
}

}  // namespace

TEST_CASE("a single-action instance is solved exactly") {
  const LinearCmdp mdp = build_random_cmdp(3, 1, 1, 1, 0, 0.9);
  const KnownModel km = KnownModel::from(mdp);
  const OfflineDataset ds =
      sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 20, 5);

  const auto [mix, trace] = solve(ds, km, base_config(50));
  REQUIRE(mix.zs.rows() == 50);

  const UnconstrainedOpt opt = optimal_unconstrained(mdp, 1e-12);
  const Vec js = evaluate_mixture(mdp, mix);
  CHECK(js[0] == doctest::Approx(opt.j_star).epsilon(1e-14));

  // Every iterate is the unique policy.
  for (int t = 0; t < mix.zs.rows(); ++t) {
    const TabularPolicy pi =
        materialize_policy(mdp.phi, mdp.num_actions, mix.zs.row(t).transpose());
    CHECK(pi.probs(0, 0) == 1.0);
  }
}

TEST_CASE("no constraints degrades the constrained mode bitwise") {
  const LinearCmdp mdp = build_random_cmdp(8, 6, 3, 5, 0, 0.9);
  const KnownModel km = KnownModel::from(mdp);
  const OfflineDataset ds =
      sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 300, 7);

  SolverConfig plain = base_config(200);
  plain.mode = SolverMode::kUnconstrained;
  SolverConfig degraded = base_config(200);
  degraded.mode = SolverMode::kConstrained;

  const auto [mix_a, trace_a] = solve(ds, km, plain);
  const auto [mix_b, trace_b] = solve(ds, km, degraded);

  CHECK((mix_a.zs - mix_b.zs).norm() == 0.0);
  CHECK(mix_a.alpha == mix_b.alpha);
  CHECK((trace_a.zeta_obj - trace_b.zeta_obj).norm() == 0.0);
  CHECK((trace_a.lambda_norm - trace_b.lambda_norm).norm() == 0.0);
  CHECK(trace_b.ws.cols() == 0);
}

TEST_CASE("a myopic instance is maximized directly") {
  // One state, three actions with distinct features, no transition dynamics:
  // the optimum is the argmax of the immediate reward.
  LinearCmdp mdp;
  mdp.num_states = 1;
  mdp.num_actions = 3;
  mdp.dim = 2;
  mdp.gamma = 0.0;
  mdp.s0 = 0;
  mdp.d_psi = 1.0;
  mdp.phi = Mat(3, 2);
  mdp.phi << 1.0, 0.0, 0.0, 1.0, 0.5, 0.5;
  mdp.psi = Mat::Ones(2, 1);
  Vec th(2);
  th << 0.60, 0.72;
  mdp.thetas = {th};
  mdp.tau = Vec(0);
  mdp.validate();
  const KnownModel km = KnownModel::from(mdp);

  // Behavior leaning toward the best action keeps the density ratio of the
  // optimal policy at 1/0.8, well inside the coefficient box.
  BehaviorDistribution mu;
  mu.probs = Vec(3);
  mu.probs << 0.10, 0.80, 0.10;
  const OfflineDataset ds = sample_dataset(mdp, mu, 500, 9);

  const auto [mix, trace] = solve(ds, km, base_config(500));
  const Vec js = evaluate_mixture(mdp, mix);

  double best = 0.0;
  for (int a = 0; a < mdp.num_actions; ++a) {
    best = std::max(best, mdp.reward(0)[mdp.pair_index(0, a)]);
  }
  // The uniform starting policy sits 0.06 below the optimum, so passing
  // requires actual concentration on the best action.
  CHECK(js[0] >= best - 0.05);
  CHECK(js[0] <= best + 1e-12);
}

TEST_CASE("the loop replays exactly from the module primitives") {
  LinearCmdp mdp = build_random_cmdp(21, 6, 3, 5, 1, 0.9);
  const KnownModel km = KnownModel::from(mdp);
  const OfflineDataset ds =
      sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 40, 11);

  SolverConfig cfg = base_config(6);
  cfg.mode = SolverMode::kConstrained;
  cfg.phi = 0.2;
  const SolverConfig fin = finalize_config(cfg, km, ds.n);
  const auto [mix, trace] = solve(ds, km, cfg);

  CHECK(trace.bounds.d_zeta == fin.bounds.d_zeta);
  CHECK(trace.bounds.d_w == fin.bounds.d_w);
  CHECK(trace.bounds.alpha == fin.bounds.alpha);
  CHECK(trace.bounds.oco_step == fin.bounds.oco_step);
  REQUIRE(trace.tau_input.size() == 1);

  const GramMatrix gram = gram_matrix(ds);
  const Spanner span = compute_spanner(ds);
  const Mat theta = km.theta_matrix();
  const double b = fin.bounds.c_star;

  SoftmaxPolicy pol{Vec::Zero(km.dim)};
  Vec coefs = Vec::Zero(ds.n);
  CoefLambda cp = convert_coeffs(make_coef_lambda(coefs, b, ds), span);

  for (int t = 0; t < fin.t_iters; ++t) {
    const Vec g = phi_mu_hat(cp, pol, ds, km) - cp.lambda;
    const Vec zeta = zeta_greedy(g, fin.bounds.d_zeta);
    const Vec w = w_greedy(cp.lambda, theta, fin.tau_input, fin.bounds.d_w);
    const ValueAtStates vals = v_values(zeta, pol, ds, km);
    const Vec xi =
        km.thetas[0] - zeta + theta * w + km.gamma * psi_v_hat(vals, ds, gram);

    CHECK((mix.zs.row(t).transpose() - pol.z).norm() < 1e-12);
    CHECK((trace.zetas.row(t).transpose() - zeta).norm() < 1e-12);
    CHECK((trace.lambdas.row(t).transpose() - cp.lambda).norm() < 1e-12);
    CHECK((trace.ws.row(t).transpose() - w).norm() < 1e-12);
    CHECK(trace.zeta_obj[t] == doctest::Approx(zeta.dot(g)).epsilon(1e-12));
    CHECK(trace.lambda_norm[t] ==
          doctest::Approx(cp.lambda.norm()).epsilon(1e-12));

    oco_step_core(coefs, ds.feature_rows, xi, fin.bounds.oco_step, b);
    cp = convert_coeffs(make_coef_lambda(coefs, b, ds), span);
    pol = pi_update(pol, zeta, fin.bounds.alpha);
  }
}

TEST_CASE("the solver touches only the initial and observed next states") {
  const LinearCmdp mdp = build_random_cmdp(25, 6, 3, 5, 0, 0.9);
  KnownModel km = KnownModel::from(mdp);

  OfflineDataset ds;
  ds.n = 8;
  ds.s.resize(ds.n);
  ds.a.resize(ds.n);
  ds.s_next.resize(ds.n);
  ds.feature_rows.resize(ds.n, mdp.dim);
  for (int k = 0; k < ds.n; ++k) {
    ds.s[k] = 2 + k % 2;
    ds.a[k] = k % 3;
    ds.s_next[k] = 4 + k % 2;
    ds.feature_rows.row(k) = mdp.phi.row(mdp.pair_index(ds.s[k], ds.a[k]));
  }

  std::set<int> touched;
  km.on_state_access = [&](int s) { touched.insert(s); };
  solve(ds, km, base_config(4));

  CHECK(touched == std::set<int>{km.s0, 4, 5});
}

TEST_CASE("identical inputs give identical runs") {
  const LinearCmdp mdp = build_random_cmdp(29, 6, 3, 5, 0, 0.9);
  const KnownModel km = KnownModel::from(mdp);
  const OfflineDataset ds =
      sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 400, 13);

  const auto [mix_a, trace_a] = solve(ds, km, base_config(150));
  const auto [mix_b, trace_b] = solve(ds, km, base_config(150));
  CHECK((mix_a.zs - mix_b.zs).norm() == 0.0);
  CHECK((trace_a.zeta_obj - trace_b.zeta_obj).norm() == 0.0);
}

TEST_CASE("parameter motion per step is bounded by the step size") {
  LinearCmdp mdp = build_random_cmdp(31, 5, 4, 4, 2, 0.85);
  const KnownModel km = KnownModel::from(mdp);
  const OfflineDataset ds =
      sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 200, 15);

  SolverConfig cfg = base_config(100);
  cfg.mode = SolverMode::kConstrained;
  cfg.phi = 0.1;
  const SolverConfig fin = finalize_config(cfg, km, ds.n);
  const auto [mix, trace] = solve(ds, km, cfg);

  const double step_cap = fin.bounds.alpha * fin.bounds.d_zeta;
  for (int t = 0; t + 1 < mix.zs.rows(); ++t) {
    CHECK((mix.zs.row(t + 1) - mix.zs.row(t)).norm() <= step_cap + 1e-12);
  }
  CHECK(mix.zs.row(0).norm() == 0.0);
}

TEST_CASE("derived configuration follows the documented formulas") {
  const LinearCmdp mdp = build_random_cmdp(35, 6, 3, 5, 1, 0.9);
  const KnownModel km = KnownModel::from(mdp);
  const double sqrt_d = std::sqrt(5.0);
  const int n = 1000;

  SUBCASE("unconstrained radii and steps") {
    SolverConfig cfg;
    cfg.bounds.c_star = 2.0;
    const SolverConfig fin = finalize_config(cfg, km, n);

    const double d_zeta = sqrt_d + 0.9 * sqrt_d / 0.1;
    CHECK(fin.bounds.d_zeta == doctest::Approx(d_zeta).epsilon(1e-12));
    CHECK(fin.bounds.d_w == 0.0);

    const int t_want = static_cast<int>(
        std::ceil(5.0 * std::log(3.0) / (0.1 * 0.1 * 0.1 * 0.1)));
    CHECK(fin.t_iters == t_want);
    CHECK(fin.bounds.alpha ==
          doctest::Approx(0.1 * std::sqrt(std::log(3.0) / (5.0 * fin.t_iters)))
              .epsilon(1e-12));

    const double g_bound = 1.0 + d_zeta + 0.9 * d_zeta * sqrt_d;
    CHECK(fin.bounds.oco_step ==
          doctest::Approx(2.0 * n / (g_bound * std::sqrt(fin.t_iters)))
              .epsilon(1e-12));
    CHECK(fin.bounds.d_pi ==
          doctest::Approx(fin.bounds.alpha * fin.t_iters * fin.bounds.d_zeta)
              .epsilon(1e-12));
  }

  SUBCASE("constrained mode fixes the weight scale and thresholds") {
    SolverConfig cfg = base_config(500);
    cfg.mode = SolverMode::kConstrained;
    cfg.phi = 0.2;
    const SolverConfig fin = finalize_config(cfg, km, n);
    CHECK(fin.bounds.d_w == doctest::Approx(6.0).epsilon(1e-12));
    const double d_zeta = 7.0 + 0.9 * sqrt_d * 7.0 / 0.1;
    CHECK(fin.bounds.d_zeta == doctest::Approx(d_zeta).epsilon(1e-12));
    CHECK((fin.tau_input - km.tau).norm() == 0.0);
  }

  SUBCASE("exact-feasibility mode pads thresholds and widens the weights") {
    SolverConfig cfg = base_config(500);
    cfg.mode = SolverMode::kConstrainedExactFeasibility;
    cfg.phi = 0.2;
    cfg.epsilon = 0.1;
    const SolverConfig fin = finalize_config(cfg, km, n);
    CHECK(fin.bounds.d_w == doctest::Approx(20.0).epsilon(1e-12));
    const Vec want = (km.tau.array() + 0.2 * 0.1).matrix();
    CHECK((fin.tau_input - want).norm() < 1e-15);
  }

  SUBCASE("inconsistent explicit values are rejected") {
    SolverConfig cfg = base_config(500);
    CHECK_THROWS_AS(finalize_config(cfg, km, 0), ArgumentError);

    cfg = base_config(500);
    cfg.bounds.c_star = 0.0;
    CHECK_THROWS_AS(finalize_config(cfg, km, n), ArgumentError);

    cfg = base_config(500);
    cfg.mode = SolverMode::kConstrained;
    CHECK_THROWS_AS(finalize_config(cfg, km, n), ArgumentError);  // phi unset

    cfg = base_config(500);
    cfg.mode = SolverMode::kConstrained;
    cfg.phi = 0.2;
    cfg.bounds.d_w = 3.0;  // conflicts with 1 + 1/phi = 6
    CHECK_THROWS_AS(finalize_config(cfg, km, n), ArgumentError);

    cfg = base_config(500);
    cfg.mode = SolverMode::kConstrained;
    cfg.phi = 0.2;
    cfg.tau_input = (km.tau.array() + 0.5).matrix();
    CHECK_THROWS_AS(finalize_config(cfg, km, n), ArgumentError);
  }
}

TEST_CASE("bad solve inputs raise argument errors") {
  const LinearCmdp mdp = build_random_cmdp(39, 6, 3, 5, 0, 0.9);
  const KnownModel km = KnownModel::from(mdp);

  SUBCASE("empty dataset") {
    OfflineDataset ds;
    CHECK_THROWS_AS(solve(ds, km, base_config(10)), ArgumentError);
  }

  SUBCASE("feature width mismatch") {
    const LinearCmdp narrow = build_random_cmdp(40, 6, 3, 4, 0, 0.9);
    const OfflineDataset ds =
        sample_dataset(narrow, uniform_behavior(narrow.num_pairs()), 50, 3);
    CHECK_THROWS_AS(solve(ds, km, base_config(10)), ArgumentError);
  }

  SUBCASE("threshold length mismatch") {
    KnownModel broken = KnownModel::from(mdp);
    broken.tau = Vec::Constant(2, 0.1);
    const OfflineDataset ds =
        sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 50, 3);
    CHECK_THROWS_AS(solve(ds, broken, base_config(10)), ArgumentError);
  }
}

TEST_CASE("non-finite inputs are reported with the failing iteration") {
  const LinearCmdp mdp = build_random_cmdp(43, 4, 3, 4, 0, 0.9);
  KnownModel km = KnownModel::from(mdp);
  km.thetas[0][0] = std::numeric_limits<double>::infinity();
  const OfflineDataset ds =
      sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 50, 3);
  CHECK_THROWS_WITH_AS(solve(ds, km, base_config(10)),
                       "solve: non-finite value at iteration 1", NumericalError);
}

TEST_CASE("mixture evaluation matches the exact oracle") {
  const LinearCmdp mdp = build_random_cmdp(47, 6, 3, 5, 1, 0.9);
  Rng rng(48);

  SUBCASE("a single iterate is the policy itself") {
    MixturePolicy mix;
    mix.alpha = 0.1;
    mix.zs.resize(1, mdp.dim);
    mix.zs.row(0) = random_ball(rng, mdp.dim, 2.0).transpose();
    const TabularPolicy pi =
        materialize_policy(mdp.phi, mdp.num_actions, mix.zs.row(0).transpose());
    const Vec js = evaluate_mixture(mdp, mix);
    const Vec want = all_returns(mdp, pi);
    CHECK((js - want).norm() < 1e-14);
  }

  SUBCASE("identical iterates equal any single iterate") {
    MixturePolicy mix;
    mix.alpha = 0.1;
    mix.zs.resize(7, mdp.dim);
    const Vec z = random_ball(rng, mdp.dim, 1.5);
    for (int t = 0; t < 7; ++t) mix.zs.row(t) = z.transpose();
    MixturePolicy single;
    single.alpha = 0.1;
    single.zs.resize(1, mdp.dim);
    single.zs.row(0) = z.transpose();
    CHECK((evaluate_mixture(mdp, mix) - evaluate_mixture(mdp, single)).norm() <
          1e-13);
  }

  SUBCASE("empty mixtures are rejected") {
    MixturePolicy mix;
    CHECK_THROWS_AS(evaluate_mixture(mdp, mix), ArgumentError);
  }
}

TEST_CASE("mixture returns match a trajectory simulation") {
  const LinearCmdp mdp = build_random_cmdp(51, 6, 3, 5, 0, 0.9);
  const KnownModel km = KnownModel::from(mdp);
  const OfflineDataset ds =
      sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 500, 17);
  const auto [mix, trace] = solve(ds, km, base_config(50));
  const double exact = evaluate_mixture(mdp, mix)[0];

  const int t_count = static_cast<int>(mix.zs.rows());
  std::vector<TabularPolicy> policies;
  policies.reserve(t_count);
  for (int t = 0; t < t_count; ++t) {
    policies.push_back(
        materialize_policy(mdp.phi, mdp.num_actions, mix.zs.row(t).transpose()));
  }
  const Mat p = transition_matrix(mdp);

  // The mixture draws one iterate per trajectory and follows it throughout.
  Rng rng(99);
  const int num_traj = 100000;
  const int horizon = 250;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < num_traj; ++i) {
    const TabularPolicy& pi = policies[rng.uniform_int(t_count)];
    int s = mdp.s0;
    double ret = 0.0;
    double disc = 1.0 - mdp.gamma;
    for (int h = 0; h < horizon; ++h) {
      const int a = rng.categorical(pi.probs.row(s).transpose());
      const int pair = mdp.pair_index(s, a);
      ret += disc * mdp.reward(0)[pair];
      disc *= mdp.gamma;
      s = rng.categorical(p.row(pair).transpose());
    }
    sum += ret;
    sum_sq += ret * ret;
  }
  const double mean = sum / num_traj;
  const double var = std::max(0.0, sum_sq / num_traj - mean * mean);
  const double se = std::sqrt(var / num_traj);
  CHECK(std::abs(mean - exact) <= 3.0 * se + 1e-9);
}

TEST_CASE("per-iteration suboptimality splits into the three regrets") {
  const LinearCmdp mdp = build_random_cmdp(2, 6, 3, 5, 0, 0.9);
  const KnownModel km = KnownModel::from(mdp);
  const OfflineDataset ds =
      sample_dataset(mdp, uniform_behavior(mdp.num_pairs()), 2000, 19);

  SolverConfig cfg = base_config(300);
  cfg.record_iterates = true;
  const auto [mix, trace] = solve(ds, km, cfg);

  const UnconstrainedOpt opt = optimal_unconstrained(mdp, 1e-12);
  const ExactEval star = exact_eval(mdp, opt.policy, Vec::Zero(0));

  double avg_pi = 0.0;
  double avg_lambda = 0.0;
  double avg_zeta = 0.0;
  for (int t = 0; t < cfg.t_iters; ++t) {
    const Vec zeta_t = trace.zetas.row(t).transpose();
    const Vec lambda_t = trace.lambdas.row(t).transpose();
    const TabularPolicy pi_t =
        materialize_policy(mdp.phi, mdp.num_actions, mix.zs.row(t).transpose());
    const ExactEval ev = exact_eval(mdp, pi_t, Vec::Zero(0));

    const double f_opt = lagrangian_primal(mdp, zeta_t, star.lambda_pi, opt.policy);
    const double f_pi = lagrangian_primal(mdp, zeta_t, star.lambda_pi, pi_t);
    const double f_lam = lagrangian_primal(mdp, zeta_t, lambda_t, pi_t);
    const double f_sad = lagrangian_primal(mdp, ev.zeta, lambda_t, pi_t);

    const double reg_pi = f_opt - f_pi;
    const double reg_lambda = f_pi - f_lam;
    const double reg_zeta = f_lam - f_sad;
    CHECK(std::abs((star.j - ev.j) - (reg_pi + reg_lambda + reg_zeta)) <= 1e-8);

    avg_pi += reg_pi;
    avg_lambda += reg_lambda;
    avg_zeta += reg_zeta;
  }

  // The running averages settle toward zero as T grows; at this reduced
  // scale the coefficient player is still paying off its early deficit, so
  // its cap is looser than at the full benchmark scale.
  avg_pi /= cfg.t_iters;
  avg_lambda /= cfg.t_iters;
  avg_zeta /= cfg.t_iters;
  CHECK(avg_pi < 0.5);
  CHECK(avg_lambda < 2.0);
  CHECK(avg_zeta < 0.5);
}

TEST_CASE("mixture parameters round-trip through JSON") {
  Rng rng(60);
  MixturePolicy mix;
  mix.alpha = 0.034;
  mix.zs.resize(5, 4);
  for (int t = 0; t < 5; ++t) mix.zs.row(t) = random_ball(rng, 4, 3.0).transpose();

  const MixturePolicy back = MixturePolicy::from_json(mix.to_json());
  CHECK(back.alpha == mix.alpha);
  CHECK((back.zs - mix.zs).norm() == 0.0);

  CHECK_THROWS_AS(MixturePolicy::from_json("{"), ArgumentError);
  CHECK_THROWS_AS(MixturePolicy::from_json(R"({"alpha":0.1,"zs":[]})"),
                  ArgumentError);
  CHECK_THROWS_AS(MixturePolicy::from_json(R"({"alpha":0.1})"), ArgumentError);
}
