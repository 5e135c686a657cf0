#pragma once

#include <functional>
#include <vector>

#include "saddle/lmdp.hpp"
#include "saddle/types.hpp"

namespace saddle {

/// The learner-visible part of an instance: the feature map, reward
/// parameters, discount, initial state, and constraint thresholds. This is
/// everything the solver is allowed to touch; the transition structure never
/// appears here.
struct KnownModel {
  Mat phi;  // (|S|*|A|) x d
  int num_states = 0;
  int num_actions = 0;
  int dim = 0;
  std::vector<Vec> thetas;  // theta_0 .. theta_I
  double gamma = 0.0;
  int s0 = 0;
  Vec tau;  // length I

  /// Optional test hook invoked with the state index on every feature-block
  /// fetch; used to assert which states a computation actually touches.
  std::function<void(int)> on_state_access;

  int pair_index(int s, int a) const { return s * num_actions + a; }
  int num_constraints() const { return static_cast<int>(thetas.size()) - 1; }

  /// All action features of one state as an |A| x d block.
  Mat state_block(int s) const {
    if (on_state_access) on_state_access(s);
    return phi.middleRows(static_cast<Eigen::Index>(s) * num_actions, num_actions);
  }

  /// Columns theta_1..theta_I stacked as a d x I matrix (empty when I = 0).
  Mat theta_matrix() const {
    Mat theta(dim, num_constraints());
    for (int i = 0; i < num_constraints(); ++i) {
      theta.col(i) = thetas[static_cast<size_t>(i + 1)];
    }
    return theta;
  }

  static KnownModel from(const LinearCmdp& mdp) {
    KnownModel km;
    km.phi = mdp.phi;
    km.num_states = mdp.num_states;
    km.num_actions = mdp.num_actions;
    km.dim = mdp.dim;
    km.thetas = mdp.thetas;
    km.gamma = mdp.gamma;
    km.s0 = mdp.s0;
    km.tau = mdp.tau;
    return km;
  }
};

}  // namespace saddle
