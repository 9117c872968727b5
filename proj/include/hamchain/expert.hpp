#pragma once

#include <cstdint>

#include "hamchain/dynamics.hpp"
#include "hamchain/rng.hpp"

namespace hamchain {

struct Demonstration {
  Eigen::VectorXd x0;
  Eigen::MatrixXd controls;  // input_dim x K on the integrator grid
  double duration = 0.0;
  Trajectory trajectory;
  double terminal_dh = 0.0;
};

struct ExpertConfig {
  double plan_horizon = 2.0;   // lookahead per plan, seconds
  int n_segments = 10;         // piecewise-constant segments per plan
  int population = 64;
  int elites = 8;
  int iters = 12;
  double replan_every = 0.1;   // seconds between replans
  double w_terminal = 100.0;   // weight on |x_T - target center|^2
  double w_energy = 1.0;       // weight on integral of max(dh, 0)
  double w_effort = 0.01;      // weight on integral of |u|^2
  double max_episode = 20.0;   // demonstration time cap, seconds
  uint64_t seed = 0;
  double plan_dt = 0.01;       // internal simulation grid for candidate scoring
};

// One receding-horizon step: cross-entropy optimization over clamped
// piecewise-constant sequences, scored by forward simulation; returns the
// first segment of the best-scoring elite mean across iterations.  The
// current mean is always evaluated as a candidate, so a degenerate
// population of one returns the mean itself.
Eigen::VectorXd plan_step(const SystemModel& model, const TargetSpec& target,
                          const Eigen::VectorXd& x, const ExpertConfig& cfg, Rng& rng);

// Closed loop: replan every replan_every seconds, hold the returned input,
// record everything on the integrator grid, stop at target-ball entry.
// Throws ExpertFailure if the episode cap is hit first.
Demonstration generate_demonstration(const SystemModel& model, const TargetSpec& target,
                                     const Eigen::VectorXd& x0, const ExpertConfig& cfg,
                                     Rng& rng, double dt = 1e-3);

}  // namespace hamchain
