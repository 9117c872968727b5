#pragma once

#include <cstdint>
#include <vector>

#include "hamchain/chain_policy.hpp"
#include "hamchain/dynamics.hpp"
#include "hamchain/expert.hpp"

namespace hamchain {

// Fully-connected tanh network mapping state to input, with the input
// standardization and the output clamp box stored alongside the weights so a
// saved policy is self-contained.
struct MlpParams {
  std::vector<int> sizes;        // {n, 24, 24, 16, m}
  std::vector<Eigen::MatrixXd> w;  // w[l]: sizes[l+1] x sizes[l]
  std::vector<Eigen::VectorXd> b;
  Eigen::VectorXd in_mean, in_std;   // input standardization
  Eigen::VectorXd out_lo, out_hi;    // saturation box for the output

  int n_layers() const { return static_cast<int>(w.size()); }
  long param_count() const;
  // Flat view over all weights then biases, layer by layer; used by the
  // finite-difference gradient audit.
  double get_param(long i) const;
  void add_to_param(long i, double delta);
};

struct TrainConfig {
  double lr = 1.2e-3;
  double weight_decay = 5e-4;  // decoupled, applied to weights only
  int epochs = 40;
  int batch = 64;
  uint64_t seed = 0;
};

// Raw network output: standardized input, tanh hidden layers, linear head.
// No clamp; this is the function the training loss sees.
Eigen::VectorXd mlp_raw(const MlpParams& p, const Eigen::VectorXd& x);

// Deployment output: raw output clamped to the stored box.
Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x);

// Mean over the batch of |raw(x) - u|^2, plus analytic parameter gradient.
// X: n x B, U: m x B.
double mlp_loss_grad(const MlpParams& p, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& U, MlpParams* grad);

struct TrainReport {
  std::vector<double> epoch_loss;  // mean minibatch loss per epoch
  long n_samples = 0;
};

// Supervised regression onto the demonstrations' (state, input) pairs with
// Adam and decoupled weight decay.  Deterministic for a fixed seed.
MlpParams train_bc(const SystemModel& model, const std::vector<Trajectory>& demos,
                   const TrainConfig& cfg, TrainReport* report = nullptr);

// Closed loop u = forward(x) evaluated at every integrator step, with the
// same termination rules as the chain-policy rollout.
RolloutRecord rollout_bc(const SystemModel& model, const TargetSpec& target,
                         const MlpParams& params, const Eigen::VectorXd& x0,
                         const RolloutConfig& cfg);

// Central-difference audit of mlp_loss_grad on n_coords randomly chosen
// parameters; returns the largest relative mismatch.
double gradient_check(const MlpParams& p, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& U, int n_coords, uint64_t seed,
                      double h = 1e-5);

}  // namespace hamchain
