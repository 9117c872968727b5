#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hamchain/dynamics.hpp"
#include "hamchain/expert.hpp"
#include "hamchain/rng.hpp"

namespace hamchain {

// Scalar inputs for the closed-form calculators.  Everything is a plain
// number; the calculators validate only what they divide by.
struct BoundInputs {
  double l_h = 0.0;      // gradient bound
  double c_f = 0.0;      // vector-field bound
  double lip_l = 0.0;    // dynamics Lipschitz constant
  std::optional<double> mu_h;  // strong-convexity constant, absent if H is not
  double d_x = 0.0;      // state-box diameter
  double eps = 0.0;      // band margin
  double v0 = 0.0;       // certified decrease rate
  double v_lower = 0.0;  // uniform decrease-rate lower bound
  double h1 = 0.0, h2 = 0.0;  // energy interval endpoints
  double t1 = 0.0, t2 = 0.0;  // return and in-band arrival time bounds
  double tau_min = 0.0;  // shortest snippet duration
  double c_level = 0.0;  // largest band distance over the start set
};

// (max decrease speed, min hitting time) = (l_h c_f, eps / (l_h c_f))
std::pair<double, double> lemma1_bounds(double l_h, double c_f, double eps);

// (v_eps_x - v0) t_star / (l_h (1 + e^{lip_l t_star})); requires v_eps_x > v0
double theorem2_radius(double v_eps_x, double v0, double t_star, double l_h,
                       double lip_l);

// (h2-h1) 16 l_h^2 / (mu_h (1 - v0/v_lower)^2) * e^{2 lip_l (l_h d_x + eps)/v_lower} / eps^2,
// rounded up.  Refuses (MissingConstant) when mu_h is absent: systems without
// strong convexity get no honest value from this formula.
double sample_complexity(const BoundInputs& in);

// (l_h d_x / v0)(1 + t1/tau_min) + t2
double finite_time_bound(const BoundInputs& in);

// Empirical proxy for the uniform decrease rate: min over start states of
// (dh(x0)+eps)/t_hit under expert control.  Expert controls are feasible but
// suboptimal, so the estimate is biased low; that is the safe direction.
struct VLowerEstimate {
  double v_lower = 0.0;
  int n_used = 0;
  int n_failed = 0;   // expert failures, excluded
  int n_skipped = 0;  // starts already inside the shrunk band
};
VLowerEstimate estimate_v_lower(const SystemModel& model, const TargetSpec& target,
                                const ExpertConfig& expert_cfg,
                                const std::vector<Eigen::VectorXd>& sample_states,
                                Rng& rng, double dt = 1e-3);

}  // namespace hamchain
