#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hamchain {

// Control-affine lossless system  xdot = J(x) grad H(x) + G(x) u  with
// skew-symmetric J. Evaluators are callbacks so user systems plug in; the
// builtins also install fast_rhs with the algebra folded together.
struct SystemModel {
  std::string id;
  int state_dim = 0;
  int input_dim = 0;

  std::function<double(const Eigen::VectorXd&)> hamiltonian;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)> grad_h;
  std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)> interconnection;  // J(x)
  std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)> input_map;        // G(x)

  // Optional fused x,u -> xdot. Must agree with the generic path; the
  // builtins' versions are algebraically identical term by term.
  std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&, Eigen::VectorXd&)> fast_rhs;

  Eigen::VectorXd input_lo, input_hi;  // admissible input box
  Eigen::VectorXd state_lo, state_hi;  // working region; leaving it fails a rollout

  // Worst-case constants over the working region.
  double lipschitz_h = 0.0;                // bound on ||grad H||
  double lipschitz_f = 0.0;                // bound on ||d f / d x||, uniform in u
  double bound_f = 0.0;                    // bound on ||f(x, u)||
  std::optional<double> hessian_min;       // min eigenvalue of Hess H, if positive

  bool in_state_box(const Eigen::VectorXd& x) const {
    return (x.array() >= state_lo.array()).all() && (x.array() <= state_hi.array()).all();
  }
  double diameter() const { return (state_hi - state_lo).norm(); }
};

// Target ball plus the energy band its states occupy.
struct TargetSpec {
  Eigen::VectorXd center;
  double radius = 0.0;
  double h_min = 0.0, h_max = 0.0;    // band endpoints
  double h_plus = 0.0, h_minus = 0.0; // band midpoint / half-width
  double eps_margin = 0.0;            // shrink margin for the inner band

  bool in_ball(const Eigen::VectorXd& x) const { return (x - center).norm() <= radius; }
};

struct Trajectory {
  std::vector<double> times;  // K+1 grid times
  Eigen::MatrixXd states;     // n x (K+1)
  Eigen::MatrixXd controls;   // m x K, held constant per interval

  int steps() const { return static_cast<int>(controls.cols()); }
  double duration() const { return times.empty() ? 0.0 : times.back(); }
};

// Signed distance of H(x) to the band: negative inside, positive outside.
// Branchy on purpose so the sign matches the stored endpoints exactly.
double delta_h(const TargetSpec& tgt, double h_value);
double delta_h(const SystemModel& model, const TargetSpec& tgt, const Eigen::VectorXd& x);

// RK4 stepper with preallocated workspace for hot loops.
class Stepper {
 public:
  explicit Stepper(const SystemModel& model);
  void rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out);
  void step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt, Eigen::VectorXd& out);

 private:
  const SystemModel* model_;
  Eigen::VectorXd k1_, k2_, k3_, k4_, tmp_, gh_;
  Eigen::MatrixXd J_, G_;
};

// One-off conveniences (construct a Stepper internally).
Eigen::VectorXd rhs(const SystemModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u);
Eigen::VectorXd integrate_step(const SystemModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u, double dt);

// Fixed-step rollout under a piecewise-constant control sequence (m x K).
// Throws IntegrationError on a non-finite state. Does not enforce the state
// box; rollout-level code decides what leaving the region means.
Trajectory simulate(const SystemModel& model, const Eigen::VectorXd& x0,
                    const Eigen::MatrixXd& controls, double dt);

// Min/max of H over a dense deterministic sample of the closed ball
// (center + 64 radial shells x 64 directions). Requires ball inside the
// state box unless clip_to_box, which clamps samples into the box instead.
// radius == 0 degenerates to (H(c), H(c)).
std::pair<double, double> energy_band_of_ball(const SystemModel& model,
                                              const Eigen::VectorXd& center, double radius,
                                              int shells = 64, int directions = 64,
                                              bool clip_to_box = false);

TargetSpec make_target(const SystemModel& model, const Eigen::VectorXd& center, double radius,
                       double eps_margin);
// eps_margin as a fraction of the band half-width (handy default: 0.2).
TargetSpec make_target_frac(const SystemModel& model, const Eigen::VectorXd& center, double radius,
                            double eps_frac);

// First grid sample satisfying pred; no sub-step root finding.
std::optional<std::pair<int, double>> first_hit(
    const Trajectory& traj, const std::function<bool(const Eigen::VectorXd&)>& pred);

// Average decrease rate of delta_h down to the eps-shrunk band:
// (delta_h(x0) + eps) / t_hit, t_hit the first grid time with delta_h <= -eps.
// Throws NoHit if the trajectory starts inside or never gets there.
double decrease_rate(const SystemModel& model, const TargetSpec& tgt, const Trajectory& traj);

std::vector<double> energy_profile(const SystemModel& model, const Trajectory& traj);

// Builtin systems; constants derived in closed form from the boxes.
SystemModel builtin_spring_mass(double mass = 1.0, double stiffness = 1.0, double u_abs = 20.0,
                                const Eigen::Vector2d& state_lo = Eigen::Vector2d(-5, -5),
                                const Eigen::Vector2d& state_hi = Eigen::Vector2d(5, 5));
SystemModel builtin_pendulum(double mass = 1.0, double length = 2.0, double gravity = 9.81,
                             double u_abs = 20.0,
                             const Eigen::Vector2d& state_lo = Eigen::Vector2d(-6.283185307179586,
                                                                               -30),
                             const Eigen::Vector2d& state_hi = Eigen::Vector2d(12.566370614359172,
                                                                               30));

// Fills lipschitz_h / lipschitz_f / bound_f / hessian_min for user models by
// dense grid sampling (per-axis resolution, 5% inflation). 2-D only.
void estimate_constants(SystemModel& model, int per_axis = 200);

}  // namespace hamchain
