#include "hamchain/dynamics.hpp"

#include <cmath>

#include "hamchain/errors.hpp"
#include "hamchain/rng.hpp"

namespace hamchain {

namespace {
constexpr double kPi = 3.141592653589793238462643383279;

// max |sin q| over [lo, hi]
double max_abs_sin(double lo, double hi) {
  if (hi - lo >= kPi) return 1.0;
  double k = std::ceil((lo - kPi / 2) / kPi);
  if (kPi / 2 + k * kPi <= hi) return 1.0;
  return std::max(std::abs(std::sin(lo)), std::abs(std::sin(hi)));
}

double max_abs_cos(double lo, double hi) { return max_abs_sin(lo + kPi / 2, hi + kPi / 2); }

// min cos q over [lo, hi]
double min_cos(double lo, double hi) {
  // interior minima sit at odd multiples of pi
  double k = std::ceil((lo - kPi) / (2 * kPi));
  if (kPi + k * 2 * kPi <= hi) return -1.0;
  return std::min(std::cos(lo), std::cos(hi));
}
}  // namespace

double delta_h(const TargetSpec& tgt, double h_value) {
  if (h_value >= tgt.h_plus) return h_value - tgt.h_max;
  return tgt.h_min - h_value;
}

double delta_h(const SystemModel& model, const TargetSpec& tgt, const Eigen::VectorXd& x) {
  return delta_h(tgt, model.hamiltonian(x));
}

Stepper::Stepper(const SystemModel& model) : model_(&model) {
  const int n = model.state_dim;
  const int m = model.input_dim;
  k1_.resize(n);
  k2_.resize(n);
  k3_.resize(n);
  k4_.resize(n);
  tmp_.resize(n);
  gh_.resize(n);
  J_.resize(n, n);
  G_.resize(n, m);
}

void Stepper::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) {
  if (model_->fast_rhs) {
    model_->fast_rhs(x, u, out);
    return;
  }
  model_->grad_h(x, gh_);
  model_->interconnection(x, J_);
  model_->input_map(x, G_);
  out.noalias() = J_ * gh_;
  out.noalias() += G_ * u;
}

void Stepper::step(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double dt,
                   Eigen::VectorXd& out) {
  rhs(x, u, k1_);
  tmp_ = x + (0.5 * dt) * k1_;
  rhs(tmp_, u, k2_);
  tmp_ = x + (0.5 * dt) * k2_;
  rhs(tmp_, u, k3_);
  tmp_ = x + dt * k3_;
  rhs(tmp_, u, k4_);
  out = x + (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

Eigen::VectorXd rhs(const SystemModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  Stepper st(model);
  Eigen::VectorXd out(model.state_dim);
  st.rhs(x, u, out);
  return out;
}

Eigen::VectorXd integrate_step(const SystemModel& model, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u, double dt) {
  Stepper st(model);
  Eigen::VectorXd out(model.state_dim);
  st.step(x, u, dt, out);
  return out;
}

Trajectory simulate(const SystemModel& model, const Eigen::VectorXd& x0,
                    const Eigen::MatrixXd& controls, double dt) {
  if (x0.size() != model.state_dim) throw ConfigError("simulate: x0 dimension mismatch");
  if (controls.rows() != model.input_dim && controls.cols() > 0)
    throw ConfigError("simulate: control dimension mismatch");
  if (!(dt > 0)) throw ConfigError("simulate: dt must be positive");

  const int K = static_cast<int>(controls.cols());
  Trajectory traj;
  traj.times.resize(K + 1);
  traj.states.resize(model.state_dim, K + 1);
  traj.controls = controls;
  traj.states.col(0) = x0;
  traj.times[0] = 0.0;

  Stepper st(model);
  Eigen::VectorXd x = x0, xn(model.state_dim);
  for (int k = 0; k < K; ++k) {
    st.step(x, controls.col(k), dt, xn);
    if (!xn.allFinite())
      throw IntegrationError("simulate: non-finite state at t=" + std::to_string((k + 1) * dt));
    traj.states.col(k + 1) = xn;
    traj.times[k + 1] = (k + 1) * dt;
    x.swap(xn);
  }
  return traj;
}

std::pair<double, double> energy_band_of_ball(const SystemModel& model,
                                              const Eigen::VectorXd& center, double radius,
                                              int shells, int directions, bool clip_to_box) {
  if (radius < 0) throw ConfigError("energy_band_of_ball: negative radius");
  const int n = model.state_dim;
  if (!clip_to_box) {
    for (int i = 0; i < n; ++i) {
      if (center[i] - radius < model.state_lo[i] || center[i] + radius > model.state_hi[i])
        throw ConfigError("energy_band_of_ball: ball leaves the state box");
    }
  }
  // clamping toward a center inside the box never leaves the ball, so the
  // clipped samples still witness energies of ball-and-box states only
  auto probe = [&](Eigen::VectorXd& x, double& lo, double& hi) {
    if (clip_to_box) x = x.cwiseMax(model.state_lo).cwiseMin(model.state_hi);
    double h = model.hamiltonian(x);
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  };

  double h0 = model.hamiltonian(center);
  double lo = h0, hi = h0;
  if (radius == 0.0) return {lo, hi};

  Eigen::VectorXd x(n);
  if (n == 2) {
    for (int j = 1; j <= shells; ++j) {
      double r = radius * static_cast<double>(j) / shells;
      for (int a = 0; a < directions; ++a) {
        double th = 2.0 * kPi * a / directions;
        x[0] = center[0] + r * std::cos(th);
        x[1] = center[1] + r * std::sin(th);
        probe(x, lo, hi);
      }
    }
  } else {
    // fixed-seed direction set keeps this deterministic in any dimension
    Rng rng(seed_stream(0x5ba11ull, static_cast<uint64_t>(n)));
    Eigen::VectorXd dir(n);
    for (int a = 0; a < directions; ++a) {
      for (int i = 0; i < n; ++i) dir[i] = rng.normal();
      double nrm = dir.norm();
      if (nrm == 0) continue;
      dir /= nrm;
      for (int j = 1; j <= shells; ++j) {
        double r = radius * static_cast<double>(j) / shells;
        x = center + r * dir;
        probe(x, lo, hi);
      }
    }
  }
  return {lo, hi};
}

TargetSpec make_target(const SystemModel& model, const Eigen::VectorXd& center, double radius,
                       double eps_margin) {
  if (!(eps_margin > 0)) throw ConfigError("make_target: eps_margin must be positive");
  TargetSpec t;
  t.center = center;
  t.radius = radius;
  auto [lo, hi] = energy_band_of_ball(model, center, radius);
  t.h_min = lo;
  t.h_max = hi;
  t.h_plus = 0.5 * (lo + hi);
  t.h_minus = 0.5 * (hi - lo);
  t.eps_margin = eps_margin;
  return t;
}

TargetSpec make_target_frac(const SystemModel& model, const Eigen::VectorXd& center, double radius,
                            double eps_frac) {
  auto [lo, hi] = energy_band_of_ball(model, center, radius);
  double h_minus = 0.5 * (hi - lo);
  if (!(h_minus > 0))
    throw ConfigError("make_target_frac: degenerate band, pass an absolute margin instead");
  return make_target(model, center, radius, eps_frac * h_minus);
}

std::optional<std::pair<int, double>> first_hit(
    const Trajectory& traj, const std::function<bool(const Eigen::VectorXd&)>& pred) {
  for (int k = 0; k < traj.states.cols(); ++k) {
    if (pred(traj.states.col(k))) return std::make_pair(k, traj.times[k]);
  }
  return std::nullopt;
}

double decrease_rate(const SystemModel& model, const TargetSpec& tgt, const Trajectory& traj) {
  if (traj.states.cols() == 0) throw NoHit("decrease_rate: empty trajectory");
  double dh0 = delta_h(tgt, model.hamiltonian(traj.states.col(0)));
  for (int k = 0; k < traj.states.cols(); ++k) {
    double dh = delta_h(tgt, model.hamiltonian(traj.states.col(k)));
    if (dh <= -tgt.eps_margin) {
      if (k == 0) throw NoHit("decrease_rate: trajectory starts inside the shrunk band");
      return (dh0 + tgt.eps_margin) / traj.times[k];
    }
  }
  throw NoHit("decrease_rate: trajectory never reaches the shrunk band");
}

std::vector<double> energy_profile(const SystemModel& model, const Trajectory& traj) {
  std::vector<double> h(traj.states.cols());
  for (int k = 0; k < traj.states.cols(); ++k) h[k] = model.hamiltonian(traj.states.col(k));
  return h;
}

SystemModel builtin_spring_mass(double mass, double stiffness, double u_abs,
                                const Eigen::Vector2d& state_lo, const Eigen::Vector2d& state_hi) {
  if (!(mass > 0) || !(stiffness > 0) || !(u_abs > 0))
    throw ConfigError("builtin_spring_mass: parameters must be positive");
  SystemModel m;
  m.id = "spring_mass";
  m.state_dim = 2;
  m.input_dim = 1;
  const double k = stiffness, im = 1.0 / mass;
  m.hamiltonian = [k, im](const Eigen::VectorXd& x) {
    return 0.5 * im * x[1] * x[1] + 0.5 * k * x[0] * x[0];
  };
  m.grad_h = [k, im](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g[0] = k * x[0];
    g[1] = im * x[1];
  };
  m.interconnection = [](const Eigen::VectorXd&, Eigen::MatrixXd& J) {
    J(0, 0) = 0;
    J(0, 1) = 1;
    J(1, 0) = -1;
    J(1, 1) = 0;
  };
  m.input_map = [](const Eigen::VectorXd&, Eigen::MatrixXd& G) {
    G(0, 0) = 0;
    G(1, 0) = 1;
  };
  m.fast_rhs = [k, im](const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) {
    out[0] = im * x[1];
    out[1] = -k * x[0] + u[0];
  };
  m.input_lo = Eigen::VectorXd::Constant(1, -u_abs);
  m.input_hi = Eigen::VectorXd::Constant(1, u_abs);
  m.state_lo = state_lo;
  m.state_hi = state_hi;

  double qa = std::max(std::abs(state_lo[0]), std::abs(state_hi[0]));
  double pa = std::max(std::abs(state_lo[1]), std::abs(state_hi[1]));
  m.lipschitz_h = std::hypot(k * qa, im * pa);
  m.bound_f = std::hypot(im * pa, k * qa + u_abs);
  m.lipschitz_f = std::max(im, k);  // singular values of [[0, 1/m], [-k, 0]]
  m.hessian_min = std::min(k, im);
  return m;
}

SystemModel builtin_pendulum(double mass, double length, double gravity, double u_abs,
                             const Eigen::Vector2d& state_lo, const Eigen::Vector2d& state_hi) {
  if (!(mass > 0) || !(length > 0) || !(gravity > 0) || !(u_abs > 0))
    throw ConfigError("builtin_pendulum: parameters must be positive");
  SystemModel m;
  m.id = "pendulum";
  m.state_dim = 2;
  m.input_dim = 1;
  const double a = mass * gravity * length;      // torque scale
  const double ii = 1.0 / (mass * length * length);  // inverse inertia
  m.hamiltonian = [a, ii](const Eigen::VectorXd& x) {
    return 0.5 * ii * x[1] * x[1] + a * (1.0 - std::cos(x[0]));
  };
  m.grad_h = [a, ii](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g[0] = a * std::sin(x[0]);
    g[1] = ii * x[1];
  };
  m.interconnection = [](const Eigen::VectorXd&, Eigen::MatrixXd& J) {
    J(0, 0) = 0;
    J(0, 1) = 1;
    J(1, 0) = -1;
    J(1, 1) = 0;
  };
  m.input_map = [](const Eigen::VectorXd&, Eigen::MatrixXd& G) {
    G(0, 0) = 0;
    G(1, 0) = 1;
  };
  m.fast_rhs = [a, ii](const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::VectorXd& out) {
    out[0] = ii * x[1];
    out[1] = -a * std::sin(x[0]) + u[0];
  };
  m.input_lo = Eigen::VectorXd::Constant(1, -u_abs);
  m.input_hi = Eigen::VectorXd::Constant(1, u_abs);
  m.state_lo = state_lo;
  m.state_hi = state_hi;

  double smax = max_abs_sin(state_lo[0], state_hi[0]);
  double cmax = max_abs_cos(state_lo[0], state_hi[0]);
  double cmin = min_cos(state_lo[0], state_hi[0]);
  double pa = std::max(std::abs(state_lo[1]), std::abs(state_hi[1]));
  m.lipschitz_h = std::hypot(a * smax, ii * pa);
  m.bound_f = std::hypot(ii * pa, a * smax + u_abs);
  m.lipschitz_f = std::max(ii, a * cmax);
  if (a * cmin > 0) {
    m.hessian_min = std::min(a * cmin, ii);
  } else {
    m.hessian_min.reset();  // Hessian indefinite somewhere in the box
  }
  return m;
}

void estimate_constants(SystemModel& model, int per_axis) {
  if (model.state_dim != 2)
    throw ConfigError("estimate_constants: grid fallback implemented for 2-D states only");
  if (per_axis < 2) throw ConfigError("estimate_constants: per_axis must be >= 2");
  const double inflate = 1.05;
  Stepper st(model);
  Eigen::VectorXd x(2), g(2), f(2), fp(2), fm(2), xp(2), xm(2);
  Eigen::MatrixXd Jac(2, 2);
  double max_g = 0, max_f = 0, max_jac = 0;
  double min_eig = std::numeric_limits<double>::infinity();

  std::vector<Eigen::VectorXd> u_corners;
  {
    Eigen::VectorXd u(model.input_dim);
    int combos = 1 << model.input_dim;
    for (int c = 0; c < combos; ++c) {
      for (int i = 0; i < model.input_dim; ++i)
        u[i] = (c >> i) & 1 ? model.input_hi[i] : model.input_lo[i];
      u_corners.push_back(u);
    }
  }

  const double fd = 1e-6;
  for (int i = 0; i < per_axis; ++i) {
    x[0] = model.state_lo[0] +
           (model.state_hi[0] - model.state_lo[0]) * i / static_cast<double>(per_axis - 1);
    for (int j = 0; j < per_axis; ++j) {
      x[1] = model.state_lo[1] +
             (model.state_hi[1] - model.state_lo[1]) * j / static_cast<double>(per_axis - 1);
      model.grad_h(x, g);
      max_g = std::max(max_g, g.norm());
      for (const auto& u : u_corners) {
        st.rhs(x, u, f);
        max_f = std::max(max_f, f.norm());
        for (int d = 0; d < 2; ++d) {
          xp = x;
          xm = x;
          xp[d] += fd;
          xm[d] -= fd;
          st.rhs(xp, u, fp);
          st.rhs(xm, u, fm);
          Jac.col(d) = (fp - fm) / (2 * fd);
        }
        max_jac = std::max(max_jac, Jac.operatorNorm());
      }
      // Hessian of H by central differences of the gradient
      Eigen::Matrix2d Hess;
      for (int d = 0; d < 2; ++d) {
        xp = x;
        xm = x;
        xp[d] += fd;
        xm[d] -= fd;
        Eigen::VectorXd gp(2), gm(2);
        model.grad_h(xp, gp);
        model.grad_h(xm, gm);
        Hess.col(d) = (gp - gm) / (2 * fd);
      }
      Eigen::Matrix2d sym = 0.5 * (Hess + Hess.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(sym);
      min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
  }
  model.lipschitz_h = max_g * inflate;
  model.bound_f = max_f * inflate;
  model.lipschitz_f = max_jac * inflate;
  if (min_eig > 0) {
    model.hessian_min = min_eig / inflate;  // deflate a lower bound
  } else {
    model.hessian_min.reset();
  }
}

}  // namespace hamchain
