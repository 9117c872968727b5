#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hamchain/dynamics.hpp"
#include "hamchain/errors.hpp"
#include "hamchain/rng.hpp"

using namespace hamchain;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {
VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}
VectorXd vec1(double a) {
  VectorXd v(1);
  v << a;
  return v;
}
}  // namespace

TEST_CASE("vector field values, spring mass") {
  SystemModel m = builtin_spring_mass();
  VectorXd f = rhs(m, vec2(1, 0), vec1(0));
  CHECK(f[0] == 0.0);
  CHECK(f[1] == doctest::Approx(-1.0));
  f = rhs(m, vec2(0, 0), vec1(5));
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 5.0);
}

TEST_CASE("vector field values, pendulum") {
  SystemModel m = builtin_pendulum();
  VectorXd f = rhs(m, vec2(M_PI / 2, 0), vec1(0));
  CHECK(f[0] == 0.0);
  // m g l = 1 * 9.81 * 2
  CHECK(f[1] == doctest::Approx(-19.62).epsilon(1e-14));
}

TEST_CASE("hamiltonian values at reference points") {
  SystemModel sm = builtin_spring_mass();
  CHECK(sm.hamiltonian(vec2(1, 0)) == doctest::Approx(0.5).epsilon(1e-15));
  SystemModel pd = builtin_pendulum();
  CHECK(pd.hamiltonian(vec2(M_PI, 0)) == doctest::Approx(39.24).epsilon(1e-14));
}

TEST_CASE("fused rhs agrees bitwise with the structured path") {
  for (SystemModel m : {builtin_spring_mass(), builtin_pendulum()}) {
    SystemModel generic = m;
    generic.fast_rhs = nullptr;
    Rng rng(42);
    for (int i = 0; i < 200; ++i) {
      VectorXd x = vec2(rng.uniform(m.state_lo[0], m.state_hi[0]),
                        rng.uniform(m.state_lo[1], m.state_hi[1]));
      VectorXd u = vec1(rng.uniform(m.input_lo[0], m.input_hi[0]));
      VectorXd a = rhs(m, x, u);
      VectorXd b = rhs(generic, x, u);
      CHECK(a[0] == b[0]);
      CHECK(a[1] == b[1]);
    }
  }
}

TEST_CASE("gradient flow cancels: grad_h' J grad_h is numerically zero") {
  for (SystemModel m : {builtin_spring_mass(), builtin_pendulum()}) {
    Rng rng(7);
    Eigen::VectorXd g(2);
    Eigen::MatrixXd J(2, 2);
    for (int i = 0; i < 1000; ++i) {
      VectorXd x = vec2(rng.uniform(m.state_lo[0], m.state_hi[0]),
                        rng.uniform(m.state_lo[1], m.state_hi[1]));
      m.grad_h(x, g);
      m.interconnection(x, J);
      double s = g.dot(J * g);
      CHECK(std::abs(s) <= 1e-10 * (1.0 + g.squaredNorm()));
    }
  }
}

TEST_CASE("single step matches the closed-form rotation") {
  // unit spring mass with zero input rotates the state
  SystemModel m = builtin_spring_mass();
  double dt = 1e-3;
  VectorXd x0 = vec2(0.7, -0.3);
  VectorXd x1 = integrate_step(m, x0, vec1(0), dt);
  double c = std::cos(dt), s = std::sin(dt);
  VectorXd exact = vec2(c * x0[0] + s * x0[1], -s * x0[0] + c * x0[1]);
  CHECK((x1 - exact).norm() <= 1e-10);
}

TEST_CASE("zero gradient field leaves the state fixed") {
  SystemModel m;
  m.id = "flat";
  m.state_dim = 2;
  m.input_dim = 1;
  m.hamiltonian = [](const VectorXd&) { return 1.0; };
  m.grad_h = [](const VectorXd&, VectorXd& g) { g.setZero(); };
  m.interconnection = [](const VectorXd&, Eigen::MatrixXd& J) {
    J << 0, 1, -1, 0;
  };
  m.input_map = [](const VectorXd&, Eigen::MatrixXd& G) { G.setZero(); };
  m.state_lo = vec2(-10, -10);
  m.state_hi = vec2(10, 10);
  m.input_lo = vec1(-1);
  m.input_hi = vec1(1);
  VectorXd x0 = vec2(0.3, 0.4);
  VectorXd x1 = integrate_step(m, x0, vec1(0.9), 0.01);
  CHECK(x1[0] == x0[0]);
  CHECK(x1[1] == x0[1]);
}

TEST_CASE("forced spring mass matches the analytic solution") {
  SystemModel m = builtin_spring_mass();
  double dt = 1e-3, u = 2.0, T = 0.5;
  int K = static_cast<int>(std::round(T / dt));
  Eigen::MatrixXd controls = Eigen::MatrixXd::Constant(1, K, u);
  Trajectory traj = simulate(m, vec2(1, 0), controls, dt);
  double c = std::cos(T), s = std::sin(T);
  double q = u + (1 - u) * c;  // q0 = 1, p0 = 0
  double p = -(1 - u) * s;
  CHECK(traj.states.col(K)[0] == doctest::Approx(q).epsilon(1e-9));
  CHECK(traj.states.col(K)[1] == doctest::Approx(p).epsilon(1e-9));
  CHECK(traj.times.size() == static_cast<size_t>(K + 1));
  CHECK(traj.controls.cols() == K);
}

TEST_CASE("energy conservation over ten seconds of drift") {
  SystemModel sm = builtin_spring_mass();
  double dt = 1e-3;
  int K = 10000;
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, K);
  Trajectory t1 = simulate(sm, vec2(1, 0), zero, dt);
  double h0 = sm.hamiltonian(t1.states.col(0));
  double worst = 0;
  for (int k = 0; k <= K; ++k)
    worst = std::max(worst, std::abs(sm.hamiltonian(t1.states.col(k)) - h0));
  CHECK(worst <= 1e-8);

  SystemModel pd = builtin_pendulum();
  Trajectory t2 = simulate(pd, vec2(2.0, 1.0), zero, dt);
  h0 = pd.hamiltonian(t2.states.col(0));
  worst = 0;
  for (int k = 0; k <= K; ++k)
    worst = std::max(worst, std::abs(pd.hamiltonian(t2.states.col(k)) - h0));
  CHECK(worst <= 1e-6);
}

TEST_CASE("step halving improves terminal error at fourth order") {
  SystemModel pd = builtin_pendulum();
  VectorXd x0 = vec2(2.0, 1.0);
  auto terminal = [&](double dt) {
    int K = static_cast<int>(std::round(1.0 / dt));
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, K);
    return VectorXd(simulate(pd, x0, zero, dt).states.col(K));
  };
  VectorXd ref = terminal(0.00125);  // dt/8 reference
  double e1 = (terminal(0.01) - ref).norm();
  double e2 = (terminal(0.005) - ref).norm();
  CHECK(e1 / e2 >= 12.0);
}

TEST_CASE("flow separation respects the worst-case growth rate") {
  for (SystemModel m : {builtin_spring_mass(), builtin_pendulum()}) {
    Rng rng(11);
    double dt = 1e-3;
    int K = 1000;
    for (int trial = 0; trial < 20; ++trial) {
      VectorXd x = vec2(rng.uniform(0.5 * m.state_lo[0], 0.5 * m.state_hi[0]),
                        rng.uniform(0.5 * m.state_lo[1], 0.5 * m.state_hi[1]));
      VectorXd y = x + 0.1 * vec2(rng.normal(), rng.normal()).normalized();
      double u = rng.uniform(m.input_lo[0], m.input_hi[0]);
      Eigen::MatrixXd controls = Eigen::MatrixXd::Constant(1, K, u);
      Trajectory tx = simulate(m, x, controls, dt);
      Trajectory ty = simulate(m, y, controls, dt);
      double d0 = (x - y).norm();
      for (int k = 0; k <= K; ++k) {
        double d = (tx.states.col(k) - ty.states.col(k)).norm();
        CHECK(d <= d0 * std::exp(m.lipschitz_f * tx.times[k]) * (1.0 + 1e-6));
      }
    }
  }
}

TEST_CASE("energy band of a ball, spring mass") {
  SystemModel m = builtin_spring_mass();
  auto [lo, hi] = energy_band_of_ball(m, vec2(0, 0), 0.1);
  CHECK(lo == 0.0);
  CHECK(hi == doctest::Approx(0.005).epsilon(1e-12));
}

TEST_CASE("energy band of a ball, pendulum upright") {
  SystemModel m = builtin_pendulum();
  auto [lo, hi] = energy_band_of_ball(m, vec2(M_PI, 0), 0.1);
  // extremes sit at (pi +- r, 0) and (pi, +- r)
  CHECK(lo == doctest::Approx(19.62 * (1 + std::cos(0.1))).epsilon(1e-12));
  CHECK(hi == doctest::Approx(39.24 + 0.5 * 0.25 * 0.1 * 0.1).epsilon(1e-12));
}

TEST_CASE("energy band degenerate and nested cases") {
  SystemModel m = builtin_spring_mass();
  auto [lo, hi] = energy_band_of_ball(m, vec2(0.5, 0.5), 0.0);
  double h = m.hamiltonian(vec2(0.5, 0.5));
  CHECK(lo == h);
  CHECK(hi == h);
  auto [l1, h1] = energy_band_of_ball(m, vec2(0.5, 0.5), 0.05);
  auto [l2, h2] = energy_band_of_ball(m, vec2(0.5, 0.5), 0.1);
  CHECK(l2 <= l1);
  CHECK(h2 >= h1);
  CHECK_THROWS_AS(energy_band_of_ball(m, vec2(4.95, 0), 0.1), ConfigError);
}

TEST_CASE("signed band distance") {
  TargetSpec t;
  t.center = vec2(0, 0);
  t.radius = 1;
  t.h_min = 0;
  t.h_max = 2;
  t.h_plus = 1;
  t.h_minus = 1;
  t.eps_margin = 0.1;
  CHECK(delta_h(t, 1.0) == -1.0);
  CHECK(delta_h(t, 3.0) == 1.0);
  CHECK(delta_h(t, 0.0) == 0.0);
  CHECK(delta_h(t, 2.0) == 0.0);

  SystemModel m = builtin_spring_mass();
  TargetSpec ball = make_target(m, vec2(0, 0), 0.1, 1e-3);
  CHECK(delta_h(m, ball, vec2(1, 0)) == doctest::Approx(0.495).epsilon(1e-12));
}

TEST_CASE("band membership sign law is exact at the endpoints") {
  SystemModel m = builtin_pendulum();
  TargetSpec t = make_target_frac(m, vec2(M_PI, 0), 0.1, 0.2);
  for (double h : {t.h_min, t.h_max, t.h_plus}) {
    CHECK(delta_h(t, h) <= 0.0);
  }
  CHECK(delta_h(t, std::nextafter(t.h_max, 1e308)) > 0.0);
  CHECK(delta_h(t, std::nextafter(t.h_min, -1e308)) > 0.0);
  CHECK(t.eps_margin == doctest::Approx(0.2 * t.h_minus));
}

TEST_CASE("first grid hit") {
  SystemModel m = builtin_spring_mass();
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 100);
  Trajectory traj = simulate(m, vec2(1, 0), zero, 0.01);
  auto hit = first_hit(traj, [](const VectorXd& x) { return x[1] < -0.005; });
  REQUIRE(hit.has_value());
  // p(t) = -sin t crosses -0.005 strictly after the first step
  CHECK(hit->first == 1);
  CHECK(hit->second == doctest::Approx(0.01));
  auto never = first_hit(traj, [](const VectorXd& x) { return x[0] > 2.0; });
  CHECK(!never.has_value());
}

TEST_CASE("decrease rate over a hand-built trajectory") {
  SystemModel m = builtin_spring_mass();
  TargetSpec t;
  t.center = vec2(0, 0);
  t.radius = 0.1;
  t.h_min = 0;
  t.h_max = 0.005;
  t.h_plus = 0.0025;
  t.h_minus = 0.0025;
  t.eps_margin = 0.001;

  Trajectory traj;
  traj.times = {0.0, 0.1, 0.2};
  traj.states.resize(2, 3);
  traj.states.col(0) = vec2(1, 0);     // H = 0.5, dh = 0.495
  traj.states.col(1) = vec2(0.5, 0);   // H = 0.125
  traj.states.col(2) = vec2(0.05, 0);  // H = 0.00125, dh = -0.00125 <= -eps
  traj.controls.resize(1, 2);
  traj.controls.setZero();

  CHECK(decrease_rate(m, t, traj) == doctest::Approx((0.495 + 0.001) / 0.2).epsilon(1e-12));

  Trajectory stuck = traj;
  stuck.states.col(2) = vec2(0.5, 0);
  CHECK_THROWS_AS(decrease_rate(m, t, stuck), NoHit);
  Trajectory inside = traj;
  inside.states.col(0) = vec2(0.05, 0);
  CHECK_THROWS_AS(decrease_rate(m, t, inside), NoHit);
}

TEST_CASE("builtin constants from the boxes") {
  SystemModel sm = builtin_spring_mass();  // box [-5,5]^2
  CHECK(sm.lipschitz_h == doctest::Approx(std::sqrt(50.0)).epsilon(1e-12));
  CHECK(sm.lipschitz_f == doctest::Approx(1.0));
  CHECK(sm.bound_f == doctest::Approx(std::hypot(5.0, 25.0)).epsilon(1e-12));
  REQUIRE(sm.hessian_min.has_value());
  CHECK(*sm.hessian_min == doctest::Approx(1.0));

  SystemModel pd = builtin_pendulum();  // q spans well past +-pi/2, |p| <= 30
  CHECK(pd.lipschitz_h == doctest::Approx(std::hypot(19.62, 7.5)).epsilon(1e-12));
  CHECK(pd.lipschitz_f == doctest::Approx(19.62).epsilon(1e-12));
  CHECK(pd.bound_f == doctest::Approx(std::hypot(7.5, 39.62)).epsilon(1e-12));
  CHECK(!pd.hessian_min.has_value());  // cos q changes sign inside the box

  // narrow pendulum box around the bottom keeps the Hessian positive
  SystemModel narrow =
      builtin_pendulum(1, 2, 9.81, 20, Eigen::Vector2d(-0.5, -5), Eigen::Vector2d(0.5, 5));
  REQUIRE(narrow.hessian_min.has_value());
  CHECK(*narrow.hessian_min == doctest::Approx(0.25));  // 1/(m l^2) < a cos(0.5)
}

TEST_CASE("grid estimated constants track the analytic ones") {
  SystemModel m = builtin_spring_mass(1, 1, 20, Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2));
  SystemModel est = m;
  estimate_constants(est, 50);
  CHECK(est.lipschitz_h == doctest::Approx(m.lipschitz_h * 1.05).epsilon(1e-9));
  CHECK(est.bound_f == doctest::Approx(m.bound_f * 1.05).epsilon(1e-9));
  CHECK(est.lipschitz_f >= m.lipschitz_f * 0.99);
  CHECK(est.lipschitz_f <= m.lipschitz_f * 1.06);
  REQUIRE(est.hessian_min.has_value());
  CHECK(*est.hessian_min == doctest::Approx(*m.hessian_min / 1.05).epsilon(1e-6));
}

TEST_CASE("simulate rejects malformed inputs and blowups") {
  SystemModel m = builtin_spring_mass();
  CHECK_THROWS_AS(simulate(m, VectorXd::Zero(3), Eigen::MatrixXd::Zero(1, 5), 1e-3), ConfigError);
  CHECK_THROWS_AS(simulate(m, vec2(1, 0), Eigen::MatrixXd::Zero(1, 5), 0.0), ConfigError);

  SystemModel bad;
  bad.id = "antistable";
  bad.state_dim = 2;
  bad.input_dim = 1;
  bad.hamiltonian = [](const VectorXd& x) { return x.squaredNorm(); };
  bad.grad_h = [](const VectorXd& x, VectorXd& g) { g = 2 * x; };
  bad.interconnection = [](const VectorXd&, Eigen::MatrixXd& J) { J << 0, 1, -1, 0; };
  bad.input_map = [](const VectorXd&, Eigen::MatrixXd& G) { G << 0, 1; };
  bad.fast_rhs = [](const VectorXd& x, const VectorXd&, VectorXd& out) {
    out = x * 1e30;  // explodes immediately
  };
  bad.state_lo = vec2(-1, -1);
  bad.state_hi = vec2(1, 1);
  bad.input_lo = vec1(-1);
  bad.input_hi = vec1(1);
  CHECK_THROWS_AS(simulate(bad, vec2(1, 1), Eigen::MatrixXd::Zero(1, 40), 1.0), IntegrationError);
}
