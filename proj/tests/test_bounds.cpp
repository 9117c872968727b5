#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hamchain/bounds.hpp"
#include "hamchain/errors.hpp"

using namespace hamchain;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

BoundInputs documented_complexity_inputs() {
  // h2-h1=1, l_h=1, mu=1, v0/v_lower=0.5, L=1, D=1, eps=0.1, v_lower=1
  BoundInputs in;
  in.h1 = 0.0;
  in.h2 = 1.0;
  in.l_h = 1.0;
  in.mu_h = 1.0;
  in.v0 = 0.5;
  in.v_lower = 1.0;
  in.lip_l = 1.0;
  in.d_x = 1.0;
  in.eps = 0.1;
  return in;
}

}  // namespace

TEST_CASE("velocity and hitting-time bounds") {
  auto [v, t] = lemma1_bounds(2.0, 3.0, 0.1);
  CHECK(v == 6.0);
  // frozen: 0.1/6 in double arithmetic
  CHECK(t == 0.016666666666666666);

  auto [v1, t1] = lemma1_bounds(1.0, 1.0, 1.0);
  CHECK(v1 == 1.0);
  CHECK(t1 == 1.0);

  // shrinking eps shrinks only the hitting time
  auto [v2, t2] = lemma1_bounds(2.0, 3.0, 1e-9);
  CHECK(v2 == 6.0);
  CHECK(t2 == doctest::Approx(1e-9 / 6.0).epsilon(1e-12));

  CHECK_THROWS_AS(lemma1_bounds(0.0, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(lemma1_bounds(1.0, -1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(lemma1_bounds(1.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("certified radius formula") {
  // lip_l = 0 -> exp term is 1
  CHECK(theorem2_radius(1.0, 0.5, 1.0, 1.0, 0.0) == 0.25);
  // frozen: 0.5 / (2 (1 + e))
  const double expect = 0.5 / (2.0 * (1.0 + std::exp(1.0)));
  CHECK(theorem2_radius(1.0, 0.5, 1.0, 2.0, 1.0) == expect);
  CHECK(expect == doctest::Approx(0.06723535).epsilon(1e-7));

  // boundary v_eps == v0 rejected
  CHECK_THROWS_AS(theorem2_radius(0.5, 0.5, 1.0, 1.0, 1.0), ConfigError);
  CHECK_THROWS_AS(theorem2_radius(1.0, 0.5, 0.0, 1.0, 1.0), ConfigError);

  // monotone decreasing in lip_l and in t_star beyond the peak is not claimed;
  // the documented monotonicity: larger lip_l never enlarges the radius
  const double base = theorem2_radius(1.0, 0.5, 1.0, 1.0, 0.5);
  CHECK(theorem2_radius(1.0, 0.5, 1.0, 1.0, 1.0) < base);
  CHECK(theorem2_radius(1.0, 0.5, 1.0, 1.0, 0.0) > base);
}

TEST_CASE("sample complexity on the documented example") {
  BoundInputs in = documented_complexity_inputs();
  // (1)(16)/(1 * 0.25) * e^{2 * (1 + 0.1)} / 0.01 = 6400 e^{2.2}
  const double raw = 6400.0 * std::exp(2.2);
  CHECK(raw == doctest::Approx(57760.0863963784).epsilon(1e-12));
  CHECK(sample_complexity(in) == std::ceil(raw));
  CHECK(sample_complexity(in) == 57761.0);
}

TEST_CASE("sample complexity limiting form without growth terms") {
  BoundInputs in = documented_complexity_inputs();
  in.lip_l = 0.0;
  in.v0 = 0.0;
  // (h2-h1) 16 l_h^2 / (mu eps^2) = 16/0.01 = 1600
  CHECK(sample_complexity(in) == 1600.0);
}

TEST_CASE("sample complexity is monotone decreasing in eps near the example") {
  BoundInputs a = documented_complexity_inputs();
  BoundInputs b = a;
  b.eps = 0.11;
  CHECK(sample_complexity(b) < sample_complexity(a));
}

TEST_CASE("sample complexity refuses without strong convexity") {
  BoundInputs in = documented_complexity_inputs();
  in.mu_h.reset();
  CHECK_THROWS_AS(sample_complexity(in), MissingConstant);
  in.mu_h = 0.0;
  CHECK_THROWS_AS(sample_complexity(in), ConfigError);
}

TEST_CASE("sample complexity input validation") {
  BoundInputs in = documented_complexity_inputs();
  in.v0 = 1.5;  // >= v_lower
  CHECK_THROWS_AS(sample_complexity(in), ConfigError);
  in = documented_complexity_inputs();
  in.h2 = -1.0;
  CHECK_THROWS_AS(sample_complexity(in), ConfigError);
  in = documented_complexity_inputs();
  in.eps = 0.0;
  CHECK_THROWS_AS(sample_complexity(in), ConfigError);
}

TEST_CASE("finite time bound") {
  BoundInputs in;
  in.l_h = 1.0;
  in.d_x = 2.0;
  in.v0 = 0.1;
  in.t1 = 5.0;
  in.tau_min = 0.5;
  in.t2 = 10.0;
  // (2/0.1)(1 + 10) + 10 = 230
  CHECK(finite_time_bound(in) == 230.0);

  in.t1 = 0.0;
  CHECK(finite_time_bound(in) == 30.0);  // L_H D / v0 + T2

  in.t1 = 5.0;
  in.tau_min = 1e18;  // huge snippets behave like no excursions
  CHECK(finite_time_bound(in) == doctest::Approx(30.0).epsilon(1e-12));

  in.v0 = 0.0;
  CHECK_THROWS_AS(finite_time_bound(in), ConfigError);
}

TEST_CASE("empirical decrease-rate estimate and the velocity cap") {
  SystemModel model = builtin_spring_mass();
  // off-center ball: its energy band is wide (H in [0.605, 0.845]), and the
  // starts below it must climb through the shrunk band on the sample grid, so
  // the rate estimator has something to hit; a ball centered at the origin has
  // level sets tangent to the band edge and entries graze it instead
  TargetSpec target = make_target_frac(model, vec2(1.2, 0), 0.1, 0.5);

  ExpertConfig ecfg;
  ecfg.max_episode = 20.0;

  std::vector<Eigen::VectorXd> starts;
  Rng srng(seed_stream(11, 0x57a27ull));
  for (int i = 0; i < 50; ++i) {
    double th = srng.uniform(0, 2 * 3.141592653589793);
    double r = std::sqrt(srng.uniform(0.26, 1.0));  // all below the band
    starts.push_back(vec2(r * std::cos(th), r * std::sin(th)));
  }

  // every measured rate individually respects the velocity cap
  const double cap = model.lipschitz_h * model.bound_f * (1.0 + 1e-6);
  int measured = 0;
  for (int i = 0; i < 50; ++i) {
    Rng drng(seed_stream(11, 0xe8ull, static_cast<uint64_t>(i)));
    try {
      Demonstration demo = generate_demonstration(model, target, starts[i], ecfg, drng);
      const double v = decrease_rate(model, target, demo.trajectory);
      CHECK(v > 0.0);
      CHECK(v <= cap);
      ++measured;
    } catch (const ExpertFailure&) {
    } catch (const NoHit&) {
    }
  }
  CHECK(measured >= 40);

  // the aggregate estimator agrees on a subset
  std::vector<Eigen::VectorXd> subset(starts.begin(), starts.begin() + 6);
  Rng erng(seed_stream(11, 0xe8e8ull));
  auto est = estimate_v_lower(model, target, ecfg, subset, erng);
  CHECK(est.n_used >= 1);
  CHECK(est.v_lower > 0.0);
  CHECK(est.v_lower <= cap);

  CHECK_THROWS_AS(estimate_v_lower(model, target, ecfg, {}, erng), ConfigError);
}

TEST_CASE("calculators are pure") {
  BoundInputs in = documented_complexity_inputs();
  const double a = sample_complexity(in);
  const double b = sample_complexity(in);
  CHECK(a == b);
  auto p1 = lemma1_bounds(2, 3, 0.1);
  auto p2 = lemma1_bounds(2, 3, 0.1);
  CHECK(p1 == p2);
}
