#include "hamchain/bounds.hpp"

#include <cmath>

#include "hamchain/errors.hpp"

namespace hamchain {

std::pair<double, double> lemma1_bounds(double l_h, double c_f, double eps) {
  if (!(l_h > 0.0) || !(c_f > 0.0)) throw ConfigError("lemma1_bounds: l_h and c_f must be positive");
  if (!(eps > 0.0)) throw ConfigError("lemma1_bounds: eps must be positive");
  const double v_max = l_h * c_f;
  return {v_max, eps / v_max};
}

double theorem2_radius(double v_eps_x, double v0, double t_star, double l_h,
                       double lip_l) {
  if (!(v_eps_x > v0)) throw ConfigError("theorem2_radius: requires v_eps_x > v0");
  if (!(t_star > 0.0)) throw ConfigError("theorem2_radius: t_star must be positive");
  if (!(l_h > 0.0)) throw ConfigError("theorem2_radius: l_h must be positive");
  if (lip_l < 0.0) throw ConfigError("theorem2_radius: negative Lipschitz constant");
  return (v_eps_x - v0) * t_star / (l_h * (1.0 + std::exp(lip_l * t_star)));
}

double sample_complexity(const BoundInputs& in) {
  if (!in.mu_h)
    throw MissingConstant(
        "sample_complexity: no strong-convexity constant for this system; "
        "the level-set volume argument does not apply");
  if (!(*in.mu_h > 0.0)) throw ConfigError("sample_complexity: mu_h must be positive");
  if (!(in.eps > 0.0)) throw ConfigError("sample_complexity: eps must be positive");
  if (!(in.l_h > 0.0)) throw ConfigError("sample_complexity: l_h must be positive");
  if (!(in.v_lower > 0.0)) throw ConfigError("sample_complexity: v_lower must be positive");
  if (!(in.v0 >= 0.0) || in.v0 >= in.v_lower)
    throw ConfigError("sample_complexity: requires 0 <= v0 < v_lower");
  if (in.h2 < in.h1) throw ConfigError("sample_complexity: requires h2 >= h1");
  if (in.d_x <= 0.0) throw ConfigError("sample_complexity: d_x must be positive");
  const double shrink = 1.0 - in.v0 / in.v_lower;
  const double pre = (in.h2 - in.h1) * 16.0 * in.l_h * in.l_h / (*in.mu_h * shrink * shrink);
  const double growth = std::exp(2.0 * in.lip_l * (in.l_h * in.d_x + in.eps) / in.v_lower);
  return std::ceil(pre * growth / (in.eps * in.eps));
}

double finite_time_bound(const BoundInputs& in) {
  if (!(in.v0 > 0.0)) throw ConfigError("finite_time_bound: v0 must be positive");
  if (!(in.tau_min > 0.0)) throw ConfigError("finite_time_bound: tau_min must be positive");
  if (!(in.l_h > 0.0) || !(in.d_x > 0.0))
    throw ConfigError("finite_time_bound: l_h and d_x must be positive");
  if (in.t1 < 0.0 || in.t2 < 0.0) throw ConfigError("finite_time_bound: negative time bound");
  return (in.l_h * in.d_x / in.v0) * (1.0 + in.t1 / in.tau_min) + in.t2;
}

VLowerEstimate estimate_v_lower(const SystemModel& model, const TargetSpec& target,
                                const ExpertConfig& expert_cfg,
                                const std::vector<Eigen::VectorXd>& sample_states,
                                Rng& rng, double dt) {
  if (sample_states.empty()) throw ConfigError("estimate_v_lower: no sample states");
  VLowerEstimate out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x0 : sample_states) {
    if (delta_h(model, target, x0) <= -target.eps_margin) {
      ++out.n_skipped;
      continue;
    }
    try {
      Demonstration demo = generate_demonstration(model, target, x0, expert_cfg, rng, dt);
      const double v = decrease_rate(model, target, demo.trajectory);
      if (v < best) best = v;
      ++out.n_used;
    } catch (const ExpertFailure&) {
      ++out.n_failed;
    } catch (const NoHit&) {
      // reached the ball without ever dipping eps below the band; the rate is
      // unbounded for this start, so it cannot lower the minimum
      ++out.n_skipped;
    }
  }
  if (out.n_used == 0)
    throw ConfigError("estimate_v_lower: no usable rollouts");
  out.v_lower = best;
  return out;
}

}  // namespace hamchain
