#include "hamchain/expert.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hamchain/errors.hpp"

namespace hamchain {

namespace {

// cost of one candidate sequence, scored on the planning grid
double score_sequence(const SystemModel& model, const TargetSpec& target,
                      const Eigen::VectorXd& x0, const Eigen::MatrixXd& seq,
                      const ExpertConfig& cfg, Stepper& stepper, Eigen::VectorXd& x) {
  const int steps = std::max(1, static_cast<int>(std::lround(cfg.plan_horizon / cfg.plan_dt)));
  const int n_seg = static_cast<int>(seq.cols());
  const double seg_len = cfg.plan_horizon / n_seg;
  x = x0;
  double energy_term = 0.0, effort_term = 0.0, box_term = 0.0;
  for (int k = 0; k < steps; ++k) {
    int seg = std::min(n_seg - 1, static_cast<int>(k * cfg.plan_dt / seg_len));
    stepper.step(x, seq.col(seg), cfg.plan_dt, x);
    if (!x.allFinite()) return 1e30;
    energy_term += std::max(delta_h(model, target, x), 0.0) * cfg.plan_dt;
    effort_term += seq.col(seg).squaredNorm() * cfg.plan_dt;
    for (int j = 0; j < model.state_dim; ++j) {
      double over = std::max(model.state_lo[j] - x[j], x[j] - model.state_hi[j]);
      if (over > 0) box_term += over * over;
    }
  }
  double terminal = (x - target.center).squaredNorm();
  return cfg.w_terminal * terminal + cfg.w_energy * energy_term +
         cfg.w_effort * effort_term + 1e6 * box_term;
}

}  // namespace

Eigen::VectorXd plan_step(const SystemModel& model, const TargetSpec& target,
                          const Eigen::VectorXd& x, const ExpertConfig& cfg, Rng& rng) {
  if (cfg.population < 1 || cfg.elites < 1 || cfg.elites > cfg.population ||
      cfg.n_segments < 1 || cfg.iters < 1 || cfg.plan_horizon <= 0 || cfg.plan_dt <= 0)
    throw ConfigError("plan_step: bad planner configuration");

  const int m = model.input_dim;
  const int n_seg = cfg.n_segments;
  const double floor_std = (model.input_hi - model.input_lo).cwiseAbs().maxCoeff() / 40.0;

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m, n_seg);
  Eigen::MatrixXd stddev(m, n_seg);
  for (int j = 0; j < m; ++j)
    stddev.row(j).setConstant(0.25 * (model.input_hi[j] - model.input_lo[j]));

  Stepper stepper(model);
  Eigen::VectorXd xe(model.state_dim);
  std::vector<Eigen::MatrixXd> pop(cfg.population, Eigen::MatrixXd(m, n_seg));
  std::vector<double> cost(cfg.population);
  std::vector<int> order(cfg.population);

  auto clamp_seq = [&](Eigen::MatrixXd& s) {
    for (int j = 0; j < m; ++j)
      s.row(j) = s.row(j).cwiseMax(model.input_lo[j]).cwiseMin(model.input_hi[j]);
  };

  // the answer is the best-scoring elite mean over the iterations, not the
  // last one; the variance floor keeps the search alive, so late means can
  // wander even when an earlier one (often the initial zero) was optimal
  Eigen::MatrixXd best_mean = mean;
  clamp_seq(best_mean);
  double best_cost = score_sequence(model, target, x, best_mean, cfg, stepper, xe);

  for (int it = 0; it < cfg.iters; ++it) {
    pop[0] = mean;  // keep the incumbent in the running
    clamp_seq(pop[0]);
    for (int c = 1; c < cfg.population; ++c) {
      for (int s = 0; s < n_seg; ++s)
        for (int j = 0; j < m; ++j)
          pop[c](j, s) = mean(j, s) + stddev(j, s) * rng.normal();
      clamp_seq(pop[c]);
    }
    for (int c = 0; c < cfg.population; ++c)
      cost[c] = score_sequence(model, target, x, pop[c], cfg, stepper, xe);

    std::iota(order.begin(), order.end(), 0);
    const int n_el = std::min(cfg.elites, cfg.population);
    std::partial_sort(order.begin(), order.begin() + n_el, order.end(),
                      [&](int a, int b) {
                        return cost[a] != cost[b] ? cost[a] < cost[b] : a < b;
                      });

    mean.setZero();
    for (int e = 0; e < n_el; ++e) mean += pop[order[e]];
    mean /= n_el;
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(m, n_seg);
    for (int e = 0; e < n_el; ++e) {
      Eigen::MatrixXd d = pop[order[e]] - mean;
      var += d.cwiseProduct(d);
    }
    var /= n_el;
    stddev = var.cwiseSqrt().cwiseMax(floor_std);

    Eigen::MatrixXd cand = mean;
    clamp_seq(cand);
    const double cand_cost = score_sequence(model, target, x, cand, cfg, stepper, xe);
    if (cand_cost < best_cost) {
      best_cost = cand_cost;
      best_mean = cand;
    }
  }

  return best_mean.col(0);
}

Demonstration generate_demonstration(const SystemModel& model, const TargetSpec& target,
                                     const Eigen::VectorXd& x0, const ExpertConfig& cfg,
                                     Rng& rng, double dt) {
  if (x0.size() != model.state_dim)
    throw ConfigError("generate_demonstration: x0 dimension mismatch");
  if (dt <= 0 || cfg.replan_every < dt || cfg.max_episode <= 0)
    throw ConfigError("generate_demonstration: bad episode configuration");

  Demonstration demo;
  demo.x0 = x0;

  if (target.in_ball(x0)) {
    demo.controls.resize(model.input_dim, 0);
    demo.duration = 0.0;
    demo.trajectory.times = {0.0};
    demo.trajectory.states = x0;
    demo.trajectory.controls.resize(model.input_dim, 0);
    demo.terminal_dh = delta_h(model, target, x0);
    return demo;
  }

  const long max_steps = std::lround(cfg.max_episode / dt);
  const long hold = std::max<long>(1, std::lround(cfg.replan_every / dt));

  std::vector<double> ts{0.0}, xs, us;
  Eigen::VectorXd x = x0;
  for (int j = 0; j < model.state_dim; ++j) xs.push_back(x[j]);

  Stepper stepper(model);
  Eigen::VectorXd u(model.input_dim);
  bool reached = false;
  long step = 0;
  while (step < max_steps) {
    u = plan_step(model, target, x, cfg, rng);
    for (long s = 0; s < hold && step < max_steps; ++s) {
      stepper.step(x, u, dt, x);
      if (!x.allFinite()) throw IntegrationError("generate_demonstration: state diverged");
      ++step;
      ts.push_back(step * dt);
      for (int j = 0; j < model.state_dim; ++j) xs.push_back(x[j]);
      for (int j = 0; j < model.input_dim; ++j) us.push_back(u[j]);
      if (target.in_ball(x)) {
        reached = true;
        break;
      }
    }
    if (reached) break;
  }
  if (!reached) throw ExpertFailure("generate_demonstration: episode cap reached");

  const int K = static_cast<int>(ts.size()) - 1;
  demo.trajectory.times = ts;
  demo.trajectory.states = Eigen::Map<Eigen::MatrixXd>(xs.data(), model.state_dim, K + 1);
  demo.trajectory.controls = Eigen::Map<Eigen::MatrixXd>(us.data(), model.input_dim, K);
  demo.controls = demo.trajectory.controls;
  demo.duration = K * dt;
  demo.terminal_dh = delta_h(model, target, x);
  return demo;
}

}  // namespace hamchain
