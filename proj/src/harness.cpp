#include "hamchain/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "hamchain/errors.hpp"
#include "hamchain/json_io.hpp"

namespace fs = std::filesystem;

namespace hamchain {

namespace {

constexpr uint64_t kTagTest = 0x7e57a7e5ull;
constexpr uint64_t kTagProbe = 0x960be11ull;
constexpr uint64_t kTagCandidate = 0xca4d1da7ull;
constexpr uint64_t kTagExpert = 0xe8be27ull;
constexpr uint64_t kTagBc = 0xbc7ea14ull;

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_f3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

double steady_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace

SystemModel ExperimentConfig::make_model() const {
  if (system_id == "spring_mass")
    return builtin_spring_mass(mass, stiffness, u_abs, box_lo, box_hi);
  if (system_id == "pendulum")
    return builtin_pendulum(mass, length, gravity, u_abs, box_lo, box_hi);
  throw ConfigError("unknown system '" + system_id + "' (use spring_mass or pendulum)");
}

TargetSpec ExperimentConfig::make_target_spec(const SystemModel& model) const {
  for (int i = 0; i < model.state_dim; ++i) {
    if (target_center[i] - target_radius < model.state_lo[i] ||
        target_center[i] + target_radius > model.state_hi[i])
      throw ConfigError("target ball leaves the state box");
  }
  if (eps_margin > 0.0) return make_target(model, target_center, target_radius, eps_margin);
  return make_target_frac(model, target_center, target_radius, 0.5);
}

ExperimentConfig default_config(const std::string& system_id) {
  ExperimentConfig cfg;
  cfg.system_id = system_id;
  // a 1 s lookahead with a strong energy weight makes the planner drain (or
  // pump) energy monotonically instead of loitering on the terminal term; the
  // 2 s default horizon with w_energy 1 never discovers the pendulum swing-up
  cfg.expert.plan_horizon = 1.0;
  cfg.expert.w_energy = 50.0;
  if (system_id == "spring_mass") {
    cfg.box_lo = Eigen::Vector2d(-5, -5);
    cfg.box_hi = Eigen::Vector2d(5, 5);
    cfg.target_center = Eigen::Vector2d(0, 0);
    cfg.h_bar = 0.5;
    cfg.horizon = 20.0;
    // coast hold = dt: off-support drift re-selects every sample, so a small
    // ball cannot be crossed between checks
    cfg.fallback_tau = 1e-3;
    cfg.expert.max_episode = 20.0;
  } else if (system_id == "pendulum") {
    // box trimmed to the two interior wells; the generous default box puts
    // half-wells on the q edges whose orbits leave the box no matter what the
    // policy does, which only measures the box, not the policy
    cfg.box_lo = Eigen::Vector2d(-1.25 * M_PI, -30);
    cfg.box_hi = Eigen::Vector2d(3.25 * M_PI, 30);
    cfg.target_center = Eigen::Vector2d(M_PI, 0);
    cfg.h_bar = 30.0;
    cfg.horizon = 150.0;
    cfg.fallback_tau = 1e-3;
    cfg.expert.max_episode = 40.0;
  } else {
    throw ConfigError("unknown system '" + system_id + "' (use spring_mass or pendulum)");
  }
  return cfg;
}

ExperimentConfig config_from_toml(const toml_lite::Document& doc) {
  ExperimentConfig cfg = default_config(doc.get_string("system", "id", "spring_mass"));

  cfg.mass = doc.get_double("system", "mass", cfg.mass);
  cfg.stiffness = doc.get_double("system", "stiffness", cfg.stiffness);
  cfg.length = doc.get_double("system", "length", cfg.length);
  cfg.gravity = doc.get_double("system", "gravity", cfg.gravity);
  cfg.u_abs = doc.get_double("system", "u_abs", cfg.u_abs);
  auto lo = doc.get_double_array("system", "box_lo", {cfg.box_lo[0], cfg.box_lo[1]});
  auto hi = doc.get_double_array("system", "box_hi", {cfg.box_hi[0], cfg.box_hi[1]});
  if (lo.size() != 2 || hi.size() != 2)
    throw ConfigError("system.box_lo/box_hi must have two entries");
  cfg.box_lo = Eigen::Vector2d(lo[0], lo[1]);
  cfg.box_hi = Eigen::Vector2d(hi[0], hi[1]);

  auto center = doc.get_double_array("target", "center",
                                     {cfg.target_center[0], cfg.target_center[1]});
  if (center.size() != 2) throw ConfigError("target.center must have two entries");
  cfg.target_center = Eigen::Vector2d(center[0], center[1]);
  cfg.target_radius = doc.get_double("target", "radius", cfg.target_radius);
  cfg.eps_margin = doc.get_double("target", "eps_margin", cfg.eps_margin);

  cfg.h_bar = doc.get_double("experiment", "h_bar", cfg.h_bar);
  cfg.n_test = static_cast<int>(doc.get_int("experiment", "n_test", cfg.n_test));
  auto sweep = doc.get_int_array("experiment", "m_sweep", {});
  if (!sweep.empty()) {
    cfg.m_sweep.clear();
    for (int64_t m : sweep) cfg.m_sweep.push_back(static_cast<int>(m));
  }
  cfg.horizon = doc.get_double("experiment", "horizon", cfg.horizon);
  cfg.dt = doc.get_double("experiment", "dt", cfg.dt);
  cfg.output_dir = doc.get_string("experiment", "output_dir", cfg.output_dir);

  cfg.seeds.sampling = static_cast<uint64_t>(
      doc.get_int("seeds", "sampling", static_cast<int64_t>(cfg.seeds.sampling)));
  cfg.seeds.expert = static_cast<uint64_t>(
      doc.get_int("seeds", "expert", static_cast<int64_t>(cfg.seeds.expert)));
  cfg.seeds.bc =
      static_cast<uint64_t>(doc.get_int("seeds", "bc", static_cast<int64_t>(cfg.seeds.bc)));

  cfg.expert.plan_horizon = doc.get_double("expert", "plan_horizon", cfg.expert.plan_horizon);
  cfg.expert.n_segments =
      static_cast<int>(doc.get_int("expert", "n_segments", cfg.expert.n_segments));
  cfg.expert.population =
      static_cast<int>(doc.get_int("expert", "population", cfg.expert.population));
  cfg.expert.elites = static_cast<int>(doc.get_int("expert", "elites", cfg.expert.elites));
  cfg.expert.iters = static_cast<int>(doc.get_int("expert", "iters", cfg.expert.iters));
  cfg.expert.replan_every = doc.get_double("expert", "replan_every", cfg.expert.replan_every);
  cfg.expert.w_terminal = doc.get_double("expert", "w_terminal", cfg.expert.w_terminal);
  cfg.expert.w_energy = doc.get_double("expert", "w_energy", cfg.expert.w_energy);
  cfg.expert.w_effort = doc.get_double("expert", "w_effort", cfg.expert.w_effort);
  cfg.expert.max_episode = doc.get_double("expert", "max_episode", cfg.expert.max_episode);
  cfg.expert.plan_dt = doc.get_double("expert", "plan_dt", cfg.expert.plan_dt);

  cfg.build_v0 = doc.get_double("build", "v0", cfg.build_v0);
  cfg.fallback_tau = doc.get_double("build", "fallback_tau", cfg.fallback_tau);
  cfg.duration_cap = doc.get_double("build", "duration_cap", cfg.duration_cap);
  cfg.duration_step =
      static_cast<int>(doc.get_int("build", "duration_step", cfg.duration_step));

  cfg.demo_dh_frac = doc.get_double("demo", "dh_frac", cfg.demo_dh_frac);
  cfg.demo_spread_candidates =
      static_cast<int>(doc.get_int("demo", "spread_candidates", cfg.demo_spread_candidates));
  cfg.demo_retry_budget =
      static_cast<int>(doc.get_int("demo", "retry_budget", cfg.demo_retry_budget));
  cfg.n_probe = static_cast<int>(doc.get_int("demo", "n_probe", cfg.n_probe));

  cfg.bc_train.lr = doc.get_double("bc", "lr", cfg.bc_train.lr);
  cfg.bc_train.weight_decay = doc.get_double("bc", "weight_decay", cfg.bc_train.weight_decay);
  cfg.bc_train.epochs = static_cast<int>(doc.get_int("bc", "epochs", cfg.bc_train.epochs));
  cfg.bc_train.batch = static_cast<int>(doc.get_int("bc", "batch", cfg.bc_train.batch));

  if (cfg.n_test <= 0) throw ConfigError("experiment.n_test must be positive");
  if (!(cfg.horizon > 0.0)) throw ConfigError("experiment.horizon must be positive");
  if (!(cfg.dt > 0.0)) throw ConfigError("experiment.dt must be positive");
  if (cfg.m_sweep.empty()) throw ConfigError("experiment.m_sweep must be nonempty");
  for (size_t i = 0; i < cfg.m_sweep.size(); ++i) {
    if (cfg.m_sweep[i] <= 0) throw ConfigError("experiment.m_sweep entries must be positive");
    if (i > 0 && cfg.m_sweep[i] <= cfg.m_sweep[i - 1])
      throw ConfigError("experiment.m_sweep must be strictly increasing");
  }
  if (!(cfg.demo_dh_frac > 0.0) || cfg.demo_dh_frac > 1.0)
    throw ConfigError("demo.dh_frac must be in (0, 1]");
  if (cfg.demo_spread_candidates <= 0) throw ConfigError("demo.spread_candidates must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_toml(toml_lite::parse_file(path));
}

std::string config_to_toml(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "[system]\n";
  o << "id = \"" << c.system_id << "\"\n";
  o << "mass = " << fmt_g17(c.mass) << "\n";
  if (c.system_id == "spring_mass") o << "stiffness = " << fmt_g17(c.stiffness) << "\n";
  if (c.system_id == "pendulum") {
    o << "length = " << fmt_g17(c.length) << "\n";
    o << "gravity = " << fmt_g17(c.gravity) << "\n";
  }
  o << "u_abs = " << fmt_g17(c.u_abs) << "\n";
  o << "box_lo = [" << fmt_g17(c.box_lo[0]) << ", " << fmt_g17(c.box_lo[1]) << "]\n";
  o << "box_hi = [" << fmt_g17(c.box_hi[0]) << ", " << fmt_g17(c.box_hi[1]) << "]\n";
  o << "\n[target]\n";
  o << "center = [" << fmt_g17(c.target_center[0]) << ", " << fmt_g17(c.target_center[1])
    << "]\n";
  o << "radius = " << fmt_g17(c.target_radius) << "\n";
  o << "eps_margin = " << fmt_g17(c.eps_margin) << "\n";
  o << "\n[experiment]\n";
  o << "h_bar = " << fmt_g17(c.h_bar) << "\n";
  o << "n_test = " << c.n_test << "\n";
  o << "m_sweep = [";
  for (size_t i = 0; i < c.m_sweep.size(); ++i) o << (i ? ", " : "") << c.m_sweep[i];
  o << "]\n";
  o << "horizon = " << fmt_g17(c.horizon) << "\n";
  o << "dt = " << fmt_g17(c.dt) << "\n";
  o << "output_dir = \"" << c.output_dir << "\"\n";
  o << "\n[seeds]\n";
  o << "sampling = " << c.seeds.sampling << "\n";
  o << "expert = " << c.seeds.expert << "\n";
  o << "bc = " << c.seeds.bc << "\n";
  o << "\n[expert]\n";
  o << "plan_horizon = " << fmt_g17(c.expert.plan_horizon) << "\n";
  o << "n_segments = " << c.expert.n_segments << "\n";
  o << "population = " << c.expert.population << "\n";
  o << "elites = " << c.expert.elites << "\n";
  o << "iters = " << c.expert.iters << "\n";
  o << "replan_every = " << fmt_g17(c.expert.replan_every) << "\n";
  o << "w_terminal = " << fmt_g17(c.expert.w_terminal) << "\n";
  o << "w_energy = " << fmt_g17(c.expert.w_energy) << "\n";
  o << "w_effort = " << fmt_g17(c.expert.w_effort) << "\n";
  o << "max_episode = " << fmt_g17(c.expert.max_episode) << "\n";
  o << "plan_dt = " << fmt_g17(c.expert.plan_dt) << "\n";
  o << "\n[build]\n";
  o << "v0 = " << fmt_g17(c.build_v0) << "\n";
  o << "fallback_tau = " << fmt_g17(c.fallback_tau) << "\n";
  o << "duration_cap = " << fmt_g17(c.duration_cap) << "\n";
  o << "duration_step = " << c.duration_step << "\n";
  o << "\n[demo]\n";
  o << "dh_frac = " << fmt_g17(c.demo_dh_frac) << "\n";
  o << "spread_candidates = " << c.demo_spread_candidates << "\n";
  o << "retry_budget = " << c.demo_retry_budget << "\n";
  o << "n_probe = " << c.n_probe << "\n";
  o << "\n[bc]\n";
  o << "lr = " << fmt_g17(c.bc_train.lr) << "\n";
  o << "weight_decay = " << fmt_g17(c.bc_train.weight_decay) << "\n";
  o << "epochs = " << c.bc_train.epochs << "\n";
  o << "batch = " << c.bc_train.batch << "\n";
  return o.str();
}

std::vector<Eigen::VectorXd> sample_initial_states(const SystemModel& model, double h_bar,
                                                   int count, Rng& rng) {
  if (count < 0) throw ConfigError("sample_initial_states: negative count");
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  Eigen::VectorXd x(model.state_dim);
  long long draws = 0, accepted = 0;
  while (static_cast<int>(out.size()) < count) {
    for (int i = 0; i < model.state_dim; ++i)
      x[i] = rng.uniform(model.state_lo[i], model.state_hi[i]);
    ++draws;
    if (model.hamiltonian(x) <= h_bar) {
      ++accepted;
      out.push_back(x);
    }
    if (draws % 10000000 == 0 && accepted < draws / 10000)
      throw ConfigError("sample_initial_states: acceptance rate below 1e-4; "
                        "the energy cap is too small for this box");
  }
  return out;
}

DemoStartSelection select_demo_starts(const SystemModel& model, const TargetSpec& target,
                                      const ExperimentConfig& cfg, int count) {
  DemoStartSelection sel;
  if (count <= 0) return sel;

  Rng probe_rng(seed_stream(cfg.seeds.sampling, kTagProbe));
  auto probes = sample_initial_states(model, cfg.h_bar, cfg.n_probe, probe_rng);
  double c = -std::numeric_limits<double>::infinity();
  for (const auto& x : probes) c = std::max(c, delta_h(model, target, x));
  sel.c_probe = c;
  if (!(c > 0.0))
    throw ConfigError("select_demo_starts: the start set sits inside the target band");
  sel.dh_threshold = cfg.demo_dh_frac * c;

  Rng cand_rng(seed_stream(cfg.seeds.sampling, kTagCandidate));
  Eigen::VectorXd x(model.state_dim);
  for (int k = 0; k < count; ++k) {
    // a fresh candidate pool per start, filtered to the top of the dh range
    std::vector<Eigen::VectorXd> pool;
    long long draws = 0;
    while (static_cast<int>(pool.size()) < cfg.demo_spread_candidates) {
      if (++draws > 5000000) {
        if (!pool.empty()) break;
        throw ConfigError("select_demo_starts: could not find high-band-distance starts");
      }
      for (int i = 0; i < model.state_dim; ++i)
        x[i] = cand_rng.uniform(model.state_lo[i], model.state_hi[i]);
      if (model.hamiltonian(x) > cfg.h_bar) continue;
      if (delta_h(model, target, x) < sel.dh_threshold) continue;
      pool.push_back(x);
    }
    // farthest-point pick keeps starts spread across the candidate region
    int best = 0;
    if (!sel.starts.empty()) {
      double best_d = -1.0;
      for (size_t ci = 0; ci < pool.size(); ++ci) {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& s : sel.starts) d = std::min(d, (pool[ci] - s).norm());
        if (d > best_d) {
          best_d = d;
          best = static_cast<int>(ci);
        }
      }
    }
    sel.starts.push_back(pool[best]);
  }
  return sel;
}

std::string render_results_csv(const std::vector<ResultRecord>& rows) {
  std::ostringstream o;
  o << "policy,m,success_rate,avg_reach_time,n_triples,wall_time\n";
  for (const auto& r : rows) {
    o << r.policy << ',' << r.m << ',' << fmt_g17(r.success_rate) << ','
      << fmt_g17(r.avg_reach_time) << ',' << r.n_triples << ',' << fmt_f3(r.wall_time)
      << '\n';
  }
  return o.str();
}

std::string render_detail_csv(const std::vector<DetailRecord>& rows, int state_dim) {
  std::ostringstream o;
  o << "policy,m,test_idx";
  for (int i = 0; i < state_dim; ++i) o << ",x0_" << i;
  o << ",reached,reach_time\n";
  for (const auto& r : rows) {
    o << r.policy << ',' << r.m << ',' << r.test_idx;
    for (int i = 0; i < state_dim; ++i) o << ',' << fmt_g17(r.x0[i]);
    o << ',' << (r.reached ? 1 : 0) << ',' << fmt_g17(r.reach_time) << '\n';
  }
  return o.str();
}

namespace {

struct EvalOutcome {
  std::vector<DetailRecord> details;
  double success_rate = 0.0;
  double avg_reach_time = 0.0;
};

// Deterministic regardless of scheduling: slot i always holds test state i.
template <typename RolloutFn>
EvalOutcome evaluate_policy(const std::string& policy, int m,
                            const std::vector<Eigen::VectorXd>& tests,
                            const RolloutFn& run_one) {
  const int n = static_cast<int>(tests.size());
  std::vector<RolloutRecord> recs(n);
  unsigned hw = std::thread::hardware_concurrency();
  int workers = static_cast<int>(std::min<unsigned>(hw == 0 ? 1 : hw, 8));
  workers = std::min(workers, n == 0 ? 1 : n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) recs[i] = run_one(tests[i]);
  } else {
    std::atomic<int> next{0};
    auto body = [&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        recs[i] = run_one(tests[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }

  EvalOutcome out;
  long reached = 0;
  double sum_reach = 0.0;
  for (int i = 0; i < n; ++i) {
    DetailRecord d;
    d.policy = policy;
    d.m = m;
    d.test_idx = i;
    d.x0 = tests[i];
    d.reached = recs[i].reached;
    d.reach_time = recs[i].reach_time;
    out.details.push_back(std::move(d));
    if (recs[i].reached) ++reached;
    sum_reach += recs[i].reach_time;
  }
  out.success_rate = n == 0 ? 0.0 : static_cast<double>(reached) / n;
  out.avg_reach_time = n == 0 ? 0.0 : sum_reach / n;
  return out;
}

}  // namespace

std::vector<Demonstration> generate_demonstrations(const ExperimentConfig& cfg,
                                                   const SystemModel& model,
                                                   const TargetSpec& target, int count) {
  const int max_m =
      count > 0 ? count : *std::max_element(cfg.m_sweep.begin(), cfg.m_sweep.end());
  const auto sel = select_demo_starts(model, target, cfg, max_m + cfg.demo_retry_budget);

  std::vector<Demonstration> demos;
  int cursor = 0, failures = 0;
  while (static_cast<int>(demos.size()) < max_m) {
    if (cursor >= static_cast<int>(sel.starts.size()))
      throw ExpertFailure("demonstration generation ran out of retry starts");
    Rng erng(seed_stream(cfg.seeds.expert, kTagExpert, static_cast<uint64_t>(cursor)));
    try {
      demos.push_back(
          generate_demonstration(model, target, sel.starts[cursor], cfg.expert, erng, cfg.dt));
    } catch (const ExpertFailure&) {
      if (++failures > cfg.demo_retry_budget)
        throw ExpertFailure("expert failed more often than the retry budget allows");
    }
    ++cursor;
  }
  return demos;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const SystemModel model = cfg.make_model();
  const TargetSpec target = cfg.make_target_spec(model);
  fs::create_directories(cfg.output_dir);
  write_text_file((fs::path(cfg.output_dir) / "config_resolved.toml").string(),
                  config_to_toml(cfg));

  Rng test_rng(seed_stream(cfg.seeds.sampling, kTagTest));
  const auto tests = sample_initial_states(model, cfg.h_bar, cfg.n_test, test_rng);

  const std::vector<Demonstration> demos = generate_demonstrations(cfg, model, target);
  const int max_m = static_cast<int>(demos.size());

  ExperimentResult out;
  out.demos_path = (fs::path(cfg.output_dir) / "demos.json").string();
  save_demonstrations(demos, model.id, cfg.dt, out.demos_path);
  out.demo_sha256 = sha256_hex(read_text_file(out.demos_path));

  // Both consumers reload the same file; the digest above is what they saw.
  const auto chain_demos = load_demonstrations(model, out.demos_path, &target);
  const auto bc_demos = load_demonstrations(model, out.demos_path, &target);

  RolloutConfig rc;
  rc.horizon = cfg.horizon;
  rc.dt = cfg.dt;

  std::vector<ResultRecord> chain_rows, bc_rows;
  std::vector<DetailRecord> chain_details, bc_details;

  for (int m : cfg.m_sweep) {
    if (m > max_m) throw ConfigError("m_sweep entry exceeds the demo count");

    {  // chain policy
      const double t0 = steady_seconds();
      std::vector<Trajectory> trajs;
      for (int i = 0; i < m; ++i) trajs.push_back(chain_demos[i].trajectory);
      BuildConfig bcfg;
      bcfg.dt = cfg.dt;
      bcfg.duration_step = cfg.duration_step;
      bcfg.duration_cap = cfg.duration_cap;
      bcfg.fallback_tau = cfg.fallback_tau;
      bcfg.v0 = cfg.build_v0 > 0.0 ? cfg.build_v0 : default_v0(model, target, trajs);
      const AssignmentSet set = build_assignment_set(model, target, trajs, bcfg);
      const SelectIndexAccel accel(set);
      auto eval = evaluate_policy("chain", m, tests, [&](const Eigen::VectorXd& x0) {
        return rollout_chain(model, target, set, x0, rc, &accel);
      });
      ResultRecord r;
      r.policy = "chain";
      r.m = m;
      r.success_rate = eval.success_rate;
      r.avg_reach_time = eval.avg_reach_time;
      r.n_triples = static_cast<long>(set.triples.size());
      r.wall_time = steady_seconds() - t0;
      chain_rows.push_back(r);
      chain_details.insert(chain_details.end(), eval.details.begin(), eval.details.end());
    }

    {  // behavior cloning
      const double t0 = steady_seconds();
      std::vector<Trajectory> trajs;
      for (int i = 0; i < m; ++i) trajs.push_back(bc_demos[i].trajectory);
      TrainConfig tc = cfg.bc_train;
      tc.seed = seed_stream(cfg.seeds.bc, kTagBc, static_cast<uint64_t>(m));
      const MlpParams params = train_bc(model, trajs, tc);
      auto eval = evaluate_policy("bc", m, tests, [&](const Eigen::VectorXd& x0) {
        return rollout_bc(model, target, params, x0, rc);
      });
      ResultRecord r;
      r.policy = "bc";
      r.m = m;
      r.success_rate = eval.success_rate;
      r.avg_reach_time = eval.avg_reach_time;
      r.n_triples = 0;
      r.wall_time = steady_seconds() - t0;
      bc_rows.push_back(r);
      bc_details.insert(bc_details.end(), eval.details.begin(), eval.details.end());
    }
  }

  out.results.insert(out.results.end(), chain_rows.begin(), chain_rows.end());
  out.results.insert(out.results.end(), bc_rows.begin(), bc_rows.end());
  out.details.insert(out.details.end(), chain_details.begin(), chain_details.end());
  out.details.insert(out.details.end(), bc_details.begin(), bc_details.end());

  out.results_csv_path = (fs::path(cfg.output_dir) / "results.csv").string();
  out.detail_csv_path = (fs::path(cfg.output_dir) / "detail.csv").string();
  write_text_file(out.results_csv_path, render_results_csv(out.results));
  write_text_file(out.detail_csv_path, render_detail_csv(out.details, model.state_dim));
  write_text_file((fs::path(cfg.output_dir) / "plot.py").string(), plot_script_text());

  std::ostringstream manifest;
  manifest << "{\n  \"system\": \"" << model.id << "\",\n  \"demo_sha256\": \""
           << out.demo_sha256 << "\",\n  \"n_demos\": " << demos.size()
           << ",\n  \"n_test\": " << cfg.n_test << "\n}\n";
  write_text_file((fs::path(cfg.output_dir) / "manifest.json").string(), manifest.str());
  return out;
}

std::string plot_script_text() {
  return R"PY(#!/usr/bin/env python3
"""Render success-rate and reach-time curves from results.csv."""
import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "results.csv")

series = {}
with open(path) as f:
    for row in csv.DictReader(f):
        s = series.setdefault(row["policy"], {"m": [], "sr": [], "rt": []})
        s["m"].append(int(row["m"]))
        s["sr"].append(float(row["success_rate"]))
        s["rt"].append(float(row["avg_reach_time"]))

for key, fname, label in [("sr", "success_rate.png", "success rate"),
                          ("rt", "reach_time.png", "avg reach time [s]")]:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for policy, s in sorted(series.items()):
        ax.plot(s["m"], s[key], marker="o", label=policy)
    ax.set_xlabel("number of demonstrations M")
    ax.set_ylabel(label)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(os.path.join(os.path.dirname(path), fname), dpi=150)
    print("wrote", fname)
)PY";
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw ConfigError("sha256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

}  // namespace hamchain
