#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hamchain/bounds.hpp"
#include "hamchain/errors.hpp"
#include "hamchain/harness.hpp"
#include "hamchain/json_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hamchain;

namespace {

struct CommonOpts {
  std::string config;
  std::optional<uint64_t> seed;
  std::string out;
};

ExperimentConfig resolve_config(const CommonOpts& c, const std::string& fallback_system) {
  ExperimentConfig cfg = c.config.empty() ? default_config(fallback_system)
                                          : load_config(c.config);
  if (c.seed) {
    cfg.seeds.sampling = *c.seed;
    cfg.seeds.expert = *c.seed + 1;
    cfg.seeds.bc = *c.seed + 2;
  }
  if (!c.out.empty()) cfg.output_dir = c.out;
  return cfg;
}

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config, "TOML experiment config");
  sub->add_option("--seed", c.seed, "override all seed groups from this base seed");
  sub->add_option("--out", c.out, "output directory or file");
}

json condition1_json(const Condition1Report& r) {
  return json{{"holds", r.holds},
              {"violations", r.violations},
              {"worst_margin", r.worst_margin},
              {"worst_index", r.worst_index}};
}

json condition2_json(const Condition2Report& r) {
  json scanned = json::array(), gaps = json::array();
  for (auto& [a, b] : r.scanned) scanned.push_back(json::array({a, b}));
  for (auto& [a, b] : r.gaps) gaps.push_back(json::array({a, b}));
  return json{{"holds", r.holds}, {"c", r.c}, {"scanned", scanned}, {"gaps", gaps}};
}

int cmd_demo_gen(const CommonOpts& c, const std::string& system, int count) {
  ExperimentConfig cfg = resolve_config(c, system);
  const SystemModel model = cfg.make_model();
  const TargetSpec target = cfg.make_target_spec(model);
  const auto demos = generate_demonstrations(cfg, model, target, count);
  fs::create_directories(cfg.output_dir);
  const std::string path = (fs::path(cfg.output_dir) / "demos.json").string();
  save_demonstrations(demos, model.id, cfg.dt, path);
  json info = json::array();
  for (const auto& d : demos)
    info.push_back(json{{"duration", d.duration}, {"terminal_dh", d.terminal_dh}});
  std::cout << json{{"demos", info}, {"path", path},
                    {"sha256", sha256_hex(read_text_file(path))}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_build(const CommonOpts& c, const std::string& system, const std::string& demos_path) {
  ExperimentConfig cfg = resolve_config(c, system);
  const SystemModel model = cfg.make_model();
  const TargetSpec target = cfg.make_target_spec(model);
  const auto demos = load_demonstrations(model, demos_path, &target);
  std::vector<Trajectory> trajs;
  for (const auto& d : demos) trajs.push_back(d.trajectory);

  BuildConfig bcfg;
  bcfg.dt = cfg.dt;
  bcfg.duration_step = cfg.duration_step;
  bcfg.duration_cap = cfg.duration_cap;
  bcfg.fallback_tau = cfg.fallback_tau;
  bcfg.v0 = cfg.build_v0 > 0.0 ? cfg.build_v0 : default_v0(model, target, trajs);

  BuildDiagnostics diag;
  const AssignmentSet set = build_assignment_set(model, target, trajs, bcfg, &diag);
  fs::create_directories(cfg.output_dir);
  const std::string path = (fs::path(cfg.output_dir) / "assignment_set.json").string();
  save_assignment_set(set, path);
  std::cout << json{{"path", path},
                    {"v0", set.v0},
                    {"n_triples", set.triples.size()},
                    {"demos_seen", diag.demos_seen},
                    {"demos_empty", diag.demos_empty},
                    {"mean_radius", diag.mean_radius},
                    {"min_radius", diag.min_radius},
                    {"max_radius", diag.max_radius},
                    {"mean_advance", diag.mean_advance},
                    {"max_duration", diag.max_duration}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_check(const CommonOpts& c, const std::string& system, const std::string& set_path,
              int contract_samples) {
  ExperimentConfig cfg = resolve_config(c, system);
  const SystemModel model = cfg.make_model();
  const TargetSpec target = cfg.make_target_spec(model);
  const AssignmentSet set = load_assignment_set(set_path);
  if (set.system_id != model.id)
    throw ConfigError("assignment set was built for '" + set.system_id + "'");

  const auto c1 = check_condition1(model, target, set, set.v0);
  Rng s0_rng(seed_stream(cfg.seeds.sampling, 0xc2c2ull));
  const auto s0 = sample_initial_states(model, cfg.h_bar, cfg.n_probe, s0_rng);
  const auto c2 = check_condition2(model, target, set, s0);
  const auto bc = ball_decrease_contract(model, target, set, contract_samples,
                                         cfg.seeds.sampling);

  std::cout << json{{"condition1", condition1_json(c1)},
                    {"condition2", condition2_json(c2)},
                    {"ball_contract",
                     {{"checked", bc.checked},
                      {"violations", bc.violations},
                      {"worst_excess", bc.worst_excess},
                      {"worst_triple", bc.worst_triple}}}}
                   .dump(2)
            << "\n";
  const bool ok = c1.holds && c2.holds && bc.violations == 0;
  return ok ? 0 : 4;
}

int cmd_bounds(const CommonOpts& c, const std::string& system) {
  ExperimentConfig cfg = resolve_config(c, system);
  const SystemModel model = cfg.make_model();
  const TargetSpec target = cfg.make_target_spec(model);
  const toml_lite::Document doc =
      c.config.empty() ? toml_lite::Document{} : toml_lite::parse_file(c.config);

  BoundInputs in;
  in.l_h = doc.get_double("bounds", "l_h", model.lipschitz_h);
  in.c_f = doc.get_double("bounds", "c_f", model.bound_f);
  in.lip_l = doc.get_double("bounds", "lip_l", model.lipschitz_f);
  if (doc.has("bounds", "mu_h"))
    in.mu_h = doc.get_double("bounds", "mu_h", 0.0);
  else if (model.hessian_min)
    in.mu_h = *model.hessian_min;
  in.d_x = doc.get_double("bounds", "d_x", model.diameter());
  in.eps = doc.get_double("bounds", "eps", target.eps_margin);
  in.v0 = doc.get_double("bounds", "v0", 1e-4);
  in.v_lower = doc.get_double("bounds", "v_lower", 0.0);
  in.h1 = doc.get_double("bounds", "h1", target.h_min);
  in.h2 = doc.get_double("bounds", "h2", cfg.h_bar);
  in.t1 = doc.get_double("bounds", "t1", 0.0);
  in.t2 = doc.get_double("bounds", "t2", 0.0);
  in.tau_min = doc.get_double("bounds", "tau_min", cfg.fallback_tau);

  json out;
  const auto [v_max, t_min] = lemma1_bounds(in.l_h, in.c_f, in.eps);
  out["lemma1"] = {{"max_decrease_rate", v_max}, {"min_hitting_time", t_min}};

  if (in.v_lower > in.v0) {
    const double t_star = doc.get_double("bounds", "t_star", 1.0);
    out["theorem2_radius"] =
        theorem2_radius(in.v_lower, in.v0, t_star, in.l_h, in.lip_l);
    try {
      out["sample_complexity"] = sample_complexity(in);
    } catch (const MissingConstant& e) {
      out["sample_complexity_refused"] = e.what();
    }
  } else {
    out["note_v_lower"] =
        "no v_lower > v0 supplied; theorem2/sample-complexity bounds skipped "
        "(estimate one with estimate_v_lower or set [bounds] v_lower)";
  }
  if (in.t1 > 0.0 && in.v0 > 0.0)
    out["finite_time_bound"] = finite_time_bound(in);

  std::cout << out.dump(2) << "\n";
  std::cout << "max decrease rate " << v_max << " over min hitting time " << t_min << "\n";
  return 0;
}

int cmd_eval(const CommonOpts& c, const std::string& system, const std::string& set_path,
             const std::string& params_path, int n_override) {
  ExperimentConfig cfg = resolve_config(c, system);
  if (n_override > 0) cfg.n_test = n_override;
  const SystemModel model = cfg.make_model();
  const TargetSpec target = cfg.make_target_spec(model);
  Rng rng(seed_stream(cfg.seeds.sampling, 0x7e57a7e5ull));
  const auto tests = sample_initial_states(model, cfg.h_bar, cfg.n_test, rng);

  RolloutConfig rc;
  rc.horizon = cfg.horizon;
  rc.dt = cfg.dt;

  int reached = 0;
  double sum_reach = 0.0;
  if (!set_path.empty()) {
    const AssignmentSet set = load_assignment_set(set_path);
    const SelectIndexAccel accel(set);
    for (const auto& x0 : tests) {
      const auto r = rollout_chain(model, target, set, x0, rc, &accel);
      reached += r.reached ? 1 : 0;
      sum_reach += r.reach_time;
    }
  } else if (!params_path.empty()) {
    const MlpParams params = load_mlp(params_path);
    for (const auto& x0 : tests) {
      const auto r = rollout_bc(model, target, params, x0, rc);
      reached += r.reached ? 1 : 0;
      sum_reach += r.reach_time;
    }
  } else {
    throw ConfigError("eval: pass --set or --params");
  }
  std::cout << json{{"n_test", tests.size()},
                    {"success_rate", static_cast<double>(reached) / tests.size()},
                    {"avg_reach_time", sum_reach / tests.size()}}
                   .dump(2)
            << "\n";
  return 0;
}

int cmd_experiment(const CommonOpts& c, const std::string& system) {
  ExperimentConfig cfg = resolve_config(c, system);
  const auto res = run_experiment(cfg);
  std::cout << render_results_csv(res.results);
  std::cout << "results: " << res.results_csv_path << "\n";
  std::cout << "demo sha256: " << res.demo_sha256 << "\n";
  return 0;
}

int cmd_plot(const std::string& dir) {
  const std::string path = (fs::path(dir) / "plot.py").string();
  write_text_file(path, plot_script_text());
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chain policies for lossless Hamiltonian systems"};
  app.require_subcommand(1);

  CommonOpts c_demo, c_build, c_check, c_bounds, c_eval, c_exp;
  std::string sys_demo = "spring_mass", sys_build = "spring_mass", sys_check = "spring_mass",
              sys_bounds = "spring_mass", sys_eval = "spring_mass", sys_exp = "spring_mass";
  int demo_count = 0;
  std::string build_demos, check_set, eval_set, eval_params, plot_dir = ".";
  int contract_samples = 20, eval_n = 0;

  auto* demo = app.add_subcommand("demo-gen", "generate expert demonstrations");
  add_common(demo, c_demo);
  demo->add_option("--system", sys_demo, "spring_mass or pendulum (when no config)");
  demo->add_option("--count", demo_count, "number of demonstrations (default max m_sweep)");

  auto* build = app.add_subcommand("build", "build an assignment set from demonstrations");
  add_common(build, c_build);
  build->add_option("--system", sys_build);
  build->add_option("--demos", build_demos, "demos.json path")->required();

  auto* check = app.add_subcommand("check", "audit decrease and coverage conditions");
  add_common(check, c_check);
  check->add_option("--system", sys_check);
  check->add_option("--set", check_set, "assignment_set.json path")->required();
  check->add_option("--contract-samples", contract_samples, "ball samples per triple");

  auto* bounds = app.add_subcommand("bounds", "report the closed-form bounds");
  add_common(bounds, c_bounds);
  bounds->add_option("--system", sys_bounds);

  auto* eval = app.add_subcommand("eval", "evaluate a policy on sampled starts");
  add_common(eval, c_eval);
  eval->add_option("--system", sys_eval);
  eval->add_option("--set", eval_set, "assignment set (chain policy)");
  eval->add_option("--params", eval_params, "network parameters (bc policy)");
  eval->add_option("--n", eval_n, "number of test states");

  auto* exp = app.add_subcommand("experiment", "run the full demo sweep experiment");
  add_common(exp, c_exp);
  exp->add_option("--system", sys_exp);

  auto* plot = app.add_subcommand("plot", "write the plot script next to results.csv");
  plot->add_option("--dir", plot_dir, "directory containing results.csv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (demo->parsed()) return cmd_demo_gen(c_demo, sys_demo, demo_count);
    if (build->parsed()) return cmd_build(c_build, sys_build, build_demos);
    if (check->parsed()) return cmd_check(c_check, sys_check, check_set, contract_samples);
    if (bounds->parsed()) return cmd_bounds(c_bounds, sys_bounds);
    if (eval->parsed()) return cmd_eval(c_eval, sys_eval, eval_set, eval_params, eval_n);
    if (exp->parsed()) return cmd_experiment(c_exp, sys_exp);
    if (plot->parsed()) return cmd_plot(plot_dir);
  } catch (const ExpertFailure& e) {
    std::cerr << "expert failure: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
