#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hamchain/bc_baseline.hpp"
#include "hamchain/chain_policy.hpp"
#include "hamchain/dynamics.hpp"
#include "hamchain/expert.hpp"
#include "hamchain/toml_lite.hpp"

namespace hamchain {

struct SeedGroup {
  uint64_t sampling = 1;
  uint64_t expert = 2;
  uint64_t bc = 3;
};

// Resolved experiment description.  Every field has a per-system default and
// every default can be overridden from the TOML config file.
struct ExperimentConfig {
  // system
  std::string system_id = "spring_mass";  // or "pendulum"
  double mass = 1.0;
  double stiffness = 1.0;  // spring only
  double length = 2.0;     // pendulum only
  double gravity = 9.81;   // pendulum only
  double u_abs = 20.0;
  Eigen::Vector2d box_lo, box_hi;

  // target
  Eigen::VectorXd target_center;
  double target_radius = 0.1;
  double eps_margin = 0.0;  // 0 requests the default (half the band halfwidth)

  // experiment
  double h_bar = 0.5;
  int n_test = 500;
  std::vector<int> m_sweep = {1, 2, 3, 4, 5};
  double horizon = 20.0;
  double dt = 1e-3;
  SeedGroup seeds;
  std::string output_dir = "out";

  // expert planner
  ExpertConfig expert;

  // chain-policy build
  double build_v0 = 0.0;  // 0 requests the demo-derived default
  double fallback_tau = 1e-3;
  double duration_cap = 5.0;
  int duration_step = 10;

  // demonstration start selection
  double demo_dh_frac = 0.99;     // keep starts with dh >= frac * (probed sup dh)
  int demo_spread_candidates = 40;  // pool size for the farthest-point pick
  int demo_retry_budget = 15;     // expert failures tolerated across all demos
  int n_probe = 2000;             // draws used to probe sup dh over S0

  // behavior cloning
  TrainConfig bc_train;

  SystemModel make_model() const;
  TargetSpec make_target_spec(const SystemModel& model) const;
};

// Per-system defaults; `system_id` must be spring_mass or pendulum.
ExperimentConfig default_config(const std::string& system_id);
// Defaults overlaid with whatever the TOML document specifies.
ExperimentConfig config_from_toml(const toml_lite::Document& doc);
ExperimentConfig load_config(const std::string& path);
// Full resolved echo, suitable for provenance and for reloading.
std::string config_to_toml(const ExperimentConfig& cfg);

// Uniform rejection sampling on {x in box : H(x) <= h_bar}.  Errors out when
// the acceptance rate over ten million draws falls below 1e-4.
std::vector<Eigen::VectorXd> sample_initial_states(const SystemModel& model, double h_bar,
                                                   int count, Rng& rng);

// Demonstration starts: S0 draws filtered to the top of the band-distance
// range (so demo tubes start above the test population) and spread out by a
// farthest-point pick over a candidate pool.  Deterministic under seed.
struct DemoStartSelection {
  std::vector<Eigen::VectorXd> starts;
  double dh_threshold = 0.0;
  double c_probe = 0.0;  // probed sup of dh over S0
};
DemoStartSelection select_demo_starts(const SystemModel& model, const TargetSpec& target,
                                      const ExperimentConfig& cfg, int count);

// Expert demonstrations from the selected starts, retrying on expert failure
// until the budget runs out.  `count` defaults to max(m_sweep).
std::vector<Demonstration> generate_demonstrations(const ExperimentConfig& cfg,
                                                   const SystemModel& model,
                                                   const TargetSpec& target, int count = 0);

struct ResultRecord {
  std::string policy;  // "chain" or "bc"
  int m = 0;
  double success_rate = 0.0;
  double avg_reach_time = 0.0;
  long n_triples = 0;  // chain only, 0 for bc
  double wall_time = 0.0;
};

struct DetailRecord {
  std::string policy;
  int m = 0;
  int test_idx = 0;
  Eigen::VectorXd x0;
  bool reached = false;
  double reach_time = 0.0;
};

struct ExperimentResult {
  std::vector<ResultRecord> results;
  std::vector<DetailRecord> details;
  std::string demo_sha256;  // digest of the demo file both consumers loaded
  std::string results_csv_path, detail_csv_path, demos_path;
};

// Full protocol: sample test states, generate max(m_sweep) demonstrations
// once, then for each M build/train on the first M and evaluate both policies
// on the same test states.  Writes results.csv, detail.csv, demos.json, the
// resolved config and a plot script into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string render_results_csv(const std::vector<ResultRecord>& rows);
std::string render_detail_csv(const std::vector<DetailRecord>& rows, int state_dim);

// matplotlib script that renders success-rate and reach-time curves from
// results.csv next to it.
std::string plot_script_text();

std::string sha256_hex(const std::string& bytes);

}  // namespace hamchain
