#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hamchain/dynamics.hpp"

namespace hamchain {

// A finite piece of open-loop control, zero-order held on the integrator grid.
struct ControlSnippet {
  Eigen::MatrixXd values;  // input_dim x steps, one column per hold interval
  double dt_u = 1e-3;
  double duration = 0.0;  // steps * dt_u
  int steps() const { return static_cast<int>(values.cols()); }
};

// One anchor: within `radius` of `center`, play alphabet[snippet] in full.
struct AssignmentTriple {
  Eigen::VectorXd center;
  double radius = 0.0;
  int snippet = -1;  // index into AssignmentSet::alphabet
  // gradient bound the radius was certified against: a bound on ||grad H||
  // over the tube the snippet's comparison argument sweeps (0 means the
  // builder used the global box constant)
  double l_h_local = 0.0;
  // provenance, kept for audits and diagnostics
  int demo_index = -1;
  double demo_time = 0.0;
  double dh_start = 0.0;
  double dh_end = 0.0;
};

struct AssignmentSet {
  std::vector<ControlSnippet> alphabet;  // entry 0 is the zero default snippet
  std::vector<AssignmentTriple> triples;
  double v0 = 0.0;  // decrease rate the radii were certified against
  std::string system_id;

  double default_duration() const {
    return alphabet.empty() ? 0.0 : alphabet[0].duration;
  }
  double max_radius() const;
  double min_radius() const;
};

// Scaled distance to the nearest anchor, min_i |x - x_i| / r_i.
// +inf when the set has no triples.
double rho(const AssignmentSet& set, const Eigen::VectorXd& x);

// 1-based index of the minimizing anchor when rho <= 1, else 0 (default
// snippet).  Ties resolve to the smallest index.
int select_index(const AssignmentSet& set, const Eigen::VectorXd& x);

// Coverage radius certified by the measured drop of the band distance:
//   r = (dh_start - dh_end - v0 t) / (l_h (1 + e^{l t}))
// May be <= 0, which signals an unusable snippet.
double certified_radius(double dh_start, double dh_end, double t, double v0,
                        double l_h, double l);

struct BuildConfig {
  double v0 = 1e-4;           // required certified decrease rate, > 0
  double dt = 1e-3;           // integrator grid the demos are sampled on
  int duration_step = 10;     // candidate durations are multiples of this many dt
  double duration_cap = 5.0;  // longest snippet considered, seconds
  double fallback_tau = 0.5;  // duration of the zero default snippet
  // Certify radii against a gradient bound taken over the snippet's own
  // neighborhood instead of the whole working region.  The decrease argument
  // only ever applies the gradient bound along the compared trajectories, so
  // this stays sound while it stops a far-away corner of the box from
  // strangling radii near a low-energy target (they shrink by the ratio of
  // the two bounds, roughly 70x for the spring target at the origin, which
  // leaves uncoverable slivers just above the target band).
  bool local_grad_bound = true;
};

struct BuildDiagnostics {
  int demos_seen = 0;
  int demos_empty = 0;  // demos that produced no triple
  int anchors_kept = 0;
  double mean_radius = 0.0;
  double min_radius = 0.0;
  double max_radius = 0.0;
  double mean_advance = 0.0;  // mean time between consecutive anchors
  double max_duration = 0.0;
};

// Walks each demonstration: at the current anchor, certify every candidate
// duration and keep the largest-radius snippet (ties to the shortest), then
// advance to the first sample at which the demonstration leaves the certified
// ball (or by the snippet duration if it never does).  A demonstration stops
// contributing once it enters the target ball or no duration certifies a
// positive radius.
AssignmentSet build_assignment_set(const SystemModel& model, const TargetSpec& target,
                                   const std::vector<Trajectory>& demos,
                                   const BuildConfig& cfg,
                                   BuildDiagnostics* diag = nullptr);

// Build-time default for v0: a small fraction of the decrease rate the demos
// actually achieve, floored away from zero.
double default_v0(const SystemModel& model, const TargetSpec& target,
                  const std::vector<Trajectory>& demos);

// Audit of the local-decrease inequality, re-simulated from each anchor:
//   dh(end) + v0 tau + l_h r e^{l tau} <= dh(anchor) - l_h r + tol
struct Condition1Report {
  bool holds = false;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  int worst_index = -1;
  std::vector<double> margins;  // one per triple, >= 0 means satisfied
};
Condition1Report check_condition1(const SystemModel& model, const TargetSpec& target,
                                  const AssignmentSet& set, double v0,
                                  double tol = 1e-9);

// Audit of energy coverage: the energy intervals connecting the sampled start
// states to the target band (from below and from above) must lie inside the
// union of the anchor balls' energy bands.  Band-interior levels are excluded;
// there the policy coasts and recurrence finishes the approach.
struct Condition2Report {
  bool holds = false;
  double c = 0.0;  // max band distance over the start samples
  std::vector<std::pair<double, double>> scanned;  // up to two energy intervals
  std::vector<std::pair<double, double>> gaps;     // uncovered subintervals
};
Condition2Report check_condition2(const SystemModel& model, const TargetSpec& target,
                                  const AssignmentSet& set,
                                  const std::vector<Eigen::VectorXd>& s0_samples,
                                  int grid = 4096);

// Sampled transfer of the decrease certificate from anchors to whole balls:
// for y uniform in B(x_i, r_i) within the state box,
//   dh(end from y) + v0 tau <= dh(y) + tol.
struct BallContractReport {
  long checked = 0;
  long violations = 0;
  double worst_excess = 0.0;  // largest amount by which the bound was missed
  int worst_triple = -1;
};
BallContractReport ball_decrease_contract(const SystemModel& model,
                                          const TargetSpec& target,
                                          const AssignmentSet& set,
                                          int samples_per_triple = 100,
                                          uint64_t seed = 0, double tol = 1e-6);

// Uniform hash grid over anchors; select() matches select_index bit for bit.
// Cell size is the largest radius, so every anchor whose ball contains x lies
// within one cell ring of x.
class SelectIndexAccel {
 public:
  explicit SelectIndexAccel(const AssignmentSet& set);
  // best.first: rho restricted to the ring (+inf if nothing close),
  // best.second: the select_index result.
  std::pair<double, int> query(const Eigen::VectorXd& x) const;

 private:
  struct Entry {
    uint64_t key;
    int index;
  };
  const AssignmentSet* set_;
  std::vector<Entry> entries_;  // sorted by (key, index)
  double inv_cell_ = 0.0;
  int dim_ = 0;

  uint64_t cell_key(const Eigen::VectorXd& x, const int* shift) const;
};

struct SnippetLogEntry {
  double t = 0.0;     // time the selection was made
  int index = 0;      // 1-based triple index, 0 for the default snippet
  double rho = 0.0;   // normalized distance at selection (+inf outside support)
  double dh = 0.0;    // band distance at selection
};

struct RolloutRecord {
  bool reached = false;
  bool failed = false;        // left the state box or integration blew up
  double reach_time = 0.0;    // horizon when the ball was never entered
  double horizon = 0.0;
  Trajectory trajectory;      // empty unless requested
  std::vector<SnippetLogEntry> log;
};

struct RolloutConfig {
  double horizon = 20.0;
  double dt = 1e-3;
  bool record_trajectory = false;
};

// Closed-loop run: select, play the whole snippet, reselect.  Target-ball
// membership is checked at every integrator sample and entry stops the run
// immediately, even mid-snippet.
RolloutRecord rollout_chain(const SystemModel& model, const TargetSpec& target,
                            const AssignmentSet& set, const Eigen::VectorXd& x0,
                            const RolloutConfig& cfg,
                            const SelectIndexAccel* accel = nullptr);

}  // namespace hamchain
