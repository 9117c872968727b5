#include "hamchain/chain_policy.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "hamchain/errors.hpp"
#include "hamchain/rng.hpp"

namespace hamchain {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// rho and its minimizer in one pass; first minimizer wins on ties
std::pair<double, int> nearest_normalized(const AssignmentSet& set,
                                          const Eigen::VectorXd& x) {
  double best = kInf;
  int best_i = -1;
  for (size_t i = 0; i < set.triples.size(); ++i) {
    const AssignmentTriple& tr = set.triples[i];
    double d = (x - tr.center).norm() / tr.radius;
    if (d < best) {
      best = d;
      best_i = static_cast<int>(i);
    }
  }
  return {best, best_i};
}
}  // namespace

double AssignmentSet::max_radius() const {
  double r = 0.0;
  for (const auto& t : triples) r = std::max(r, t.radius);
  return r;
}

double AssignmentSet::min_radius() const {
  if (triples.empty()) return 0.0;
  double r = kInf;
  for (const auto& t : triples) r = std::min(r, t.radius);
  return r;
}

double rho(const AssignmentSet& set, const Eigen::VectorXd& x) {
  return nearest_normalized(set, x).first;
}

int select_index(const AssignmentSet& set, const Eigen::VectorXd& x) {
  auto [best, best_i] = nearest_normalized(set, x);
  return best <= 1.0 ? best_i + 1 : 0;
}

double certified_radius(double dh_start, double dh_end, double t, double v0,
                        double l_h, double l) {
  if (t <= 0.0) throw ConfigError("certified_radius: duration must be positive");
  if (l_h <= 0.0) throw ConfigError("certified_radius: l_h must be positive");
  return (dh_start - dh_end - v0 * t) / (l_h * (1.0 + std::exp(l * t)));
}

AssignmentSet build_assignment_set(const SystemModel& model, const TargetSpec& target,
                                   const std::vector<Trajectory>& demos,
                                   const BuildConfig& cfg, BuildDiagnostics* diag) {
  if (cfg.v0 <= 0.0) throw ConfigError("build_assignment_set: v0 must be positive");
  if (cfg.dt <= 0.0 || cfg.duration_step <= 0 || cfg.duration_cap <= 0.0 ||
      cfg.fallback_tau <= 0.0)
    throw ConfigError("build_assignment_set: bad grid configuration");

  AssignmentSet set;
  set.v0 = cfg.v0;
  set.system_id = model.id;

  ControlSnippet fb;
  int fb_steps = std::max(1, static_cast<int>(std::lround(cfg.fallback_tau / cfg.dt)));
  fb.values = Eigen::MatrixXd::Zero(model.input_dim, fb_steps);
  fb.dt_u = cfg.dt;
  fb.duration = fb_steps * cfg.dt;
  set.alphabet.push_back(std::move(fb));

  const double l_h = model.lipschitz_h;
  const double l = model.lipschitz_f;
  const int step = cfg.duration_step;
  const int cap_j =
      std::max(1, static_cast<int>(std::floor(cfg.duration_cap / (step * cfg.dt) + 1e-9)));
  // denominators are shared across anchors; keep the expression identical to
  // certified_radius so the stored radii reproduce it bit for bit
  std::vector<double> denom(cap_j + 1, 0.0);
  for (int j = 1; j <= cap_j; ++j) denom[j] = l_h * (1.0 + std::exp(l * ((j * step) * cfg.dt)));

  BuildDiagnostics d;
  d.min_radius = kInf;
  double radius_sum = 0.0, advance_sum = 0.0;
  long advance_cnt = 0;

  for (size_t di = 0; di < demos.size(); ++di) {
    const Trajectory& tr = demos[di];
    ++d.demos_seen;
    if (tr.states.rows() != model.state_dim || tr.controls.rows() != model.input_dim)
      throw ConfigError("build_assignment_set: demo dimensions do not match the model");
    const int K = tr.steps();
    if (K < 1 || tr.times.size() != static_cast<size_t>(K + 1))
      throw ConfigError("build_assignment_set: malformed demo trajectory");
    if (std::abs((tr.times[1] - tr.times[0]) - cfg.dt) > 1e-9)
      throw ConfigError("build_assignment_set: demo is not sampled on the build grid");

    std::vector<double> dh(K + 1);
    for (int k = 0; k <= K; ++k) dh[k] = delta_h(model, target, tr.states.col(k));

    // per-sample gradient norms, for the tube-local bound
    std::vector<double> gn;
    if (cfg.local_grad_bound) {
      gn.resize(K + 1);
      Eigen::VectorXd g;
      for (int k = 0; k <= K; ++k) {
        model.grad_h(tr.states.col(k), g);
        gn[k] = g.norm();
      }
    }
    // gradient norms between samples exceed the sampled ones by at most
    // Lip(grad H) * (distance travelled in half a step)
    const double sample_slack = 0.5 * l * model.bound_f * cfg.dt;

    // radius certified against a gradient bound valid on the tube swept by
    // the comparison argument: ||grad H|| <= A + slack + l * E * r there, so
    // r solves r * (A + slack + l E r) * (1 + E) = excess, a quadratic.
    auto local_radius = [&](double excess, double a_max, double e_t, double* l_used) {
      const double b = (a_max + sample_slack) * (1.0 + e_t);
      const double a = l * e_t * (1.0 + e_t);
      double r;
      if (a > 0.0) {
        r = (-b + std::sqrt(b * b + 4.0 * a * excess)) / (2.0 * a);
      } else {
        r = excess / b;
      }
      *l_used = a_max + sample_slack + l * e_t * r;
      return r;
    };

    const int kept_before = d.anchors_kept;
    int k = 0;
    while (k < K) {
      Eigen::VectorXd anchor = tr.states.col(k);
      if (target.in_ball(anchor)) break;

      const int max_j = std::min((K - k) / step, cap_j);
      double best_r = 0.0;
      double best_lh = l_h;
      int best_steps = 0;
      double a_max = cfg.local_grad_bound ? gn[k] : 0.0;
      int scanned = k;
      for (int j = 1; j <= max_j; ++j) {
        const int end = k + j * step;
        const double t_j = (j * step) * cfg.dt;
        const double excess = dh[k] - dh[end] - cfg.v0 * t_j;
        double r, lh_used;
        if (cfg.local_grad_bound) {
          while (scanned < end) a_max = std::max(a_max, gn[++scanned]);
          if (excess <= 0.0) continue;
          r = local_radius(excess, a_max, std::exp(l * t_j), &lh_used);
        } else {
          r = excess / denom[j];
          lh_used = l_h;
        }
        if (r > best_r) {
          best_r = r;
          best_lh = lh_used;
          best_steps = j * step;
        }
      }
      {
        // the duration grid runs up to the demo's remaining time, which is
        // rarely a multiple of the grid step; the exact endpoint matters near
        // the tail, where the certifying decrease sits in the final samples
        // and skipping it strands the approach above the target ball.
        const int rem = K - k;
        const double t_rem = rem * cfg.dt;
        if (rem > max_j * step && t_rem <= cfg.duration_cap) {
          const double excess = dh[k] - dh[K] - cfg.v0 * t_rem;
          double r = 0.0, lh_used = l_h;
          if (cfg.local_grad_bound) {
            while (scanned < K) a_max = std::max(a_max, gn[++scanned]);
            if (excess > 0.0)
              r = local_radius(excess, a_max, std::exp(l * t_rem), &lh_used);
          } else {
            r = excess / (l_h * (1.0 + std::exp(l * t_rem)));
          }
          if (r > best_r) {
            best_r = r;
            best_lh = lh_used;
            best_steps = rem;
          }
        }
      }
      if (best_steps == 0) break;  // no duration certifies a positive radius

      const int sn_steps = best_steps;
      ControlSnippet sn;
      sn.values = tr.controls.middleCols(k, sn_steps);
      sn.dt_u = cfg.dt;
      sn.duration = sn_steps * cfg.dt;
      set.alphabet.push_back(std::move(sn));

      AssignmentTriple t3;
      t3.center = anchor;
      t3.radius = best_r;
      t3.l_h_local = cfg.local_grad_bound ? best_lh : 0.0;
      t3.snippet = static_cast<int>(set.alphabet.size()) - 1;
      t3.demo_index = static_cast<int>(di);
      t3.demo_time = tr.times[k];
      t3.dh_start = dh[k];
      t3.dh_end = dh[k + sn_steps];
      set.triples.push_back(std::move(t3));

      ++d.anchors_kept;
      radius_sum += best_r;
      d.min_radius = std::min(d.min_radius, best_r);
      d.max_radius = std::max(d.max_radius, best_r);
      d.max_duration = std::max(d.max_duration, sn_steps * cfg.dt);

      int adv = sn_steps;
      for (int s = 1; s <= sn_steps; ++s) {
        if ((tr.states.col(k + s) - anchor).norm() > best_r) {
          adv = s;
          break;
        }
      }
      advance_sum += adv * cfg.dt;
      ++advance_cnt;
      k += adv;
    }
    if (d.anchors_kept == kept_before) ++d.demos_empty;
  }

  d.mean_radius = d.anchors_kept ? radius_sum / d.anchors_kept : 0.0;
  d.mean_advance = advance_cnt ? advance_sum / advance_cnt : 0.0;
  if (!d.anchors_kept) d.min_radius = 0.0;
  if (diag) *diag = d;
  return set;
}

double default_v0(const SystemModel& model, const TargetSpec& target,
                  const std::vector<Trajectory>& demos) {
  double sum = 0.0;
  int n = 0;
  for (const Trajectory& tr : demos) {
    try {
      sum += decrease_rate(model, target, tr);
      ++n;
    } catch (const NoHit&) {
    }
  }
  double v = n ? 1e-3 * (sum / n) : 0.0;
  return std::max(v, 1e-4);
}

Condition1Report check_condition1(const SystemModel& model, const TargetSpec& target,
                                  const AssignmentSet& set, double v0, double tol) {
  Condition1Report rep;
  rep.margins.reserve(set.triples.size());
  Stepper stepper(model);
  Eigen::VectorXd x;
  for (size_t i = 0; i < set.triples.size(); ++i) {
    const AssignmentTriple& tr = set.triples[i];
    const ControlSnippet& sn = set.alphabet[tr.snippet];
    x = tr.center;
    for (int s = 0; s < sn.steps(); ++s) stepper.step(x, sn.values.col(s), sn.dt_u, x);
    const double tau = sn.duration;
    const double dh0 = delta_h(model, target, tr.center);
    const double dh_end = delta_h(model, target, x);
    const double lh = tr.l_h_local > 0.0 ? tr.l_h_local : model.lipschitz_h;
    const double lhs = dh_end + v0 * tau + lh * tr.radius * std::exp(model.lipschitz_f * tau);
    const double rhs = dh0 - lh * tr.radius;
    const double margin = rhs - lhs;
    rep.margins.push_back(margin);
    if (margin < -tol) {
      ++rep.violations;
    }
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_index = static_cast<int>(i);
    }
  }
  if (set.triples.empty()) rep.worst_margin = 0.0;
  rep.holds = rep.violations == 0;
  return rep;
}

Condition2Report check_condition2(const SystemModel& model, const TargetSpec& target,
                                  const AssignmentSet& set,
                                  const std::vector<Eigen::VectorXd>& s0_samples,
                                  int grid) {
  if (grid < 2) throw ConfigError("check_condition2: grid must have at least 2 points");
  Condition2Report rep;
  double below = 0.0, above = 0.0, c = -kInf;
  for (const Eigen::VectorXd& s : s0_samples) {
    const double h = model.hamiltonian(s);
    c = std::max(c, delta_h(target, h));
    below = std::max(below, target.h_min - h);
    above = std::max(above, h - target.h_max);
  }
  rep.c = s0_samples.empty() ? 0.0 : c;
  if (below > 0.0) rep.scanned.emplace_back(target.h_min - below, target.h_min);
  if (above > 0.0) rep.scanned.emplace_back(target.h_max, target.h_max + above);

  // union of the anchor balls' energy bands
  std::vector<std::pair<double, double>> bands;
  bands.reserve(set.triples.size());
  for (const AssignmentTriple& tr : set.triples)
    bands.push_back(energy_band_of_ball(model, tr.center, tr.radius, 64, 64, true));
  std::sort(bands.begin(), bands.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& b : bands) {
    if (!merged.empty() && b.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, b.second);
    else
      merged.push_back(b);
  }
  auto covered = [&](double h) {
    auto it = std::upper_bound(merged.begin(), merged.end(), std::make_pair(h, kInf));
    if (it == merged.begin()) return false;
    --it;
    return h <= it->second;
  };

  for (const auto& [lo, hi] : rep.scanned) {
    bool in_gap = false;
    double gap_lo = 0.0, last = lo;
    for (int g = 0; g < grid; ++g) {
      const double h = lo + (hi - lo) * g / (grid - 1);
      if (!covered(h)) {
        if (!in_gap) {
          in_gap = true;
          gap_lo = h;
        }
        last = h;
      } else if (in_gap) {
        rep.gaps.emplace_back(gap_lo, last);
        in_gap = false;
      }
    }
    if (in_gap) rep.gaps.emplace_back(gap_lo, last);
  }
  rep.holds = rep.gaps.empty();
  return rep;
}

BallContractReport ball_decrease_contract(const SystemModel& model, const TargetSpec& target,
                                          const AssignmentSet& set, int samples_per_triple,
                                          uint64_t seed, double tol) {
  BallContractReport rep;
  rep.worst_excess = -kInf;
  Stepper stepper(model);
  const int n = model.state_dim;
  Eigen::VectorXd z(n), y(n), x(n);
  for (size_t i = 0; i < set.triples.size(); ++i) {
    const AssignmentTriple& tr = set.triples[i];
    const ControlSnippet& sn = set.alphabet[tr.snippet];
    Rng rng(seed_stream(seed, 0xba11dec5ull, i));
    for (int s = 0; s < samples_per_triple; ++s) {
      // uniform in the unit ball by rejection from the cube
      int attempts = 0;
      do {
        for (int j = 0; j < n; ++j) z[j] = rng.uniform(-1.0, 1.0);
      } while (z.squaredNorm() > 1.0 && ++attempts < 1000);
      if (attempts >= 1000) z.setZero();
      y = tr.center + tr.radius * z;
      // clamping toward an in-box center stays inside the ball
      y = y.cwiseMax(model.state_lo).cwiseMin(model.state_hi);

      const double dh_y = delta_h(model, target, y);
      x = y;
      for (int t = 0; t < sn.steps(); ++t) stepper.step(x, sn.values.col(t), sn.dt_u, x);
      const double dh_end = delta_h(model, target, x);
      const double excess = dh_end + set.v0 * sn.duration - dh_y;
      ++rep.checked;
      if (excess > rep.worst_excess) {
        rep.worst_excess = excess;
        rep.worst_triple = static_cast<int>(i);
      }
      if (excess > tol) ++rep.violations;
    }
  }
  if (rep.checked == 0) rep.worst_excess = 0.0;
  return rep;
}

SelectIndexAccel::SelectIndexAccel(const AssignmentSet& set) : set_(&set) {
  const double rm = set.max_radius();
  if (set.triples.empty() || rm <= 0.0) return;
  dim_ = static_cast<int>(set.triples[0].center.size());
  inv_cell_ = 1.0 / rm;
  entries_.reserve(set.triples.size());
  std::vector<int> zero(dim_, 0);
  for (size_t i = 0; i < set.triples.size(); ++i)
    entries_.push_back({cell_key(set.triples[i].center, zero.data()), static_cast<int>(i)});
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.index < b.index;
  });
}

uint64_t SelectIndexAccel::cell_key(const Eigen::VectorXd& x, const int* shift) const {
  uint64_t h = 0x9e3779b97f4a7c15ull;
  for (int j = 0; j < dim_; ++j) {
    const int64_t c = static_cast<int64_t>(std::floor(x[j] * inv_cell_)) + shift[j];
    h = splitmix64(h ^ static_cast<uint64_t>(c));
  }
  return h;
}

std::pair<double, int> SelectIndexAccel::query(const Eigen::VectorXd& x) const {
  if (entries_.empty()) return {kInf, 0};
  double best = kInf;
  int best_i = -1;
  // every ball containing x has r <= cell size, so one ring suffices
  std::vector<int> shift(dim_, -1);
  while (true) {
    const uint64_t key = cell_key(x, shift.data());
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const Entry& e, uint64_t k) { return e.key < k; });
    for (; it != entries_.end() && it->key == key; ++it) {
      const AssignmentTriple& tr = set_->triples[it->index];
      const double d = (x - tr.center).norm() / tr.radius;
      if (d < best || (d == best && it->index < best_i)) {
        best = d;
        best_i = it->index;
      }
    }
    int j = 0;
    while (j < dim_ && shift[j] == 1) {
      shift[j] = -1;
      ++j;
    }
    if (j == dim_) break;
    ++shift[j];
  }
  if (best <= 1.0) return {best, best_i + 1};
  return {best, 0};
}

RolloutRecord rollout_chain(const SystemModel& model, const TargetSpec& target,
                            const AssignmentSet& set, const Eigen::VectorXd& x0,
                            const RolloutConfig& cfg, const SelectIndexAccel* accel) {
  if (x0.size() != model.state_dim)
    throw ConfigError("rollout_chain: x0 dimension does not match the model");
  if (cfg.horizon <= 0.0 || cfg.dt <= 0.0)
    throw ConfigError("rollout_chain: horizon and dt must be positive");

  RolloutRecord rec;
  rec.horizon = cfg.horizon;
  const long total_steps = std::lround(cfg.horizon / cfg.dt);

  // sets built elsewhere may lack even the default snippet; synthesize one
  ControlSnippet synth;
  const ControlSnippet* fallback = nullptr;
  if (set.alphabet.empty()) {
    synth.values = Eigen::MatrixXd::Zero(model.input_dim, 500);
    synth.dt_u = cfg.dt;
    synth.duration = 500 * cfg.dt;
    fallback = &synth;
  } else {
    fallback = &set.alphabet[0];
  }

  std::vector<double> ts, xs, us;
  if (cfg.record_trajectory) {
    ts.reserve(total_steps + 1);
    xs.reserve((total_steps + 1) * model.state_dim);
    us.reserve(total_steps * model.input_dim);
  }
  Eigen::VectorXd x = x0;
  auto push_state = [&](double t) {
    if (!cfg.record_trajectory) return;
    ts.push_back(t);
    for (int j = 0; j < model.state_dim; ++j) xs.push_back(x[j]);
  };
  auto finalize = [&]() {
    if (!cfg.record_trajectory) return;
    const int K = static_cast<int>(ts.size()) - 1;
    rec.trajectory.times = ts;
    rec.trajectory.states =
        Eigen::Map<Eigen::MatrixXd>(xs.data(), model.state_dim, K + 1);
    if (K > 0)
      rec.trajectory.controls = Eigen::Map<Eigen::MatrixXd>(us.data(), model.input_dim, K);
    else
      rec.trajectory.controls.resize(model.input_dim, 0);
  };

  push_state(0.0);
  if (!model.in_state_box(x)) {
    rec.failed = true;
    rec.reach_time = cfg.horizon;
    finalize();
    return rec;
  }
  if (target.in_ball(x)) {
    rec.reached = true;
    rec.reach_time = 0.0;
    finalize();
    return rec;
  }

  Stepper stepper(model);
  long step = 0;
  while (step < total_steps) {
    double rv;
    int idx;
    if (accel) {
      std::tie(rv, idx) = accel->query(x);
    } else {
      auto [d, i] = nearest_normalized(set, x);
      idx = d <= 1.0 ? i + 1 : 0;
      rv = d;
    }
    if (idx == 0) rv = kInf;  // outside the support; ring-limited rho is moot
    rec.log.push_back({step * cfg.dt, idx, rv, delta_h(model, target, x)});

    const ControlSnippet& sn =
        idx == 0 ? *fallback : set.alphabet[set.triples[idx - 1].snippet];
    if (std::abs(sn.dt_u - cfg.dt) > 1e-12)
      throw ConfigError("rollout_chain: snippet grid differs from the rollout grid");
    const long run = std::min<long>(sn.steps(), total_steps - step);
    for (long s = 0; s < run; ++s) {
      stepper.step(x, sn.values.col(s), cfg.dt, x);
      ++step;
      if (cfg.record_trajectory) {
        for (int j = 0; j < model.input_dim; ++j) us.push_back(sn.values.col(s)[j]);
      }
      push_state(step * cfg.dt);
      if (!x.allFinite() || !model.in_state_box(x)) {
        rec.failed = true;
        rec.reach_time = cfg.horizon;
        finalize();
        return rec;
      }
      if (target.in_ball(x)) {
        rec.reached = true;
        rec.reach_time = step * cfg.dt;
        finalize();
        return rec;
      }
    }
  }
  rec.reach_time = cfg.horizon;
  finalize();
  return rec;
}

}  // namespace hamchain
