#include "hamchain/bc_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hamchain/errors.hpp"
#include "hamchain/rng.hpp"

namespace hamchain {

long MlpParams::param_count() const {
  long n = 0;
  for (const auto& m : w) n += m.size();
  for (const auto& v : b) n += v.size();
  return n;
}

namespace {

// Locate flat coordinate i inside the weight/bias storage.
double* flat_ptr(MlpParams& p, long i) {
  for (auto& m : p.w) {
    if (i < m.size()) return m.data() + i;
    i -= m.size();
  }
  for (auto& v : p.b) {
    if (i < v.size()) return v.data() + i;
    i -= v.size();
  }
  throw ConfigError("parameter index out of range");
}

}  // namespace

double MlpParams::get_param(long i) const {
  return *flat_ptr(const_cast<MlpParams&>(*this), i);
}

void MlpParams::add_to_param(long i, double delta) { *flat_ptr(*this, i) += delta; }

Eigen::VectorXd mlp_raw(const MlpParams& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd h = (x - p.in_mean).cwiseQuotient(p.in_std);
  const int L = p.n_layers();
  for (int l = 0; l < L; ++l) {
    h = p.w[l] * h + p.b[l];
    if (l + 1 < L) h = h.array().tanh().matrix();
  }
  return h;
}

Eigen::VectorXd mlp_forward(const MlpParams& p, const Eigen::VectorXd& x) {
  return mlp_raw(p, x).cwiseMax(p.out_lo).cwiseMin(p.out_hi);
}

double mlp_loss_grad(const MlpParams& p, const Eigen::MatrixXd& X,
                     const Eigen::MatrixXd& U, MlpParams* grad) {
  const int B = static_cast<int>(X.cols());
  if (B == 0) throw ConfigError("mlp_loss_grad: empty batch");
  if (U.cols() != B) throw ConfigError("mlp_loss_grad: X/U batch mismatch");
  const int L = p.n_layers();

  // forward, keeping activations
  std::vector<Eigen::MatrixXd> act(L + 1);
  // column loop keeps this bitwise identical to the single-state forward
  act[0].resize(X.rows(), B);
  for (int c = 0; c < B; ++c)
    act[0].col(c) = (X.col(c) - p.in_mean).cwiseQuotient(p.in_std);
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z = (p.w[l] * act[l]).colwise() + p.b[l];
    act[l + 1] = (l + 1 < L) ? z.array().tanh().matrix() : z;
  }

  const Eigen::MatrixXd diff = act[L] - U;
  const double loss = diff.squaredNorm() / B;

  if (grad) {
    grad->sizes = p.sizes;
    grad->w.assign(L, {});
    grad->b.assign(L, {});
    // d loss / d out = 2 diff / B
    Eigen::MatrixXd delta = (2.0 / B) * diff;
    for (int l = L - 1; l >= 0; --l) {
      grad->w[l] = delta * act[l].transpose();
      grad->b[l] = delta.rowwise().sum();
      if (l > 0) {
        delta = (p.w[l].transpose() * delta).cwiseProduct(
            (1.0 - act[l].array().square()).matrix());
      }
    }
  }
  return loss;
}

namespace {

MlpParams init_params(const SystemModel& model, uint64_t seed) {
  MlpParams p;
  const int n = model.state_dim, m = model.input_dim;
  p.sizes = {n, 24, 24, 16, m};
  Rng rng(seed_stream(seed, 0xbc1217ull, 0));
  for (size_t l = 0; l + 1 < p.sizes.size(); ++l) {
    const int fan_in = p.sizes[l], fan_out = p.sizes[l + 1];
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd w(fan_out, fan_in);
    // fill in a fixed traversal order so the init is reproducible
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-a, a);
    p.w.push_back(std::move(w));
    p.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  p.out_lo = model.input_lo;
  p.out_hi = model.input_hi;
  return p;
}

}  // namespace

MlpParams train_bc(const SystemModel& model, const std::vector<Trajectory>& demos,
                   const TrainConfig& cfg, TrainReport* report) {
  if (cfg.lr <= 0.0 || cfg.epochs <= 0 || cfg.batch <= 0)
    throw ConfigError("train_bc: bad training configuration");

  // gather every (state, applied input) pair on the demo grids
  long total = 0;
  for (const auto& tr : demos) total += tr.steps();
  if (total == 0) throw ConfigError("train_bc: demonstrations contain no transitions");
  Eigen::MatrixXd X(model.state_dim, total), U(model.input_dim, total);
  long col = 0;
  for (const auto& tr : demos) {
    const int K = tr.steps();
    if (K == 0) continue;
    if (tr.states.rows() != model.state_dim || tr.controls.rows() != model.input_dim)
      throw ConfigError("train_bc: demonstration dimension mismatch");
    X.middleCols(col, K) = tr.states.leftCols(K);
    U.middleCols(col, K) = tr.controls;
    col += K;
  }

  MlpParams p = init_params(model, cfg.seed);
  p.in_mean = X.rowwise().mean();
  Eigen::VectorXd var =
      (X.colwise() - p.in_mean).array().square().rowwise().mean().matrix();
  p.in_std = var.array().sqrt().max(1e-8).matrix();

  const int L = p.n_layers();
  // Adam state, same flat layout as the parameters
  std::vector<Eigen::MatrixXd> mw(L), vw(L);
  std::vector<Eigen::VectorXd> mb(L), vb(L);
  for (int l = 0; l < L; ++l) {
    mw[l] = Eigen::MatrixXd::Zero(p.w[l].rows(), p.w[l].cols());
    vw[l] = mw[l];
    mb[l] = Eigen::VectorXd::Zero(p.b[l].size());
    vb[l] = mb[l];
  }
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  long step = 0;

  std::vector<long> order(total);
  std::iota(order.begin(), order.end(), 0L);
  Rng shuffle_rng(seed_stream(cfg.seed, 0xbc50566ull, 1));
  if (report) {
    report->epoch_loss.clear();
    report->n_samples = total;
  }

  MlpParams grad;
  Eigen::MatrixXd bx(model.state_dim, cfg.batch), bu(model.input_dim, cfg.batch);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the seeded stream, identical across runs
    for (long i = total - 1; i > 0; --i) {
      const long j = static_cast<long>(shuffle_rng.uniform_int(i + 1));
      std::swap(order[i], order[j]);
    }
    double epoch_sum = 0.0;
    long n_batches = 0;
    for (long start = 0; start < total; start += cfg.batch) {
      const int bsz = static_cast<int>(std::min<long>(cfg.batch, total - start));
      bx.resize(model.state_dim, bsz);
      bu.resize(model.input_dim, bsz);
      for (int i = 0; i < bsz; ++i) {
        bx.col(i) = X.col(order[start + i]);
        bu.col(i) = U.col(order[start + i]);
      }
      epoch_sum += mlp_loss_grad(p, bx, bu, &grad);
      ++n_batches;
      ++step;
      const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (int l = 0; l < L; ++l) {
        mw[l] = b1 * mw[l] + (1.0 - b1) * grad.w[l];
        vw[l] = b2 * vw[l] + (1.0 - b2) * grad.w[l].cwiseProduct(grad.w[l]);
        mb[l] = b1 * mb[l] + (1.0 - b1) * grad.b[l];
        vb[l] = b2 * vb[l] + (1.0 - b2) * grad.b[l].cwiseProduct(grad.b[l]);
        p.w[l] -= cfg.lr * ((mw[l] / bc1).array() /
                            ((vw[l] / bc2).array().sqrt() + adam_eps))
                               .matrix();
        // decoupled decay, weights only
        p.w[l] -= cfg.lr * cfg.weight_decay * p.w[l];
        p.b[l] -= cfg.lr * ((mb[l] / bc1).array() /
                            ((vb[l] / bc2).array().sqrt() + adam_eps))
                               .matrix();
      }
    }
    if (report) report->epoch_loss.push_back(epoch_sum / static_cast<double>(n_batches));
  }
  return p;
}

RolloutRecord rollout_bc(const SystemModel& model, const TargetSpec& target,
                         const MlpParams& params, const Eigen::VectorXd& x0,
                         const RolloutConfig& cfg) {
  if (x0.size() != model.state_dim) throw ConfigError("rollout_bc: state dimension mismatch");
  if (!(cfg.dt > 0.0) || !(cfg.horizon > 0.0))
    throw ConfigError("rollout_bc: horizon and dt must be positive");

  RolloutRecord rec;
  rec.horizon = cfg.horizon;
  const long total_steps = static_cast<long>(std::llround(cfg.horizon / cfg.dt));

  std::vector<double> ts;
  std::vector<double> xs, us;
  const int n = model.state_dim, m = model.input_dim;
  auto record_state = [&](double t, const Eigen::VectorXd& x) {
    if (!cfg.record_trajectory) return;
    ts.push_back(t);
    xs.insert(xs.end(), x.data(), x.data() + n);
  };

  Eigen::VectorXd x = x0;
  if (!model.in_state_box(x)) {
    rec.failed = true;
    rec.reach_time = cfg.horizon;
    return rec;
  }
  record_state(0.0, x);
  if (target.in_ball(x)) {
    rec.reached = true;
    rec.reach_time = 0.0;
    return rec;
  }

  Stepper stepper(model);
  Eigen::VectorXd xn(n);
  long k = 0;
  for (; k < total_steps; ++k) {
    const Eigen::VectorXd u = mlp_forward(params, x);
    stepper.step(x, u, cfg.dt, xn);
    if (cfg.record_trajectory) us.insert(us.end(), u.data(), u.data() + m);
    x = xn;
    const double t = static_cast<double>(k + 1) * cfg.dt;
    record_state(t, x);
    if (!x.allFinite() || !model.in_state_box(x)) {
      rec.failed = true;
      rec.reach_time = cfg.horizon;
      break;
    }
    if (target.in_ball(x)) {
      rec.reached = true;
      rec.reach_time = t;
      break;
    }
  }
  if (!rec.reached && !rec.failed) rec.reach_time = cfg.horizon;

  if (cfg.record_trajectory) {
    const long K = static_cast<long>(us.size()) / m;
    rec.trajectory.times = ts;
    rec.trajectory.states =
        Eigen::Map<const Eigen::MatrixXd>(xs.data(), n, static_cast<long>(ts.size()));
    if (K > 0)
      rec.trajectory.controls = Eigen::Map<const Eigen::MatrixXd>(us.data(), m, K);
    else
      rec.trajectory.controls.resize(m, 0);
  }
  return rec;
}

double gradient_check(const MlpParams& p, const Eigen::MatrixXd& X,
                      const Eigen::MatrixXd& U, int n_coords, uint64_t seed,
                      double h) {
  MlpParams grad;
  mlp_loss_grad(p, X, U, &grad);
  MlpParams work = p;
  Rng rng(seed_stream(seed, 0x6badc8ecull, 0));
  const long total = p.param_count();
  double worst = 0.0;
  for (int i = 0; i < n_coords; ++i) {
    const long idx = static_cast<long>(rng.uniform_int(static_cast<uint64_t>(total)));
    work.add_to_param(idx, h);
    const double lp = mlp_loss_grad(work, X, U, nullptr);
    work.add_to_param(idx, -2.0 * h);
    const double lm = mlp_loss_grad(work, X, U, nullptr);
    work.add_to_param(idx, h);  // restore
    const double fd = (lp - lm) / (2.0 * h);
    const double an = grad.get_param(idx);
    const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
    worst = std::max(worst, rel);
  }
  return worst;
}

}  // namespace hamchain
