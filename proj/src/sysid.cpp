// Copyright 2026 The shipens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "shipens/sysid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "model_batch.hpp"
#include "shipens/error.hpp"
#include "shipens/parallel.hpp"

namespace shipens {

using nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

LikelihoodWeights LikelihoodWeights::from_sigma(const std::array<double, 6>& sigma) {
  LikelihoodWeights lw;
  for (int c = 0; c < 6; ++c) {
    const double s = sigma[c];
    if (std::isnan(s) || s <= 0.0) throw ConfigError("likelihood sigma must be > 0 (channel " + std::to_string(c) + ")");
    lw.w[c] = std::isinf(s) ? 0.0 : 1.0 / (s * s);
  }
  lw.validate();
  return lw;
}

void LikelihoodWeights::validate() const {
  bool any = false;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("likelihood weights must be finite and >= 0");
    any = any || v > 0.0;
  }
  if (!any) throw ConfigError("likelihood weights: at least one channel must be weighted");
}

// ---------------------------------------------------------------------------
// Batched model evaluation.

namespace detail {

MatrixXd eval_deriv(const DynamicsModel& m, const MatrixXd& x, const StepInputs& in, DerivEval* rec) {
  const Eigen::Index n = x.cols();
  Eigen::Matrix2Xd wt(2, n);
  MatrixXd f(8, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double rel = in.wd[j] - x(2, j);
    wt(0, j) = in.ws[j] * std::cos(rel);
    wt(1, j) = in.ws[j] * std::sin(rel);
    f(0, j) = x(3, j);
    f(1, j) = x(4, j);
    f(2, j) = x(5, j);
    f(3, j) = in.act(0, j);
    f(4, j) = in.act(1, j);
    f(5, j) = in.act(2, j);
    f(6, j) = wt(0, j) - x(3, j);
    f(7, j) = wt(1, j) - x(4, j);
  }
  const auto& st = m.stats;
  const MatrixXd z = ((f.colwise() - st.in_mean).array().colwise() / st.in_std.array()).matrix();
  const MatrixXd y = forward(m.net, z, rec ? &rec->tape : nullptr);
  MatrixXd g(6, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = std::cos(x(2, j)), s = std::sin(x(2, j));
    const double u = x(3, j), v = x(4, j);
    g(0, j) = u * c - v * s;
    g(1, j) = u * s + v * c;
    g(2, j) = x(5, j);
    for (int i = 0; i < 3; ++i) g(3 + i, j) = (y(i, j) - m.norm_mean[i]) / m.norm_std[i] * st.out_std[i] + st.out_mean[i];
  }
  if (rec) {
    rec->x = x;
    rec->wt = wt;
  }
  return g;
}

MatrixXd vjp_deriv(const DynamicsModel& m, const DerivEval& rec, const MatrixXd& lam, VectorXd& grad) {
  const Eigen::Index n = lam.cols();
  MatrixXd out = MatrixXd::Zero(6, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double c = std::cos(rec.x(2, j)), s = std::sin(rec.x(2, j));
    const double u = rec.x(3, j), v = rec.x(4, j);
    out(3, j) += lam(0, j) * c + lam(1, j) * s;
    out(4, j) += -lam(0, j) * s + lam(1, j) * c;
    out(5, j) += lam(2, j);
    out(2, j) += lam(0, j) * (-u * s - v * c) + lam(1, j) * (u * c - v * s);
  }
  const auto& st = m.stats;
  const Vec3 scale = st.out_std.cwiseQuotient(m.norm_std);
  const MatrixXd gy = (lam.bottomRows(3).array().colwise() * scale.array()).matrix();
  const MatrixXd dz = backward(m.net, rec.tape, gy, grad);
  const MatrixXd df = (dz.array().colwise() / st.in_std.array()).matrix();
  out.row(3) += df.row(0) - df.row(6);
  out.row(4) += df.row(1) - df.row(7);
  out.row(5) += df.row(2);
  out.row(2) += df.row(6).cwiseProduct(rec.wt.row(1)) - df.row(7).cwiseProduct(rec.wt.row(0));
  return out;
}

namespace {
MatrixXd scale_cols(const MatrixXd& a, const Eigen::RowVectorXd& s) { return (a.array().rowwise() * s.array()).matrix(); }
}  // namespace

MatrixXd step_batch(const DynamicsModel& m, const MatrixXd& x, const StepInputs& in, Integrator scheme,
                    StepRecord* rec) {
  auto slot = [&](int i) { return rec ? &rec->stage[static_cast<std::size_t>(i)] : nullptr; };
  if (rec) rec->stages = scheme == Integrator::kEuler ? 1 : 4;
  const auto& dt = in.dt;
  if (scheme == Integrator::kEuler) return x + scale_cols(eval_deriv(m, x, in, slot(0)), dt);
  const MatrixXd k1 = eval_deriv(m, x, in, slot(0));
  const MatrixXd k2 = eval_deriv(m, x + 0.5 * scale_cols(k1, dt), in, slot(1));
  const MatrixXd k3 = eval_deriv(m, x + 0.5 * scale_cols(k2, dt), in, slot(2));
  const MatrixXd k4 = eval_deriv(m, x + scale_cols(k3, dt), in, slot(3));
  return x + scale_cols(k1 + 2.0 * k2 + 2.0 * k3 + k4, dt / 6.0);
}

MatrixXd step_vjp(const DynamicsModel& m, const StepRecord& rec, const StepInputs& in, const MatrixXd& lam_next,
                  VectorXd& grad) {
  const auto& dt = in.dt;
  if (rec.stages == 1) return lam_next + vjp_deriv(m, rec.stage[0], scale_cols(lam_next, dt), grad);
  MatrixXd dk1 = scale_cols(lam_next, dt / 6.0);
  MatrixXd dk2 = scale_cols(lam_next, dt / 3.0);
  MatrixXd dk3 = dk2;
  const MatrixXd dk4 = dk1;
  MatrixXd lam = lam_next;
  const MatrixXd l4 = vjp_deriv(m, rec.stage[3], dk4, grad);
  lam += l4;
  dk3 += scale_cols(l4, dt);
  const MatrixXd l3 = vjp_deriv(m, rec.stage[2], dk3, grad);
  lam += l3;
  dk2 += scale_cols(l3, 0.5 * dt);
  const MatrixXd l2 = vjp_deriv(m, rec.stage[1], dk2, grad);
  lam += l2;
  dk1 += scale_cols(l2, 0.5 * dt);
  lam += vjp_deriv(m, rec.stage[0], dk1, grad);
  return lam;
}

}  // namespace detail

// ---------------------------------------------------------------------------

Vec3 model_accel(const DynamicsModel& model, const ShipState& state, const ActuatorState& act, const TrueWind& wind) {
  detail::StepInputs in;
  in.act = act.to_vector();
  in.ws = Eigen::RowVectorXd::Constant(1, wind.speed);
  in.wd = Eigen::RowVectorXd::Constant(1, wind.direction);
  in.dt = Eigen::RowVectorXd::Zero(1);
  const MatrixXd g = detail::eval_deriv(model, state.to_vector(), in, nullptr);
  return g.col(0).tail<3>();
}

std::pair<Vec3, Vec3> calibrate_output_norm(const NetParams& net, Rng& rng, int samples) {
  if (net.shape.in != 8 || net.shape.out != 3) throw InvalidArgument("calibration: dynamics net must be 8 -> 3");
  if (samples < 2) throw InvalidArgument("calibration: need >= 2 samples");
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd z(8, samples);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < 8; ++i) z(i, j) = normal(rng);
  }
  const MatrixXd y = forward(net, z);
  const Vec3 mean = y.rowwise().mean();
  const Vec3 sd = ((y.colwise() - mean).array().square().rowwise().sum() / static_cast<double>(samples)).sqrt();
  for (int c = 0; c < 3; ++c) {
    if (!(sd[c] >= 1e-12)) {
      throw InvalidArgument("calibration: degenerate output std in channel " + std::to_string(c));
    }
  }
  return {mean, sd};
}

Eigen::VectorXd encode_init_window(const TrajectoryRecord& w, int k_init) {
  if (k_init < 1 || w.size() < static_cast<std::size_t>(k_init)) {
    throw InvalidArgument("initial-state window shorter than k_init = " + std::to_string(k_init));
  }
  const ShipState& y0 = w.obs[0];
  const double c = std::cos(y0.pose.psi), s = std::sin(y0.pose.psi);
  VectorXd e(6 * k_init);
  for (int k = 0; k < k_init; ++k) {
    const ShipState& y = w.obs[static_cast<std::size_t>(k)];
    const double dx = y.pose.x0 - y0.pose.x0, dy = y.pose.y0 - y0.pose.y0;
    e[6 * k + 0] = c * dx + s * dy;
    e[6 * k + 1] = -s * dx + c * dy;
    e[6 * k + 2] = wrap_angle(y.pose.psi - y0.pose.psi);
    e[6 * k + 3] = y.vel.u;
    e[6 * k + 4] = y.vel.vm;
    e[6 * k + 5] = y.vel.r;
  }
  return e;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> encoding_stats(const std::vector<Window>& windows, int k_init) {
  if (windows.empty()) throw InvalidArgument("encoding stats: no windows");
  const Eigen::Index n = 6 * k_init;
  VectorXd mean = VectorXd::Zero(n), sd = VectorXd::Zero(n);
  std::vector<VectorXd> es;
  es.reserve(windows.size());
  for (const Window& w : windows) es.push_back(encode_init_window(w.rec, k_init));
  for (const auto& e : es) mean += e;
  mean /= static_cast<double>(es.size());
  for (const auto& e : es) sd += (e - mean).cwiseAbs2();
  sd = (sd / static_cast<double>(es.size())).cwiseSqrt();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(sd[i] >= 1e-12)) sd[i] = 1.0;
  }
  return {mean, sd};
}

namespace {

MatrixXd encode_batch(const InitStateNet& init, const std::vector<const TrajectoryRecord*>& batch) {
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  MatrixXd z(6 * init.k_init, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    z.col(j) = (encode_init_window(*batch[static_cast<std::size_t>(j)], init.k_init) - init.enc_mean)
                   .cwiseQuotient(init.enc_std);
  }
  return z;
}

}  // namespace

ShipState estimate_initial_state(const InitStateNet& init, const TrajectoryRecord& window) {
  if (window.size() == 0) throw InvalidArgument("initial-state estimate: empty window");
  if (!init.enabled) return window.obs[0];
  const std::vector<const TrajectoryRecord*> one{&window};
  const MatrixXd d = forward(init.net, encode_batch(init, one));
  return ShipState::from_vector(window.obs[0].to_vector() + init.out_scale.cwiseProduct(d.col(0)));
}

Eigen::MatrixXd model_step_batch(const DynamicsModel& model, const Eigen::MatrixXd& x, const Eigen::Matrix3Xd& act,
                                 const Eigen::RowVectorXd& wind_speed, const Eigen::RowVectorXd& wind_dir, double dt,
                                 Integrator scheme) {
  detail::StepInputs in{act, wind_speed, wind_dir, Eigen::RowVectorXd::Constant(x.cols(), dt)};
  return detail::step_batch(model, x, in, scheme, nullptr);
}

ShipState model_step(const DynamicsModel& model, const ShipState& x, const ActuatorState& act, const TrueWind& wind,
                     double dt, Integrator scheme) {
  const MatrixXd next = model_step_batch(model, x.to_vector(), act.to_vector(),
                                         Eigen::RowVectorXd::Constant(1, wind.speed),
                                         Eigen::RowVectorXd::Constant(1, wind.direction), dt, scheme);
  return ShipState::from_vector(next.col(0));
}

std::vector<ShipState> rollout(const DynamicsModel& model, const ShipState& x0, const TrajectoryRecord& window,
                               Integrator scheme) {
  window.validate();
  std::vector<ShipState> xs;
  xs.reserve(window.size());
  xs.push_back(x0);
  for (std::size_t k = 0; k + 1 < window.size(); ++k) {
    const ShipState next = model_step(model, xs.back(), window.act[k], window.wind[k], window.t[k + 1] - window.t[k],
                                      scheme);
    if (!next.finite()) throw DivergedError("rollout produced a non-finite state", k + 1);
    xs.push_back(next);
  }
  return xs;
}

// ---------------------------------------------------------------------------

namespace {

// Weighted residual y - x with a wrapped heading channel.
Vec6 residual(const ShipState& y, const Vec6& x, const LikelihoodWeights& lw) {
  Vec6 e = y.to_vector() - x;
  if (lw.w[2] > 0.0) e[2] = wrap_angle(e[2]);
  return e;
}

}  // namespace

LossResult nll_loss(const Member& member, const std::vector<const TrajectoryRecord*>& batch,
                    const LikelihoodWeights& weights, Integrator scheme, bool want_grad) {
  if (batch.empty()) throw InvalidArgument("nll_loss: empty batch");
  weights.validate();
  const std::size_t kk = batch[0]->size();
  if (kk == 0) throw InvalidArgument("nll_loss: empty window");
  for (const TrajectoryRecord* r : batch) {
    if (r->size() != kk) throw InvalidArgument("nll_loss: windows in a batch must share one length");
  }
  const auto& dyn = member.dyn;
  const auto& init = member.init;
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Map<const Vec6> wv(weights.w.data());

  MatrixXd x(6, n);
  for (Eigen::Index j = 0; j < n; ++j) x.col(j) = batch[static_cast<std::size_t>(j)]->obs[0].to_vector();
  Tape init_tape;
  if (init.enabled) {
    x += (forward(init.net, encode_batch(init, batch), want_grad ? &init_tape : nullptr).array().colwise() *
          init.out_scale.array())
             .matrix();
  }
  if (!x.allFinite()) throw DivergedError("initial-state estimate is non-finite", 0);

  auto inputs_at = [&](std::size_t k) {
    detail::StepInputs in;
    in.act.resize(3, n);
    in.ws.resize(n);
    in.wd.resize(n);
    in.dt.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const TrajectoryRecord& r = *batch[static_cast<std::size_t>(j)];
      in.act.col(j) = r.act[k].to_vector();
      in.ws[j] = r.wind[k].speed;
      in.wd[j] = r.wind[k].direction;
      in.dt[j] = r.t[k + 1] - r.t[k];
    }
    return in;
  };

  std::vector<MatrixXd> xs;
  xs.reserve(kk);
  xs.push_back(x);
  std::vector<detail::StepRecord> recs(want_grad ? kk - 1 : 0);
  for (std::size_t k = 0; k + 1 < kk; ++k) {
    const detail::StepInputs in = inputs_at(k);
    xs.push_back(detail::step_batch(dyn, xs.back(), in, scheme, want_grad ? &recs[k] : nullptr));
    if (!xs.back().allFinite()) throw DivergedError("training rollout produced a non-finite state", k + 1);
  }

  LossResult res;
  res.samples = kk * batch.size();
  auto loss_grad_at = [&](std::size_t k, MatrixXd* dldx) {
    double sum = 0.0;
    if (dldx) dldx->resize(6, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Vec6 e = residual(batch[static_cast<std::size_t>(j)]->obs[k], xs[k].col(j), weights);
      sum += (wv.array() * e.array().square()).sum();
      if (dldx) dldx->col(j) = -2.0 * wv.cwiseProduct(e);
    }
    return sum;
  };
  if (!want_grad) {
    for (std::size_t k = 0; k < kk; ++k) res.loss += loss_grad_at(k, nullptr);
    return res;
  }

  res.grad_dyn = VectorXd::Zero(dyn.net.theta.size());
  MatrixXd lam;
  res.loss += loss_grad_at(kk - 1, &lam);
  for (std::size_t k = kk - 1; k-- > 0;) {
    lam = detail::step_vjp(dyn, recs[k], inputs_at(k), lam, res.grad_dyn);
    MatrixXd dl;
    res.loss += loss_grad_at(k, &dl);
    lam += dl;
  }
  if (init.enabled) {
    res.grad_init = VectorXd::Zero(init.net.theta.size());
    backward(init.net, init_tape, (lam.array().colwise() * init.out_scale.array()).matrix(), res.grad_init);
  }
  return res;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (k < 2) throw ConfigError("train.K must be >= 2");
  if (k_init < 1 || k_init > k) throw ConfigError("train.K_init must be in [1, K]");
  if (stride < 1) throw ConfigError("train.stride must be >= 1");
  NetShape{8, hidden_layers, width, 3}.validate();
  NetShape{6 * k_init, init_hidden_layers, init_width, 6}.validate();
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("train.lr must be finite and >= 0");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (!std::isfinite(clip_norm)) throw ConfigError("train.clip_norm must be finite");
  if (calib_samples < 2) throw ConfigError("train.calib_samples must be >= 2");
  if (max_failed_batches < 0) throw ConfigError("train.max_failed_batches must be >= 0");
  weights();
}

TrainingData prepare_training(const Dataset& train, const TrainConfig& cfg) {
  cfg.validate();
  TrainingData d;
  d.stats = compute_stats(train);
  WindowSet ws = window(train, static_cast<std::size_t>(cfg.k), static_cast<std::size_t>(cfg.stride));
  if (ws.windows.empty()) throw InvalidArgument("training set has no window of length K = " + std::to_string(cfg.k));
  d.windows = std::move(ws.windows);
  std::tie(d.enc_mean, d.enc_std) = encoding_stats(d.windows, cfg.k_init);
  return d;
}

Member init_member(const TrainingData& data, const TrainConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Member m;
  m.seed = seed;
  Rng r_dyn(derive_seed(seed, {stream::kInitDynamics}));
  Rng r_init(derive_seed(seed, {stream::kInitState}));
  Rng r_cal(derive_seed(seed, {stream::kCalibration}));
  m.dyn.net = init_params(NetShape{8, cfg.hidden_layers, cfg.width, 3}, r_dyn);
  m.dyn.stats = data.stats;
  std::tie(m.dyn.norm_mean, m.dyn.norm_std) = calibrate_output_norm(m.dyn.net, r_cal, cfg.calib_samples);

  m.init.k_init = cfg.k_init;
  m.init.enabled = cfg.use_init_net;
  m.init.enc_mean = data.enc_mean;
  m.init.enc_std = data.enc_std;
  for (int c = 0; c < 6; ++c) m.init.out_scale[c] = std::isinf(cfg.sigma[c]) ? 0.0 : cfg.sigma[c];
  m.init.net = init_params(NetShape{6 * cfg.k_init, cfg.init_hidden_layers, cfg.init_width, 6}, r_init);
  const int last = m.init.net.shape.layer_count() - 1;
  m.init.net.W(last).setZero();
  m.init.net.b(last).setZero();
  return m;
}

Member train_member(const TrainingData& data, const TrainConfig& cfg, std::uint64_t seed, std::size_t index,
                    const EpochCallback& on_epoch) {
  Member m = init_member(data, cfg, seed);
  const LikelihoodWeights lw = cfg.weights();
  Rng shuffle(derive_seed(seed, {stream::kShuffle}));

  const Eigen::Index n_dyn = m.dyn.net.theta.size();
  const Eigen::Index n_init = m.init.enabled ? m.init.net.theta.size() : 0;
  VectorXd theta(n_dyn + n_init);
  theta.head(n_dyn) = m.dyn.net.theta;
  if (n_init > 0) theta.tail(n_init) = m.init.net.theta;
  AdamState adam(static_cast<std::size_t>(theta.size()), cfg.lr);

  const std::size_t nw = data.windows.size();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch);
  std::vector<std::size_t> order(nw);
  std::vector<const TrajectoryRecord*> batch;
  int failed = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = nw; i > 1; --i) std::swap(order[i - 1], order[shuffle() % i]);
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t b0 = 0; b0 < nw; b0 += bs) {
      batch.clear();
      for (std::size_t i = b0; i < std::min(nw, b0 + bs); ++i) batch.push_back(&data.windows[order[i]].rec);
      LossResult r;
      bool ok = true;
      try {
        r = nll_loss(m, batch, lw, cfg.integrator);
      } catch (const DivergedError&) {
        ok = false;
      }
      const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(r.samples, 1));
      VectorXd g(theta.size());
      if (ok) {
        g.head(n_dyn) = r.grad_dyn * norm;
        if (n_init > 0) g.tail(n_init) = r.grad_init * norm;
        ok = std::isfinite(r.loss) && g.allFinite();
      }
      if (!ok) {
        if (++failed > cfg.max_failed_batches) {
          throw TrainingError("loss stayed non-finite for " + std::to_string(failed) + " consecutive batches (epoch " +
                                  std::to_string(epoch) + ")",
                              index);
        }
        continue;
      }
      failed = 0;
      const double gn = g.norm();
      if (cfg.clip_norm > 0.0 && gn > cfg.clip_norm) g *= cfg.clip_norm / gn;
      adam_step(adam, theta, g);
      m.dyn.net.theta = theta.head(n_dyn);
      if (n_init > 0) m.init.net.theta = theta.tail(n_init);
      sum += r.loss * norm;
      ++used;
    }
    const double mean = used > 0 ? sum / static_cast<double>(used) : std::nan("");
    m.loss_history.push_back(mean);
    if (on_epoch) on_epoch(index, epoch, mean);
  }
  return m;
}

std::uint64_t member_seed(std::uint64_t base_seed, std::size_t index) {
  return derive_seed(base_seed, {stream::kMember, static_cast<std::uint64_t>(index)});
}

EnsembleModel train_ensemble(const TrainingData& data, const TrainConfig& cfg, std::size_t m, std::uint64_t base_seed,
                             std::size_t jobs, const EpochCallback& on_epoch) {
  if (m < 1) throw ConfigError("ensemble size must be >= 1");
  cfg.validate();
  EnsembleModel e;
  e.config = cfg;
  e.base_seed = base_seed;
  e.members.resize(m);
  parallel_for(m, jobs, [&](std::size_t i) {
    try {
      e.members[i] = train_member(data, cfg, member_seed(base_seed, i), i, on_epoch);
    } catch (const TrainingError&) {
      throw;
    } catch (const Error& err) {
      throw TrainingError(err.what(), i);
    }
  });
  return e;
}

EnsembleModel EnsembleModel::prefix(std::size_t m) const {
  if (m < 1 || m > members.size()) throw InvalidArgument("ensemble prefix size out of range");
  EnsembleModel e = *this;
  e.members.resize(m);
  return e;
}

double fitting_metric(const Member& member, const std::vector<Window>& windows, const LikelihoodWeights& weights,
                      Integrator scheme) {
  weights.validate();
  if (windows.empty()) throw InvalidArgument("fitting metric: no windows");
  const Eigen::Map<const Vec6> wv(weights.w.data());
  double sum = 0.0;
  std::size_t count = 0;
  for (const Window& w : windows) {
    const auto& ref = w.rec.has_truth() ? w.rec.truth : w.rec.obs;
    std::vector<ShipState> xs;
    try {
      xs = rollout(member.dyn, estimate_initial_state(member.init, w.rec), w.rec, scheme);
    } catch (const DivergedError&) {
      return std::numeric_limits<double>::infinity();
    }
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const Vec6 e = residual(ref[k], xs[k].to_vector(), weights);
      sum += (wv.array() * e.array().square()).sum();
    }
    count += xs.size();
  }
  return sum / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// Artifact I/O.

namespace {

template <class V>
json to_json_vec(const V& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

template <class V>
void from_json_vec(const json& a, V& v, Eigen::Index n, const std::string& what) {
  if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != n) throw ConfigError("ensemble manifest: bad '" + what + "'");
  v.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = a[static_cast<std::size_t>(i)].get<double>();
}

json config_json(const TrainConfig& c) {
  json s = json::array();
  for (double v : c.sigma) s.push_back(std::isinf(v) ? json(nullptr) : json(v));
  return {{"K", c.k},
          {"K_init", c.k_init},
          {"stride", c.stride},
          {"hidden_layers", c.hidden_layers},
          {"width", c.width},
          {"init_hidden_layers", c.init_hidden_layers},
          {"init_width", c.init_width},
          {"lr", c.lr},
          {"batch", c.batch},
          {"epochs", c.epochs},
          {"integrator", to_string(c.integrator)},
          {"clip_norm", c.clip_norm},
          {"use_init_net", c.use_init_net},
          {"calib_samples", c.calib_samples},
          {"max_failed_batches", c.max_failed_batches},
          {"sigma", s}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.k = j.at("K").get<int>();
  c.k_init = j.at("K_init").get<int>();
  c.stride = j.at("stride").get<int>();
  c.hidden_layers = j.at("hidden_layers").get<int>();
  c.width = j.at("width").get<int>();
  c.init_hidden_layers = j.at("init_hidden_layers").get<int>();
  c.init_width = j.at("init_width").get<int>();
  c.lr = j.at("lr").get<double>();
  c.batch = j.at("batch").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.integrator = parse_integrator(j.at("integrator").get<std::string>());
  c.clip_norm = j.at("clip_norm").get<double>();
  c.use_init_net = j.at("use_init_net").get<bool>();
  c.calib_samples = j.at("calib_samples").get<int>();
  c.max_failed_batches = j.at("max_failed_batches").get<int>();
  const json& s = j.at("sigma");
  if (!s.is_array() || s.size() != 6) throw ConfigError("ensemble manifest: sigma must have 6 entries");
  for (std::size_t i = 0; i < 6; ++i) c.sigma[i] = s[i].is_null() ? NoiseConfig::kInf : s[i].get<double>();
  return c;
}

std::string member_file(std::size_t i, const char* kind) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "member_%03zu_%s.txt", i, kind);
  return buf;
}

}  // namespace

void EnsembleModel::save(const std::filesystem::path& dir) const {
  if (members.empty()) throw InvalidArgument("cannot save an empty ensemble");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  const Member& m0 = members[0];
  json j;
  j["format"] = kEnsembleFormat;
  j["base_seed"] = base_seed;
  j["config"] = config_json(config);
  j["stats"] = {{"in_mean", to_json_vec(m0.dyn.stats.in_mean)},
                {"in_std", to_json_vec(m0.dyn.stats.in_std)},
                {"out_mean", to_json_vec(m0.dyn.stats.out_mean)},
                {"out_std", to_json_vec(m0.dyn.stats.out_std)}};
  j["init_encoding"] = {{"k_init", m0.init.k_init},
                        {"enabled", m0.init.enabled},
                        {"mean", to_json_vec(m0.init.enc_mean)},
                        {"std", to_json_vec(m0.init.enc_std)},
                        {"out_scale", to_json_vec(m0.init.out_scale)}};
  json arr = json::array();
  for (std::size_t i = 0; i < members.size(); ++i) {
    const Member& m = members[i];
    save_params(dir / member_file(i, "dyn"), m.dyn.net);
    save_params(dir / member_file(i, "init"), m.init.net);
    arr.push_back({{"seed", m.seed},
                   {"dynamics", member_file(i, "dyn")},
                   {"init", member_file(i, "init")},
                   {"norm_mean", to_json_vec(m.dyn.norm_mean)},
                   {"norm_std", to_json_vec(m.dyn.norm_std)}});
  }
  j["members"] = arr;
  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write '" + (dir / "manifest.json").string() + "'");
    out << j.dump(2) << '\n';
  }
  std::ofstream lh(dir / "loss_history.csv", std::ios::binary);
  if (!lh) throw IoError("cannot write '" + (dir / "loss_history.csv").string() + "'");
  lh << "member,epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (std::size_t e = 0; e < members[i].loss_history.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.17g\n", i, e, members[i].loss_history[e]);
      lh << buf;
    }
  }
}

EnsembleModel EnsembleModel::load(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read ensemble manifest '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kEnsembleFormat) {
      throw ConfigError("'" + path.string() + "': unsupported ensemble format");
    }
    EnsembleModel e;
    e.base_seed = j.at("base_seed").get<std::uint64_t>();
    e.config = config_from_json(j.at("config"));
    StandardizationStats st;
    const json& js = j.at("stats");
    from_json_vec(js.at("in_mean"), st.in_mean, 8, "in_mean");
    from_json_vec(js.at("in_std"), st.in_std, 8, "in_std");
    from_json_vec(js.at("out_mean"), st.out_mean, 3, "out_mean");
    from_json_vec(js.at("out_std"), st.out_std, 3, "out_std");
    const json& ji = j.at("init_encoding");
    const int k_init = ji.at("k_init").get<int>();
    VectorXd enc_mean, enc_std;
    from_json_vec(ji.at("mean"), enc_mean, 6 * k_init, "init_encoding.mean");
    from_json_vec(ji.at("std"), enc_std, 6 * k_init, "init_encoding.std");
    const bool enabled = ji.at("enabled").get<bool>();
    Vec6 out_scale;
    from_json_vec(ji.at("out_scale"), out_scale, 6, "init_encoding.out_scale");
    for (const json& jm : j.at("members")) {
      Member m;
      m.seed = jm.at("seed").get<std::uint64_t>();
      m.dyn.net = load_params(dir / jm.at("dynamics").get<std::string>());
      m.dyn.stats = st;
      from_json_vec(jm.at("norm_mean"), m.dyn.norm_mean, 3, "norm_mean");
      from_json_vec(jm.at("norm_std"), m.dyn.norm_std, 3, "norm_std");
      m.init.net = load_params(dir / jm.at("init").get<std::string>());
      m.init.k_init = k_init;
      m.init.enabled = enabled;
      m.init.enc_mean = enc_mean;
      m.init.enc_std = enc_std;
      m.init.out_scale = out_scale;
      if (m.dyn.net.shape.in != 8 || m.dyn.net.shape.out != 3 || m.init.net.shape.in != 6 * k_init ||
          m.init.net.shape.out != 6) {
        throw ConfigError("'" + path.string() + "': member network shapes are inconsistent");
      }
      e.members.push_back(std::move(m));
    }
    if (e.members.empty()) throw ConfigError("'" + path.string() + "': ensemble has no members");
    return e;
  } catch (const json::exception& ex) {
    throw ConfigError("'" + path.string() + "': " + ex.what());
  }
}

}  // namespace shipens
