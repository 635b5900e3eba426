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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "shipens/error.hpp"
#include "shipens/sysid.hpp"

using namespace shipens;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Dataset small_dataset(double duration = 40.0) {
  GenConfig g;
  g.duration = duration;
  Dataset d;
  d.split = "train";
  d.records.push_back(gen_random(g, 11));
  d.records.push_back(gen_random(g, 12));
  d.records.push_back(gen_zigzag(deg2rad(20), deg2rad(20), g, 13));
  return d;
}

TrainConfig toy_config() {
  TrainConfig c;
  c.k = 5;
  c.k_init = 2;
  c.stride = 7;
  c.hidden_layers = 1;
  c.width = 4;
  c.init_hidden_layers = 1;
  c.init_width = 3;
  c.lr = 1e-2;
  c.batch = 4;
  c.epochs = 5;
  c.calib_samples = 500;
  return c;
}

double rel_err(const VectorXd& a, const VectorXd& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

std::vector<const TrajectoryRecord*> ptrs(const std::vector<Window>& ws) {
  std::vector<const TrajectoryRecord*> out;
  for (const auto& w : ws) out.push_back(&w.rec);
  return out;
}

// Dynamics net whose raw output is the constant b.
DynamicsModel constant_model(const Vec3& a) {
  DynamicsModel m;
  m.net = NetParams(NetShape{8, 1, 2, 3});
  m.net.b(1) = a;
  return m;
}

}  // namespace

TEST_CASE("likelihood weights") {
  const auto lw = LikelihoodWeights::from_sigma({NoiseConfig::kInf, NoiseConfig::kInf, NoiseConfig::kInf, 0.1, 0.5, 2.0});
  CHECK(lw.w[0] == 0.0);
  CHECK(std::abs(lw.w[3] - 100.0) < 1e-9);
  CHECK(std::abs(lw.w[5] - 0.25) < 1e-15);
  CHECK_THROWS_AS(LikelihoodWeights::from_sigma({1, 1, 1, 0, 1, 1}), ConfigError);
  const double inf = NoiseConfig::kInf;
  CHECK_THROWS_AS(LikelihoodWeights::from_sigma({inf, inf, inf, inf, inf, inf}), ConfigError);
}

TEST_CASE("model_accel") {
  Rng rng(4);
  DynamicsModel m;
  m.net = init_params(NetShape{8, 2, 5, 3}, rng);
  m.stats.in_mean << 0.3, 0.0, 0.01, 0.1, -0.1, 2.0, -0.3, 0.2;
  m.stats.in_std << 0.2, 0.05, 0.02, 0.3, 0.3, 8.0, 1.0, 1.0;
  m.stats.out_mean << 0.01, -0.002, 0.0003;
  m.stats.out_std << 0.02, 0.01, 0.001;
  std::tie(m.norm_mean, m.norm_std) = calibrate_output_norm(m.net, rng, 2000);

  ShipState x{{1.0, -2.0, 0.4}, {0.4, 0.02, 0.01}};
  const ActuatorState a{0.1, -0.2, 5.0};
  const TrueWind w{1.5, 2.0};
  const Vec3 base = model_accel(m, x, a, w);

  SUBCASE("pose translation and joint 2pi shift") {
    ShipState moved = x;
    moved.pose.x0 += 123.0;
    moved.pose.y0 -= 45.0;
    CHECK((model_accel(m, moved, a, w) - base).norm() == 0.0);
    ShipState turned = x;
    turned.pose.psi += 2 * kPi;
    CHECK((model_accel(m, turned, a, TrueWind{w.speed, w.direction + 2 * kPi}) - base).norm() < 1e-12);
  }

  SUBCASE("net output at norm_mean gives the training mean") {
    DynamicsModel c = constant_model(Vec3(0.7, -0.2, 0.05));
    c.norm_mean = Vec3(0.7, -0.2, 0.05);
    c.norm_std = Vec3(3.0, 3.0, 3.0);
    c.stats = m.stats;
    CHECK((model_accel(c, x, a, w) - m.stats.out_mean).norm() == 0.0);
  }
}

TEST_CASE("calibrate_output_norm") {
  NetParams zero(NetShape{8, 1, 4, 3});
  zero.b(1) << 1.0, 2.0, 3.0;
  Rng r0(1);
  CHECK_THROWS_AS(calibrate_output_norm(zero, r0), InvalidArgument);

  Rng ri(2);
  const auto net = init_params(NetShape{8, 2, 16, 3}, ri);
  Rng a(9), b(9);
  const auto ca = calibrate_output_norm(net, a);
  const auto cb = calibrate_output_norm(net, b);
  CHECK(ca.first == cb.first);
  CHECK(ca.second == cb.second);

  // A fresh sample standardized with the calibration has mean ~0, std ~1.
  Rng fresh(10);
  const auto cf = calibrate_output_norm(net, fresh);
  const Vec3 z_mean = (cf.first - ca.first).cwiseQuotient(ca.second);
  const Vec3 z_std = cf.second.cwiseQuotient(ca.second);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(z_mean[c]) < 3.0 / std::sqrt(10000.0));
    CHECK(std::abs(z_std[c] - 1.0) < 3.0 * std::sqrt(2.0) / std::sqrt(10000.0));
  }
}

TEST_CASE("estimate_initial_state") {
  const Dataset d = small_dataset();
  TrainConfig cfg = toy_config();
  cfg.k = 6;
  cfg.k_init = 3;
  const TrainingData td = prepare_training(d, cfg);
  Member m = init_member(td, cfg, 5);
  const TrajectoryRecord& w = td.windows[1].rec;

  // Zero-initialized output layer.
  const ShipState x0 = estimate_initial_state(m.init, w);
  CHECK(x0.to_vector() == w.obs[0].to_vector());

  Rng rng(3);
  m.init.net = init_params(m.init.net.shape, rng);
  const ShipState e = estimate_initial_state(m.init, w);
  CHECK((e.to_vector() - w.obs[0].to_vector()).norm() > 0.0);

  TrajectoryRecord shifted = w;
  for (auto& o : shifted.obs) {
    o.pose.x0 += 50.0;
    o.pose.y0 -= 20.0;
  }
  const ShipState es = estimate_initial_state(m.init, shifted);
  CHECK(std::abs(es.pose.x0 - e.pose.x0 - 50.0) < 1e-9);
  CHECK(std::abs(es.pose.y0 - e.pose.y0 + 20.0) < 1e-9);
  CHECK(std::abs(es.vel.u - e.vel.u) < 1e-12);

  m.init.enabled = false;
  CHECK(estimate_initial_state(m.init, w).to_vector() == w.obs[0].to_vector());
  CHECK_THROWS_AS(encode_init_window(w.slice(0, 2), 3), InvalidArgument);
}

TEST_CASE("rollout") {
  TrajectoryRecord w;
  for (int k = 0; k < 10; ++k) {
    w.t.push_back(k * 1.0);
    w.obs.push_back({});
    w.act.push_back({});
    w.wind.push_back({});
  }

  SUBCASE("zero dynamics keeps the pose") {
    const DynamicsModel z = constant_model(Vec3::Zero());
    const ShipState x0{{3.0, 4.0, 0.5}, {0.0, 0.0, 0.0}};
    for (Integrator s : {Integrator::kEuler, Integrator::kRk4}) {
      for (const auto& x : rollout(z, x0, w, s)) CHECK(x.to_vector() == x0.to_vector());
    }
  }

  SUBCASE("constant surge acceleration") {
    const DynamicsModel c = constant_model(Vec3(0.25, 0.0, 0.0));
    const ShipState x0{{0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}};
    const auto xs = rollout(c, x0, w, Integrator::kEuler);
    for (std::size_t k = 0; k < xs.size(); ++k) CHECK(xs[k].vel.u == 0.5 + 0.25 * w.t[k]);
  }

  SUBCASE("matches a step-by-step re-implementation") {
    const Dataset d = small_dataset();
    TrainConfig cfg = toy_config();
    cfg.k = 20;
    const TrainingData td = prepare_training(d, cfg);
    const Member m = init_member(td, cfg, 8);
    const TrajectoryRecord& r = td.windows[0].rec;
    const auto xs = rollout(m.dyn, r.obs[0], r, Integrator::kEuler);
    Vec6 x = r.obs[0].to_vector();
    for (std::size_t k = 0; k + 1 < r.size(); ++k) {
      const ShipState s = ShipState::from_vector(x);
      Vec6 dx;
      dx << pose_rate(s), model_accel(m.dyn, s, r.act[k], r.wind[k]);
      x += (r.t[k + 1] - r.t[k]) * dx;
      CHECK((xs[k + 1].to_vector() - x).norm() <= 1e-12 * (1.0 + x.norm()));
    }
  }

  SUBCASE("divergence") {
    DynamicsModel c = constant_model(Vec3(1e308, 0.0, 0.0));
    c.stats.out_std = Vec3(1e10, 1, 1);
    const ShipState x0{{0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}};
    CHECK_THROWS_AS(rollout(c, x0, w, Integrator::kEuler), DivergedError);
  }
}

TEST_CASE("nll_loss gradient matches finite differences") {
  const Dataset d = small_dataset();
  TrainConfig cfg = toy_config();
  cfg.sigma = {2.0, 2.0, 0.5, 0.05, 0.05, 0.01};
  const TrainingData td = prepare_training(d, cfg);
  Member m = init_member(td, cfg, 21);
  Rng rng(22);
  const int last = m.init.net.shape.layer_count() - 1;
  std::uniform_real_distribution<double> uni(-0.05, 0.05);
  for (auto& v : m.init.net.W(last).reshaped()) v = uni(rng);
  for (auto& v : m.init.net.b(last)) v = uni(rng);

  std::vector<const TrajectoryRecord*> batch;
  for (std::size_t i = 0; i < td.windows.size(); i += 3) batch.push_back(&td.windows[i].rec);
  REQUIRE(batch.size() >= 3);
  const auto lw = cfg.weights();

  for (Integrator scheme : {Integrator::kEuler, Integrator::kRk4}) {
    const LossResult r = nll_loss(m, batch, lw, scheme);
    CHECK(r.samples == batch.size() * 5);
    CHECK(std::abs(nll_loss(m, batch, lw, scheme, false).loss - r.loss) <= 1e-12 * r.loss);

    const double h = 1e-6;
    auto fd = [&](NetParams& net) {
      VectorXd g(net.theta.size());
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double keep = net.theta[i];
        const double step = h * std::max(1.0, std::abs(keep));
        net.theta[i] = keep + step;
        const double lp = nll_loss(m, batch, lw, scheme, false).loss;
        net.theta[i] = keep - step;
        const double lm = nll_loss(m, batch, lw, scheme, false).loss;
        net.theta[i] = keep;
        g[i] = (lp - lm) / (2 * step);
      }
      return g;
    };
    CHECK(rel_err(fd(m.dyn.net), r.grad_dyn) < 1e-5);
    CHECK(rel_err(fd(m.init.net), r.grad_init) < 1e-5);
  }
}

TEST_CASE("nll_loss weighting") {
  const Dataset d = small_dataset();
  TrainConfig cfg = toy_config();
  const TrainingData td = prepare_training(d, cfg);
  const Member m = init_member(td, cfg, 3);
  const auto batch = ptrs(td.windows);

  // One weighted channel equals an independent SSE on that channel.
  LikelihoodWeights only_u;
  only_u.w = {0, 0, 0, 1, 0, 0};
  double sse = 0.0;
  for (const auto* r : batch) {
    const auto xs = rollout(m.dyn, r->obs[0], *r, Integrator::kEuler);
    for (std::size_t k = 0; k < xs.size(); ++k) sse += std::pow(r->obs[k].vel.u - xs[k].vel.u, 2);
  }
  const double lu = nll_loss(m, batch, only_u, Integrator::kEuler, false).loss;
  CHECK(std::abs(lu - sse) <= 1e-10 * sse);

  // Doubling sigma_u quarters its contribution.
  auto sig = cfg.sigma;
  LikelihoodWeights lw1 = LikelihoodWeights::from_sigma(sig);
  sig[3] *= 2;
  LikelihoodWeights lw2 = LikelihoodWeights::from_sigma(sig);
  const double l1 = nll_loss(m, batch, lw1, Integrator::kEuler, false).loss;
  const double l2 = nll_loss(m, batch, lw2, Integrator::kEuler, false).loss;
  const double cu = lu * lw1.w[3];
  CHECK(std::abs((l1 - l2) - 0.75 * cu) <= 1e-9 * l1);

  // A model that generated the data exactly has zero velocity loss.
  std::vector<TrajectoryRecord> perfect;
  for (const auto* r : batch) {
    TrajectoryRecord p = *r;
    p.obs = rollout(m.dyn, r->obs[0], *r, Integrator::kEuler);
    perfect.push_back(p);
  }
  std::vector<const TrajectoryRecord*> pb;
  for (const auto& p : perfect) pb.push_back(&p);
  Member off = m;
  off.init.enabled = false;
  CHECK(nll_loss(off, pb, cfg.weights(), Integrator::kEuler, false).loss == 0.0);

  std::vector<const TrajectoryRecord*> mixed{batch[0], &td.windows[0].rec};
  TrajectoryRecord short_w = batch[0]->slice(0, 4);
  mixed[1] = &short_w;
  CHECK_THROWS_AS(nll_loss(m, mixed, cfg.weights(), Integrator::kEuler), InvalidArgument);
  CHECK_THROWS_AS(nll_loss(m, {}, cfg.weights(), Integrator::kEuler), InvalidArgument);
}

TEST_CASE("train_member") {
  const Dataset d = small_dataset(80.0);
  TrainConfig cfg = toy_config();
  cfg.k = 10;
  cfg.k_init = 3;
  cfg.stride = 3;
  cfg.width = 8;
  cfg.epochs = 40;
  cfg.lr = 5e-3;
  const TrainingData td = prepare_training(d, cfg);

  const Member a = train_member(td, cfg, 100);
  REQUIRE(a.loss_history.size() == 40);
  CHECK(a.loss_history.back() < a.loss_history.front());
  const Member b = train_member(td, cfg, 100);
  CHECK(a.dyn.net.theta == b.dyn.net.theta);
  CHECK(a.init.net.theta == b.init.net.theta);
  const Member c = train_member(td, cfg, 101);
  CHECK((a.dyn.net.theta - c.dyn.net.theta).cwiseAbs().maxCoeff() > 0.0);

  TrainConfig frozen = cfg;
  frozen.lr = 0.0;
  frozen.epochs = 3;
  const Member f = train_member(td, frozen, 100);
  const Member f0 = init_member(td, frozen, 100);
  CHECK(f.dyn.net.theta == f0.dyn.net.theta);
  CHECK(f.init.net.theta == f0.init.net.theta);

  SUBCASE("fitting metric") {
    const auto lw = cfg.weights();
    const double fm = fitting_metric(a, td.windows, lw, Integrator::kEuler);
    CHECK(fm > 0.0);
    std::vector<Window> rev(td.windows.rbegin(), td.windows.rend());
    CHECK(std::abs(fitting_metric(a, rev, lw, Integrator::kEuler) - fm) <= 1e-12 * fm);

    // Self-generated truth gives 0.
    std::vector<Window> perfect = td.windows;
    Member off = a;
    off.init.enabled = false;
    for (auto& w : perfect) w.rec.truth = rollout(off.dyn, w.rec.obs[0], w.rec, Integrator::kEuler);
    CHECK(fitting_metric(off, perfect, lw, Integrator::kEuler) == 0.0);
  }
}

TEST_CASE("train_ensemble and artifact round trip") {
  const Dataset d = small_dataset();
  TrainConfig cfg = toy_config();
  cfg.epochs = 3;
  const TrainingData td = prepare_training(d, cfg);
  const EnsembleModel e = train_ensemble(td, cfg, 3, 77, 2);
  REQUIRE(e.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      CHECK((e.members[i].dyn.net.theta - e.members[j].dyn.net.theta).cwiseAbs().maxCoeff() > 0.0);
    }
  }
  const EnsembleModel one = train_ensemble(td, cfg, 1, 77, 1);
  const Member direct = train_member(td, cfg, member_seed(77, 0));
  CHECK(one.members[0].dyn.net.theta == direct.dyn.net.theta);
  CHECK(one.members[0].dyn.net.theta == e.members[0].dyn.net.theta);

  const auto dir = std::filesystem::temp_directory_path() / "shipens_test_ensemble";
  std::filesystem::remove_all(dir);
  e.save(dir);
  const EnsembleModel l = EnsembleModel::load(dir);
  REQUIRE(l.size() == 3);
  CHECK(l.base_seed == 77);
  CHECK(l.config.k == cfg.k);
  CHECK(std::isinf(l.config.sigma[0]));
  const TrajectoryRecord& w = td.windows[2].rec;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto xa = rollout(e.members[i].dyn, estimate_initial_state(e.members[i].init, w), w, Integrator::kRk4);
    const auto xb = rollout(l.members[i].dyn, estimate_initial_state(l.members[i].init, w), w, Integrator::kRk4);
    for (std::size_t k = 0; k < xa.size(); ++k) CHECK(xa[k].to_vector() == xb[k].to_vector());
  }
  CHECK_THROWS_AS(EnsembleModel::load(dir / "missing"), IoError);
  CHECK_THROWS_AS(e.prefix(0), InvalidArgument);
  CHECK(e.prefix(2).size() == 2);
}
