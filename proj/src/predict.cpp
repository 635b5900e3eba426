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

#include "shipens/predict.hpp"

#include <Eigen/Cholesky>
#include <cstdio>

#include "shipens/error.hpp"
#include "shipens/parallel.hpp"

namespace shipens {

SamplingScheme parse_scheme(std::string_view name) {
  if (name == "ts1" || name == "TS1") return SamplingScheme::kTS1;
  if (name == "tsinf" || name == "TSinf" || name == "TSInf") return SamplingScheme::kTSInf;
  throw ConfigError("unknown sampling scheme '" + std::string(name) + "' (expected ts1|tsinf)");
}

std::string to_string(SamplingScheme scheme) { return scheme == SamplingScheme::kTS1 ? "ts1" : "tsinf"; }

std::size_t ParticleCloud::diverged() const {
  std::size_t n = 0;
  for (int d : diverged_at) n += d >= 0;
  return n;
}

ParticleCloud propagate(const EnsembleModel& ensemble, SamplingScheme scheme, const ShipState& x0,
                        const TrajectoryRecord& window, std::size_t p, std::uint64_t seed,
                        const PropagateOptions& opts) {
  if (p < 1) throw InvalidArgument("propagate: need at least one particle");
  if (ensemble.size() < 1) throw InvalidArgument("propagate: empty ensemble");
  window.validate();
  if (window.size() < 1) throw InvalidArgument("propagate: empty window");
  if (!x0.finite()) throw InvalidArgument("propagate: non-finite initial state");
  const std::size_t m = ensemble.size();
  const std::size_t kk = window.size();
  const auto np = static_cast<Eigen::Index>(p);
  Rng rng(derive_seed(seed, {stream::kAssignment}));
  auto draw = [&] { return static_cast<int>(rng() % m); };

  ParticleCloud c;
  c.t = window.t;
  c.states.reserve(kk);
  c.states.emplace_back(x0.to_vector().replicate(1, np));
  c.assignment.resize(static_cast<Eigen::Index>(kk - 1), np);
  c.diverged_at.assign(p, -1);

  std::vector<int> mem(p);
  if (scheme == SamplingScheme::kTSInf) {
    const std::size_t strat = opts.stratified ? m * (p / m) : 0;
    for (std::size_t i = 0; i < p; ++i) mem[i] = i < strat ? static_cast<int>(i % m) : draw();
  }
  std::vector<Eigen::Index> cols;
  for (std::size_t k = 0; k + 1 < kk; ++k) {
    if (scheme == SamplingScheme::kTS1) {
      for (auto& v : mem) v = draw();
    }
    const Eigen::MatrixXd& x = c.states.back();
    Eigen::MatrixXd next = x;
    const double dt = window.t[k + 1] - window.t[k];
    for (std::size_t j = 0; j < m; ++j) {
      cols.clear();
      for (std::size_t i = 0; i < p; ++i) {
        if (mem[i] == static_cast<int>(j) && c.diverged_at[i] < 0) cols.push_back(static_cast<Eigen::Index>(i));
      }
      if (cols.empty()) continue;
      const auto n = static_cast<Eigen::Index>(cols.size());
      Eigen::MatrixXd xm(6, n);
      for (Eigen::Index q = 0; q < n; ++q) xm.col(q) = x.col(cols[static_cast<std::size_t>(q)]);
      const Eigen::MatrixXd y = model_step_batch(ensemble.members[j].dyn, xm, window.act[k].to_vector().replicate(1, n),
                                                 Eigen::RowVectorXd::Constant(n, window.wind[k].speed),
                                                 Eigen::RowVectorXd::Constant(n, window.wind[k].direction), dt,
                                                 opts.integrator);
      for (Eigen::Index q = 0; q < n; ++q) {
        const Eigen::Index i = cols[static_cast<std::size_t>(q)];
        if (y.col(q).allFinite()) {
          next.col(i) = y.col(q);
        } else {
          c.diverged_at[static_cast<std::size_t>(i)] = static_cast<int>(k + 1);
        }
      }
    }
    for (std::size_t i = 0; i < p; ++i) c.assignment(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = mem[i];
    c.states.push_back(std::move(next));
  }
  return c;
}

std::vector<StepStats> cloud_stats(const ParticleCloud& cloud) {
  std::vector<StepStats> out;
  out.reserve(cloud.states.size());
  for (const Eigen::MatrixXd& s : cloud.states) {
    const Eigen::Matrix3Xd v = s.bottomRows(3);
    // Shifted by the first particle so identical particles give exact zeros.
    const Vec3 ref = v.col(0);
    const Eigen::Matrix3Xd sh = v.colwise() - ref;
    const Vec3 shift_mean = sh.rowwise().mean();
    const Eigen::Matrix3Xd d = sh.colwise() - shift_mean;
    StepStats st;
    st.mean = ref + shift_mean;
    st.cov = d * d.transpose() / static_cast<double>(v.cols());
    out.push_back(st);
  }
  return out;
}

WindowMetric metrics(const std::vector<StepStats>& stats, const std::vector<ShipState>& truth, double jitter) {
  if (stats.size() != truth.size()) throw InvalidArgument("metrics: cloud and truth lengths differ");
  if (stats.size() < 2) throw InvalidArgument("metrics: need at least two steps");
  if (!(jitter >= 0.0)) throw InvalidArgument("metrics: jitter must be >= 0");
  WindowMetric w;
  for (std::size_t k = 1; k < stats.size(); ++k) {
    const Velocity& v = truth[k].vel;
    const Vec3 d = Vec3(v.u, v.vm, v.r) - stats[k].mean;
    w.eucl += d.squaredNorm();
    const Mat3 s = stats[k].cov + jitter * Mat3::Identity();
    w.maha += d.dot(s.ldlt().solve(d));
    if (stats[k].cov.trace() < 1e-12) ++w.degenerate_steps;
  }
  const double n = static_cast<double>(stats.size() - 1);
  w.eucl /= n;
  w.maha /= n;
  return w;
}

MetricReport aggregate(std::vector<WindowMetric> rows) {
  MetricReport r;
  for (const auto& w : rows) {
    if (!w.ok) {
      ++r.windows_failed;
      continue;
    }
    ++r.windows_ok;
    r.l_eucl += w.eucl;
    r.l_maha += w.maha;
    r.diverged_particles += w.diverged;
    r.degenerate_steps += w.degenerate_steps;
  }
  if (r.windows_ok > 0) {
    r.l_eucl /= static_cast<double>(r.windows_ok);
    r.l_maha /= static_cast<double>(r.windows_ok);
  } else {
    r.l_eucl = r.l_maha = std::nan("");
  }
  r.per_window = std::move(rows);
  return r;
}

PredictionResult predict_windows(const EnsembleModel& ensemble, SamplingScheme scheme, const Dataset& test,
                                 std::uint64_t seed, const PredictOptions& opts) {
  if (opts.k < 2) throw ConfigError("predict.K must be >= 2");
  if (opts.particles < 1) throw ConfigError("predict.particles must be >= 1");
  PredictionResult res;
  res.windows = window(test, opts.k, opts.k).windows;
  const std::size_t n = res.windows.size();
  std::vector<WindowMetric> rows(n);
  if (opts.keep_clouds) res.clouds.resize(n);
  parallel_for(n, opts.jobs, [&](std::size_t i) {
    const Window& w = res.windows[i];
    const auto& ref = w.rec.has_truth() ? w.rec.truth : w.rec.obs;
    WindowMetric& row = rows[i];
    try {
      ParticleCloud c = propagate(ensemble, scheme, ref[0], w.rec, opts.particles,
                                  derive_seed(seed, {stream::kWindow, static_cast<std::uint64_t>(i)}), opts.propagate);
      row = metrics(cloud_stats(c), ref, opts.jitter);
      row.diverged = c.diverged();
      if (opts.keep_clouds) res.clouds[i] = std::move(c);
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    row.window = i;
    row.label = w.rec.label;
    row.start = w.start;
  });
  res.report = aggregate(std::move(rows));
  return res;
}

namespace {

std::FILE* open_out(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  return f;
}

void close_out(std::FILE* f, const std::filesystem::path& path) {
  if (std::fclose(f) != 0) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace

void write_summary_csv(const std::filesystem::path& path, const MetricReport& report) {
  std::FILE* f = open_out(path);
  std::fprintf(f, "%s\n", kSummaryHeader);
  for (const auto& w : report.per_window) {
    std::fprintf(f, "%zu,%s,%zu,%.17g,%.17g,%zu,%zu,%s\n", w.window, w.label.c_str(), w.start, w.eucl, w.maha,
                 w.diverged, w.degenerate_steps, w.ok ? "ok" : "failed");
  }
  close_out(f, path);
}

void write_particles_csv(const std::filesystem::path& path, const PredictionResult& result) {
  std::FILE* f = open_out(path);
  std::fprintf(f, "%s\n", kParticleHeader);
  for (std::size_t i = 0; i < result.clouds.size(); ++i) {
    const ParticleCloud& c = result.clouds[i];
    for (std::size_t k = 0; k < c.states.size(); ++k) {
      for (Eigen::Index p = 0; p < c.states[k].cols(); ++p) {
        const int mem = k == 0 ? -1 : c.assignment(static_cast<Eigen::Index>(k - 1), p);
        const auto x = c.states[k].col(p);
        std::fprintf(f, "%zu,%zu,%.17g,%td,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, k, c.t[k], p, mem, x[0], x[1],
                     x[2], x[3], x[4], x[5]);
      }
    }
  }
  close_out(f, path);
}

}  // namespace shipens
