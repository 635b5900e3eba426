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

#include "shipens/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shipens/error.hpp"

namespace shipens {

namespace fs = std::filesystem;
using nlohmann::json;

void TrajectoryRecord::validate() const {
  const std::size_t n = t.size();
  if (obs.size() != n || act.size() != n || wind.size() != n || (!truth.empty() && truth.size() != n)) {
    throw InvalidArgument("record '" + label + "': channel lengths differ");
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(t[k] > t[k - 1])) throw InvalidArgument("record '" + label + "': times must be strictly increasing");
  }
}

TrajectoryRecord TrajectoryRecord::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw InvalidArgument("record '" + label + "': slice out of range");
  auto cut = [&](const auto& v) {
    using V = std::decay_t<decltype(v)>;
    return V(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(begin + count));
  };
  TrajectoryRecord r;
  r.label = label;
  r.t = cut(t);
  r.obs = cut(obs);
  r.act = cut(act);
  r.wind = cut(wind);
  if (has_truth()) r.truth = cut(truth);
  return r;
}

void GenConfig::validate() const {
  vessel.validate();
  actuator.validate();
  wind.validate();
  noise.validate();
  if (!(dt_sim > 0.0)) throw ConfigError("sim.dt must be > 0");
  if (!(dt_obs > 0.0)) throw ConfigError("sim.dt_obs must be > 0");
  if (!(duration > 0.0)) throw ConfigError("sim.duration must be > 0");
}

namespace {

TrajectoryRecord record_from_sim(const SimResult& res) {
  TrajectoryRecord r;
  r.t = res.t;
  r.truth.reserve(res.states.size());
  for (const ShipState& s : res.states) r.truth.push_back(s.canonical());
  r.obs = r.truth;
  r.act = res.act;
  r.wind = res.wind;
  return r;
}

SimSetup base_setup(const GenConfig& cfg) {
  SimSetup s;
  s.vessel = cfg.vessel;
  s.actuator = cfg.actuator;
  s.wind = cfg.wind;
  s.dt = cfg.dt_sim;
  return s;
}

ShipState initial_state(const GenConfig& cfg) { return {{0.0, 0.0, 0.0}, {cfg.initial_u, 0.0, 0.0}}; }

std::string fmt_deg(double rad) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", rad2deg(rad));
  return buf;
}

}  // namespace

TrajectoryRecord gen_zigzag(double delta, double psi_switch, const GenConfig& cfg, std::uint64_t seed) {
  if (!(delta > 0.0) || !(psi_switch > 0.0)) throw InvalidArgument("zigzag: delta and psi must be > 0");
  SimSetup setup = base_setup(cfg);
  setup.wind_mode = WindMode::kCalm;
  const ShipState x0 = initial_state(cfg);
  double sign = 1.0;
  auto cmd = [&](std::size_t, double, const ShipState& x, const ActuatorState&) {
    const double dev = x.pose.psi - x0.pose.psi;
    if (sign > 0.0 && dev > psi_switch) sign = -1.0;
    else if (sign < 0.0 && dev < -psi_switch) sign = 1.0;
    return ActuatorState{sign * delta, sign * delta, 0.0};
  };
  TrajectoryRecord r = record_from_sim(simulate(x0, cmd, {0.0, 0.0}, setup, cfg.duration, seed));
  r.label = "Z" + fmt_deg(delta) + "/" + fmt_deg(psi_switch);
  return r;
}

TrajectoryRecord gen_turning(double delta, const GenConfig& cfg, std::uint64_t seed) {
  SimSetup setup = base_setup(cfg);
  setup.wind_mode = WindMode::kCalm;
  const ActuatorState c{delta, delta, 0.0};
  auto cmd = [&](std::size_t, double, const ShipState&, const ActuatorState&) { return c; };
  TrajectoryRecord r = record_from_sim(simulate(initial_state(cfg), cmd, {0.0, 0.0}, setup, cfg.duration, seed));
  r.label = "T" + fmt_deg(delta);
  return r;
}

ActuatorState draw_random_command(Rng& rng) {
  std::normal_distribution<double> dp(deg2rad(-80.0), deg2rad(30.0));
  std::normal_distribution<double> ds(deg2rad(80.0), deg2rad(30.0));
  std::normal_distribution<double> nb(0.0, 15.0);
  const double a = dp(rng);
  const double b = ds(rng);
  const double c = nb(rng);
  return {a, b, c};
}

TrajectoryRecord gen_random(const GenConfig& cfg, std::uint64_t seed, double hold) {
  const auto hold_steps = static_cast<std::size_t>(std::llround(hold / cfg.dt_sim));
  if (hold_steps == 0) throw InvalidArgument("random: hold must be >= dt");
  Rng rng(derive_seed(seed, {stream::kCommands}));
  SimSetup setup = base_setup(cfg);
  setup.wind_mode = WindMode::kProcess;
  std::uniform_real_distribution<double> dir(-kPi, kPi);
  setup.wind.mean_direction = dir(rng);
  const TrueWind w0{setup.wind.mean_speed, setup.wind.mean_direction};

  ActuatorState current;
  auto cmd = [&](std::size_t k, double, const ShipState&, const ActuatorState&) {
    if (k % hold_steps == 0) current = draw_random_command(rng).clipped();
    return current;
  };
  TrajectoryRecord r = record_from_sim(simulate(initial_state(cfg), cmd, w0, setup, cfg.duration, seed));
  r.label = "R";
  return r;
}

namespace {

// Index of the last script row at or before t.
std::size_t script_row(const Script& s, double t, std::size_t hint) {
  std::size_t j = hint;
  while (j + 1 < s.t.size() && s.t[j + 1] <= t + 1e-9) ++j;
  return j;
}

}  // namespace

TrajectoryRecord gen_scripted(const Script& script, const GenConfig& cfg, std::uint64_t seed, ScriptMode mode,
                              double duration, const ShipState* initial) {
  if (script.t.empty() || script.cmd.size() != script.t.size() || script.wind.size() != script.t.size()) {
    throw InvalidArgument("script: empty or ragged");
  }
  if (std::abs(script.t.front()) > 1e-9) throw InvalidArgument("script: must start at t = 0");
  const double span = script.t.back() - script.t.front();
  if (duration <= 0.0) duration = span;
  if (span + 1e-9 < duration) throw InvalidArgument("script: shorter than the requested duration");

  SimSetup setup = base_setup(cfg);
  setup.actuator_lag = mode == ScriptMode::kCommand;
  setup.wind_mode = WindMode::kReplay;
  const auto n = static_cast<std::size_t>(std::llround(duration / cfg.dt_sim));
  setup.wind_replay.reserve(n + 1);
  std::vector<std::size_t> rows(n + 1);
  std::size_t j = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    j = script_row(script, static_cast<double>(k) * cfg.dt_sim, j);
    rows[k] = j;
    setup.wind_replay.push_back(script.wind[j]);
  }
  auto cmd = [&](std::size_t k, double, const ShipState&, const ActuatorState&) { return script.cmd[rows[k]]; };
  const ShipState x0 = initial ? *initial : initial_state(cfg);
  TrajectoryRecord r = record_from_sim(simulate(x0, cmd, setup.wind_replay.front(), setup, duration, seed));
  r.label = "B";
  return r;
}

Script script_from_record(const TrajectoryRecord& rec) {
  Script s;
  s.t = rec.t;
  s.cmd = rec.act;
  s.wind = rec.wind;
  return s;
}

Script make_berthing_script(std::uint64_t seed, const GenConfig& cfg) {
  Rng rng(derive_seed(seed, {stream::kCommands}));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto between = [&](double a, double b) { return a + (b - a) * uni(rng); };

  const double total = 150.0 + 10.0 * std::floor(7.0 * uni(rng));
  const double t1 = std::round(total * between(0.30, 0.45));
  const double t2 = std::round(t1 + total * between(0.20, 0.30));

  WindProcessConfig wcfg = cfg.wind;
  wcfg.mean_speed = between(0.5, 2.5);
  wcfg.mean_direction = between(-kPi, kPi);
  Rng wind_rng(derive_seed(seed, {stream::kWind}));
  TrueWind w{wcfg.mean_speed, wcfg.mean_direction};

  Script s;
  ActuatorState knot;
  double thruster_sign = uni(rng) < 0.5 ? -1.0 : 1.0;
  const double knot_period = 10.0;
  for (double t = 0.0; t <= total + 1e-9; t += 1.0) {
    if (std::fmod(t, knot_period) < 1e-9) {
      double spread, steer, n_bt = 0.0;
      if (t < t1) {
        // Approach: rudders open gradually, light steering.
        spread = 60.0 * (t / t1) * between(0.6, 1.0);
        steer = 6.0 * normal(rng);
      } else if (t < t2) {
        // Rudder braking.
        spread = between(55.0, 72.0);
        steer = 8.0 * normal(rng);
        if (uni(rng) < 0.3) n_bt = 10.0 * normal(rng);
      } else {
        // Hover with thruster-assisted rotation.
        spread = between(50.0, 68.0);
        steer = 8.0 * normal(rng);
        if (uni(rng) < 0.3) thruster_sign = -thruster_sign;
        n_bt = thruster_sign * between(10.0, 30.0);
      }
      knot = ActuatorState{deg2rad(-spread + steer), deg2rad(spread + steer), n_bt}.clipped();
    }
    s.t.push_back(t);
    s.cmd.push_back(knot);
    s.wind.push_back(w);
    w = wind_step(w, 1.0, wcfg, wind_rng);
  }
  return s;
}

TrajectoryRecord resample(const TrajectoryRecord& rec, double dt_obs) {
  if (rec.size() < 2) return rec;
  const double dt = rec.t[1] - rec.t[0];
  const double ratio = dt_obs / dt;
  const auto stride = static_cast<std::size_t>(std::llround(ratio));
  if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
    throw InvalidArgument("resample: dt_obs must be an integer multiple of the record step");
  }
  TrajectoryRecord out;
  out.label = rec.label;
  for (std::size_t k = 0; k < rec.size(); k += stride) {
    out.t.push_back(rec.t[k]);
    out.obs.push_back(rec.obs[k]);
    out.act.push_back(rec.act[k]);
    out.wind.push_back(rec.wind[k]);
    if (rec.has_truth()) out.truth.push_back(rec.truth[k]);
  }
  return out;
}

TrajectoryRecord observe(const TrajectoryRecord& clean, const NoiseConfig& noise, std::uint64_t seed) {
  if (!clean.has_truth()) throw InvalidArgument("observe: record has no truth");
  TrajectoryRecord r = clean;
  r.obs = pollute(clean.truth, noise, seed);
  for (ShipState& s : r.obs) s = s.canonical();
  return r;
}

WindowSet window(const Dataset& data, std::size_t k, std::size_t stride) {
  if (k < 2) throw InvalidArgument("window: K must be >= 2");
  if (stride < 1) throw InvalidArgument("window: stride must be >= 1");
  WindowSet out;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const TrajectoryRecord& r = data.records[i];
    if (r.size() < k) {
      ++out.skipped;
      continue;
    }
    for (std::size_t s = 0; s + k <= r.size(); s += stride) out.windows.push_back({r.slice(s, k), i, s});
  }
  return out;
}

Features featurize(const ShipState& state, const ActuatorState& act, const TrueWind& wind) {
  const Vec2 wt = true_wind_body_vector(wind, state.pose.psi);
  Features f;
  f << state.vel.u, state.vel.vm, state.vel.r, act.delta_p, act.delta_s, act.n_bt, wt[0] - state.vel.u,
      wt[1] - state.vel.vm;
  return f;
}

std::vector<Vec3> finite_difference_accel(const TrajectoryRecord& rec) {
  const std::size_t n = rec.size();
  if (n < 2) throw InvalidArgument("finite differences need >= 2 samples");
  auto nu = [&](std::size_t k) {
    const Velocity& v = rec.obs[k].vel;
    return Vec3(v.u, v.vm, v.r);
  };
  std::vector<Vec3> out(n);
  out[0] = (nu(1) - nu(0)) / (rec.t[1] - rec.t[0]);
  out[n - 1] = (nu(n - 1) - nu(n - 2)) / (rec.t[n - 1] - rec.t[n - 2]);
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = (nu(k + 1) - nu(k - 1)) / (rec.t[k + 1] - rec.t[k - 1]);
  return out;
}

StandardizationStats compute_stats(const Dataset& train) {
  std::vector<Features> xs;
  std::vector<Vec3> ys;
  for (const TrajectoryRecord& r : train.records) {
    r.validate();
    if (r.size() < 2) throw InvalidArgument("stats: record '" + r.label + "' has fewer than 2 samples");
    for (std::size_t k = 0; k < r.size(); ++k) xs.push_back(featurize(r.obs[k], r.act[k], r.wind[k]));
    const auto acc = finite_difference_accel(r);
    ys.insert(ys.end(), acc.begin(), acc.end());
  }
  if (xs.empty()) throw InvalidArgument("stats: empty training set");

  auto moments = [](const auto& v, auto& mean, auto& sd) {
    const double n = static_cast<double>(v.size());
    mean.setZero();
    for (const auto& x : v) mean += x;
    mean /= n;
    sd.setZero();
    for (const auto& x : v) sd += (x - mean).cwiseAbs2();
    sd = (sd / n).cwiseSqrt();
  };
  StandardizationStats s;
  moments(xs, s.in_mean, s.in_std);
  moments(ys, s.out_mean, s.out_std);
  static const char* out_names[] = {"du", "dvm", "dr"};
  for (int c = 0; c < 8; ++c) {
    if (!(s.in_std[c] > 1e-12 * (1.0 + std::abs(s.in_mean[c])))) {
      throw InvalidArgument(std::string("stats: zero variance in input channel '") + kFeatureNames[c] + "'");
    }
  }
  for (int c = 0; c < 3; ++c) {
    if (!(s.out_std[c] > 1e-12 * (1.0 + std::abs(s.out_mean[c])))) {
      throw InvalidArgument(std::string("stats: zero variance in output channel '") + out_names[c] + "'");
    }
  }
  return s;
}

namespace {

std::FILE* open_write(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  return f;
}

void close_write(std::FILE* f, const fs::path& path) {
  if (std::fclose(f) != 0) throw IoError("error writing '" + path.string() + "'");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& src, std::size_t line) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && *b == ' ') ++b;
  if (b < e && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw ParseError(src, line, "not a number: '" + s + "'");
  return v;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

void write_trajectory_csv(const fs::path& path, const TrajectoryRecord& rec, bool truth) {
  rec.validate();
  if (truth && !rec.has_truth()) throw InvalidArgument("record '" + rec.label + "' has no truth");
  const auto& states = truth ? rec.truth : rec.obs;
  std::FILE* f = open_write(path);
  std::fprintf(f, "%s\n", kTrajectoryHeader);
  for (std::size_t k = 0; k < rec.size(); ++k) {
    const ShipState s = states[k].canonical();
    const ActuatorState& a = rec.act[k];
    const TrueWind& w = rec.wind[k];
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", rec.t[k],
                 s.pose.x0, s.pose.y0, s.pose.psi, s.vel.u, s.vel.vm, s.vel.r, a.delta_p, a.delta_s, a.n_bt,
                 w.speed, w.direction);
  }
  close_write(f, path);
}

TrajectoryRecord read_trajectory_csv(const fs::path& path, const std::string& label) {
  const auto lines = read_lines(path);
  const std::string src = path.string();
  if (lines.empty() || lines[0] != kTrajectoryHeader) {
    throw ParseError(src, 1, std::string("expected header '") + kTrajectoryHeader + "'");
  }
  TrajectoryRecord r;
  r.label = label.empty() ? path.stem().string() : label;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split_csv(lines[i]);
    if (cells.size() != 12) throw ParseError(src, i + 1, "expected 12 columns");
    double v[12];
    for (int c = 0; c < 12; ++c) v[c] = parse_double(cells[c], src, i + 1);
    r.t.push_back(v[0]);
    r.obs.push_back({{v[1], v[2], v[3]}, {v[4], v[5], v[6]}});
    r.act.push_back({v[7], v[8], v[9]});
    r.wind.push_back({v[10], v[11]});
  }
  try {
    r.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(src, 0, e.what());
  }
  return r;
}

void write_script_csv(const fs::path& path, const Script& script) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "%s\n", kScriptHeader);
  for (std::size_t k = 0; k < script.t.size(); ++k) {
    const ActuatorState& a = script.cmd[k];
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", script.t[k], a.delta_p, a.delta_s, a.n_bt,
                 script.wind[k].speed, script.wind[k].direction);
  }
  close_write(f, path);
}

Script read_script_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  const std::string src = path.string();
  if (lines.empty()) throw ParseError(src, 1, "empty script");
  const auto header = split_csv(lines[0]);
  static const char* required[] = {"t", "delta_p", "delta_s", "n_bt", "U_T", "xi_T"};
  int col[6];
  for (int c = 0; c < 6; ++c) {
    const auto it = std::find(header.begin(), header.end(), required[c]);
    if (it == header.end()) throw ParseError(src, 1, std::string("missing column '") + required[c] + "'");
    col[c] = static_cast<int>(it - header.begin());
  }
  Script s;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cells = split_csv(lines[i]);
    if (cells.size() != header.size()) {
      throw ParseError(src, i + 1, "expected " + std::to_string(header.size()) + " columns");
    }
    double v[6];
    for (int c = 0; c < 6; ++c) v[c] = parse_double(cells[col[c]], src, i + 1);
    if (!s.t.empty() && !(v[0] > s.t.back())) throw ParseError(src, i + 1, "time must be strictly increasing");
    s.t.push_back(v[0]);
    s.cmd.push_back({v[1], v[2], v[3]});
    s.wind.push_back({v[4], v[5]});
  }
  if (s.t.empty()) throw ParseError(src, 2, "script has no rows");
  return s;
}

ManeuverSpec ManeuverSpec::parse(const std::string& tag) {
  ManeuverSpec m;
  m.label = tag;
  auto num = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("bad maneuver tag '" + tag + "'");
    }
  };
  if (tag.size() < 2) throw ConfigError("bad maneuver tag '" + tag + "'");
  const std::string rest = tag.substr(1);
  switch (tag[0]) {
    case 'Z': {
      const auto slash = rest.find('/');
      if (slash == std::string::npos) throw ConfigError("zigzag tag '" + tag + "' needs Z<delta>/<psi>");
      m.kind = Kind::kZigzag;
      m.delta = deg2rad(num(rest.substr(0, slash)));
      m.psi = deg2rad(num(rest.substr(slash + 1)));
      if (!(m.delta > 0.0) || !(m.psi > 0.0)) throw ConfigError("zigzag tag '" + tag + "': angles must be > 0");
      break;
    }
    case 'T':
      m.kind = Kind::kTurning;
      m.delta = deg2rad(num(rest));
      break;
    case 'R':
    case 'B':
      m.kind = tag[0] == 'R' ? Kind::kRandom : Kind::kScripted;
      m.index = static_cast<int>(num(rest));
      break;
    default:
      throw ConfigError("bad maneuver tag '" + tag + "' (expected Z, T, R or B)");
  }
  return m;
}

std::uint64_t maneuver_seed(std::uint64_t base, const std::string& label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(base, {h});
}

TrajectoryRecord generate_maneuver(const ManeuverSpec& spec, const GenConfig& cfg, std::uint64_t base_seed,
                                   const fs::path& script_dir) {
  const std::uint64_t seed = maneuver_seed(base_seed, spec.label);
  TrajectoryRecord clean;
  switch (spec.kind) {
    case ManeuverSpec::Kind::kZigzag: clean = gen_zigzag(spec.delta, spec.psi, cfg, seed); break;
    case ManeuverSpec::Kind::kTurning: clean = gen_turning(spec.delta, cfg, seed); break;
    case ManeuverSpec::Kind::kRandom: clean = gen_random(cfg, seed); break;
    case ManeuverSpec::Kind::kScripted: {
      const fs::path file = script_dir / (spec.label + ".csv");
      if (!fs::exists(file)) throw IoError("missing script asset '" + file.string() + "' for maneuver " + spec.label);
      clean = gen_scripted(read_script_csv(file), cfg, seed);
      break;
    }
  }
  clean.label = spec.label;
  return observe(resample(clean, cfg.dt_obs), cfg.noise, seed);
}

void DatasetManifest::save(const fs::path& dir) const {
  json j;
  j["generator"] = generator;
  j["seed"] = seed;
  j["dt_sim"] = dt_sim;
  j["dt_obs"] = dt_obs;
  json sp = json::object();
  for (const auto& [name, files] : splits) {
    json arr = json::array();
    for (const DatasetFiles& f : files) {
      arr.push_back({{"label", f.label}, {"file", f.file}, {"truth", f.truth_file}, {"seed", f.seed}});
    }
    sp[name] = arr;
  }
  j["splits"] = sp;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / kManifestName, std::ios::binary);
  if (!out) throw IoError("cannot write '" + (dir / kManifestName).string() + "'");
  out << j.dump(2) << '\n';
}

DatasetManifest DatasetManifest::load(const fs::path& dir) {
  const fs::path file = dir / kManifestName;
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("dataset manifest not found: '" + file.string() + "' (run `gen` first)");
  DatasetManifest m;
  try {
    const json j = json::parse(in);
    m.generator = j.at("generator").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dt_sim = j.at("dt_sim").get<double>();
    m.dt_obs = j.at("dt_obs").get<double>();
    for (const auto& [name, arr] : j.at("splits").items()) {
      auto& files = m.splits[name];
      for (const auto& f : arr) {
        files.push_back({f.at("label").get<std::string>(), f.at("file").get<std::string>(),
                         f.value("truth", std::string()), f.at("seed").get<std::uint64_t>()});
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(file.string(), 0, e.what());
  }
  return m;
}

Dataset load_split(const fs::path& dir, const std::string& split) {
  const DatasetManifest m = DatasetManifest::load(dir);
  const auto it = m.splits.find(split);
  if (it == m.splits.end()) throw ConfigError("split '" + split + "' not in dataset manifest");
  Dataset d;
  d.split = split;
  d.seed = m.seed;
  d.generator = m.generator;
  for (const DatasetFiles& f : it->second) {
    TrajectoryRecord r = read_trajectory_csv(dir / f.file, f.label);
    if (!f.truth_file.empty() && fs::exists(dir / f.truth_file)) {
      const TrajectoryRecord t = read_trajectory_csv(dir / f.truth_file, f.label);
      if (t.size() != r.size()) throw ParseError((dir / f.truth_file).string(), 0, "truth length differs");
      r.truth = t.obs;
    }
    d.records.push_back(std::move(r));
  }
  return d;
}

}  // namespace shipens
