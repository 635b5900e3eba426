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

#include "shipens/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "json.hpp"
#include "shipens/error.hpp"
#include "shipens/parallel.hpp"

namespace shipens {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json sigma_json(const std::array<double, 6>& s) {
  auto v = [](double x) { return std::isinf(x) ? json(nullptr) : json(x); };
  auto d = [](double x) { return std::isinf(x) ? json(nullptr) : json(rad2deg(x)); };
  return {{"x0", v(s[0])}, {"y0", v(s[1])}, {"psi_deg", d(s[2])}, {"u", v(s[3])}, {"vm", v(s[4])}, {"r_deg", d(s[5])}};
}

json labels(const char* prefix, int first, int last, const char* fmt) {
  json a = json::array();
  for (int i = first; i <= last; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, fmt, prefix, i);
    a.push_back(buf);
  }
  return a;
}

json defaults() {
  const GenConfig g;
  const TrainConfig t;
  const WindProcessConfig w;
  const ActuatorResponseConfig a;
  json zt = json::array();
  for (int d = 5; d <= 30; d += 5) zt.push_back("Z" + std::to_string(d) + "/" + std::to_string(d));
  for (int d = 5; d <= 30; d += 5) zt.push_back("T" + std::to_string(d));
  json grid = json::array();
  for (int k = 5; k <= 100; k += 5) grid.push_back(static_cast<double>(k));

  json j;
  j["paths"] = {{"dataset", "run/data"}, {"artifact", "run/ensemble"}, {"output", "run/out"}, {"scripts", "assets/berthing"}};
  j["seeds"] = {{"data", 2024}, {"train", 1}, {"predict", 2}, {"pdsweep", 3}};
  j["jobs"] = 0;
  j["gen"] = {
      {"vessel", "synthetic_model_ship"},
      {"dt_sim", g.dt_sim},
      {"dt_obs", g.dt_obs},
      {"duration", g.duration},
      {"initial_u", g.initial_u},
      {"noise", sigma_json(g.noise.sigma)},
      {"wind",
       {{"alpha_U", w.alpha_U},
        {"sigma_U", w.sigma_U},
        {"mean_speed", w.mean_speed},
        {"alpha_gamma", w.alpha_gamma},
        {"sigma_gamma_deg", rad2deg(w.sigma_gamma)},
        {"mean_direction_deg", rad2deg(w.mean_direction)}}},
      {"actuator", {{"rudder_rate_deg", rad2deg(a.rate[0])}, {"thruster_rate", a.rate[2]}}},
      {"splits",
       {{"train", labels("B", 1, 27, "%s%02d")},
        {"test_b", labels("B", 28, 41, "%s%02d")},
        {"test_zt", zt},
        {"test_r", labels("R", 1, 10, "%s%d")}}},
  };
  j["train"] = {
      {"split", "train"},
      {"ensemble_size", 15},
      {"K", t.k},
      {"K_init", t.k_init},
      {"stride", t.stride},
      {"hidden_layers", t.hidden_layers},
      {"width", t.width},
      {"init_hidden_layers", t.init_hidden_layers},
      {"init_width", t.init_width},
      {"lr", t.lr},
      {"batch", t.batch},
      {"epochs", t.epochs},
      {"integrator", to_string(t.integrator)},
      {"clip_norm", t.clip_norm},
      {"use_init_net", t.use_init_net},
      {"calib_samples", t.calib_samples},
      {"max_failed_batches", t.max_failed_batches},
      {"sigma", sigma_json(t.sigma)},
  };
  j["predict"] = {
      {"splits", {"test_b", "test_zt", "test_r"}},
      {"schemes", {"tsinf", "ts1"}},
      {"member_prefixes", {1, 2, 4, 8, 15}},
      {"K", 100},
      {"particles", 100},
      {"integrator", "rk4"},
      {"stratified", false},
      {"jitter", 1e-9},
      {"write_particles", false},
  };
  j["pdsweep"] = {
      {"kp", grid},
      {"kd", grid},
      {"particles", 100},
      {"scheme", "tsinf"},
      {"stratified", true},
      {"dt_ctrl", 1.0},
      {"duration", 100.0},
      {"initial_u", 0.5},
      {"target_deg", 90.0},
      {"integrator", "rk4"},
      {"model_actuator_lag", false},
      {"write_members", true},
  };
  return j;
}

bool free_keys(const std::string& path) { return path == "/gen/splits"; }

void check_keys(const json& given, const json& ref, const std::string& path) {
  if (!given.is_object()) return;
  if (free_keys(path)) return;
  for (const auto& [k, v] : given.items()) {
    const std::string p = path + "/" + k;
    if (!ref.contains(k)) throw ConfigError("unknown config key '" + p.substr(1) + "'");
    if (ref[k].is_object()) {
      if (!v.is_object()) throw ConfigError("config key '" + p.substr(1) + "' must be an object");
      check_keys(v, ref[k], p);
    }
  }
}

// Objects merge recursively; everything else (null included) replaces.
void merge(json& base, const json& patch, const std::string& path) {
  for (const auto& [k, v] : patch.items()) {
    const std::string p = path + "/" + k;
    if (v.is_object() && base.contains(k) && base[k].is_object() && !free_keys(p)) {
      merge(base[k], v, p);
    } else {
      base[k] = v;
    }
  }
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must be key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  std::string ptr;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw ConfigError("bad override key '" + key + "'");
    ptr += "/" + part;
  }
  const json::json_pointer p(ptr);
  const bool under_splits = ptr.rfind("/gen/splits/", 0) == 0;
  if (!j.contains(p) && !under_splits) throw ConfigError("unknown config key '" + key + "'");
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) v = text;
  j[p] = v;
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

double get_sigma(const json& j, const char* key, bool degrees, const std::string& where) {
  const json& v = j.at(key);
  if (v.is_null()) return kInf;
  if (!v.is_number()) throw ConfigError("config key '" + where + "." + key + "' must be a number or null");
  const double x = v.get<double>();
  return degrees ? deg2rad(x) : x;
}

std::array<double, 6> parse_sigma(const json& j, const std::string& where) {
  return {get_sigma(j, "x0", false, where),     get_sigma(j, "y0", false, where), get_sigma(j, "psi_deg", true, where),
          get_sigma(j, "u", false, where),      get_sigma(j, "vm", false, where), get_sigma(j, "r_deg", true, where)};
}

std::size_t get_count(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError("config key '" + where + "." + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

int get_int(const json& j, const char* key, const std::string& where) {
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError("config key '" + where + "." + key + "' must be an integer");
  return v.get<int>();
}

Integrator get_integrator(const json& j, const char* key, const std::string& where) {
  try {
    return parse_integrator(get<std::string>(j, key, where));
  } catch (const Error& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

RunConfig from_json(const json& j) {
  RunConfig c;
  const json& p = j.at("paths");
  c.paths.dataset = get<std::string>(p, "dataset", "paths");
  c.paths.artifact = get<std::string>(p, "artifact", "paths");
  c.paths.output = get<std::string>(p, "output", "paths");
  c.paths.scripts = get<std::string>(p, "scripts", "paths");
  const json& s = j.at("seeds");
  c.seeds.data = get<std::uint64_t>(s, "data", "seeds");
  c.seeds.train = get<std::uint64_t>(s, "train", "seeds");
  c.seeds.predict = get<std::uint64_t>(s, "predict", "seeds");
  c.seeds.pdsweep = get<std::uint64_t>(s, "pdsweep", "seeds");
  c.jobs = get_count(j, "jobs", "run");

  const json& g = j.at("gen");
  if (get<std::string>(g, "vessel", "gen") != "synthetic_model_ship") {
    throw ConfigError("gen.vessel: only 'synthetic_model_ship' is built in");
  }
  c.gen.vessel = VesselConfig::synthetic_model_ship();
  c.gen.dt_sim = get<double>(g, "dt_sim", "gen");
  c.gen.dt_obs = get<double>(g, "dt_obs", "gen");
  c.gen.duration = get<double>(g, "duration", "gen");
  c.gen.initial_u = get<double>(g, "initial_u", "gen");
  c.gen.noise.sigma = parse_sigma(g.at("noise"), "gen.noise");
  const json& w = g.at("wind");
  c.gen.wind.alpha_U = get<double>(w, "alpha_U", "gen.wind");
  c.gen.wind.sigma_U = get<double>(w, "sigma_U", "gen.wind");
  c.gen.wind.mean_speed = get<double>(w, "mean_speed", "gen.wind");
  c.gen.wind.alpha_gamma = get<double>(w, "alpha_gamma", "gen.wind");
  c.gen.wind.sigma_gamma = deg2rad(get<double>(w, "sigma_gamma_deg", "gen.wind"));
  c.gen.wind.mean_direction = deg2rad(get<double>(w, "mean_direction_deg", "gen.wind"));
  const json& a = g.at("actuator");
  const double rr = deg2rad(get<double>(a, "rudder_rate_deg", "gen.actuator"));
  c.gen.actuator.rate = {rr, rr, get<double>(a, "thruster_rate", "gen.actuator")};
  for (const auto& [name, arr] : g.at("splits").items()) {
    if (!arr.is_array()) throw ConfigError("gen.splits." + name + " must be a list of maneuver tags");
    auto& v = c.splits[name];
    for (const auto& tag : arr) {
      if (!tag.is_string()) throw ConfigError("gen.splits." + name + " must be a list of maneuver tags");
      v.push_back(tag.get<std::string>());
    }
  }
  try {
    c.gen.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("gen: ") + e.what());
  }

  const json& t = j.at("train");
  c.train_split = get<std::string>(t, "split", "train");
  c.ensemble_size = get_count(t, "ensemble_size", "train");
  c.train.k = get_int(t, "K", "train");
  c.train.k_init = get_int(t, "K_init", "train");
  c.train.stride = get_int(t, "stride", "train");
  c.train.hidden_layers = get_int(t, "hidden_layers", "train");
  c.train.width = get_int(t, "width", "train");
  c.train.init_hidden_layers = get_int(t, "init_hidden_layers", "train");
  c.train.init_width = get_int(t, "init_width", "train");
  c.train.lr = get<double>(t, "lr", "train");
  c.train.batch = get_int(t, "batch", "train");
  c.train.epochs = get_int(t, "epochs", "train");
  c.train.integrator = get_integrator(t, "integrator", "train");
  c.train.clip_norm = get<double>(t, "clip_norm", "train");
  c.train.use_init_net = get<bool>(t, "use_init_net", "train");
  c.train.calib_samples = get_int(t, "calib_samples", "train");
  c.train.max_failed_batches = get_int(t, "max_failed_batches", "train");
  c.train.sigma = parse_sigma(t.at("sigma"), "train.sigma");
  if (c.ensemble_size < 1) throw ConfigError("train.ensemble_size must be >= 1");
  try {
    c.train.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }

  const json& pr = j.at("predict");
  c.predict.splits = get<std::vector<std::string>>(pr, "splits", "predict");
  c.predict.schemes.clear();
  const json& sch = pr.at("schemes");
  if (sch.is_string() && sch.get<std::string>() == "both") {
    c.predict.schemes = {SamplingScheme::kTSInf, SamplingScheme::kTS1};
  } else if (sch.is_string()) {
    c.predict.schemes = {parse_scheme(sch.get<std::string>())};
  } else {
    for (const auto& n : get<std::vector<std::string>>(pr, "schemes", "predict")) c.predict.schemes.push_back(parse_scheme(n));
  }
  if (c.predict.schemes.empty()) throw ConfigError("predict.schemes is empty");
  c.predict.member_prefixes = get<std::vector<std::size_t>>(pr, "member_prefixes", "predict");
  for (std::size_t m : c.predict.member_prefixes) {
    if (m < 1) throw ConfigError("predict.member_prefixes entries must be >= 1");
  }
  c.predict.options.k = get_count(pr, "K", "predict");
  c.predict.options.particles = get_count(pr, "particles", "predict");
  c.predict.options.propagate.integrator = get_integrator(pr, "integrator", "predict");
  c.predict.options.propagate.stratified = get<bool>(pr, "stratified", "predict");
  c.predict.options.jitter = get<double>(pr, "jitter", "predict");
  c.predict.write_particles = get<bool>(pr, "write_particles", "predict");
  c.predict.options.keep_clouds = c.predict.write_particles;
  c.predict.options.jobs = c.jobs;
  if (c.predict.options.k < 2) throw ConfigError("predict.K must be >= 2");
  if (c.predict.options.particles < 1) throw ConfigError("predict.particles must be >= 1");
  if (!(c.predict.options.jitter >= 0.0)) throw ConfigError("predict.jitter must be >= 0");

  const json& sw = j.at("pdsweep");
  c.pdsweep.kp = get<std::vector<double>>(sw, "kp", "pdsweep");
  c.pdsweep.kd = get<std::vector<double>>(sw, "kd", "pdsweep");
  if (c.pdsweep.kp.empty() || c.pdsweep.kd.empty()) throw ConfigError("pdsweep.kp and pdsweep.kd must be nonempty");
  c.pdsweep.options.particles = get_count(sw, "particles", "pdsweep");
  c.pdsweep.options.scheme = parse_scheme(get<std::string>(sw, "scheme", "pdsweep"));
  c.pdsweep.options.stratified = get<bool>(sw, "stratified", "pdsweep");
  c.pdsweep.options.loop.dt_ctrl = get<double>(sw, "dt_ctrl", "pdsweep");
  c.pdsweep.options.loop.integrator = get_integrator(sw, "integrator", "pdsweep");
  c.pdsweep.options.loop.model_actuator_lag = get<bool>(sw, "model_actuator_lag", "pdsweep");
  c.pdsweep.options.loop.actuator = c.gen.actuator;
  c.pdsweep.options.jobs = c.jobs;
  c.pdsweep.scenario.duration = get<double>(sw, "duration", "pdsweep");
  c.pdsweep.scenario.initial.vel.u = get<double>(sw, "initial_u", "pdsweep");
  c.pdsweep.scenario.target = deg2rad(get<double>(sw, "target_deg", "pdsweep"));
  c.pdsweep.write_members = get<bool>(sw, "write_members", "pdsweep");
  if (c.pdsweep.options.particles < 1) throw ConfigError("pdsweep.particles must be >= 1");
  if (!(c.pdsweep.options.loop.dt_ctrl > 0.0)) throw ConfigError("pdsweep.dt_ctrl must be > 0");
  c.pdsweep.scenario.validate();

  c.json = j.dump(2);
  return c;
}

RunConfig build(const json& file, const std::vector<std::string>& overrides) {
  const json ref = defaults();
  check_keys(file, ref, "");
  json j = ref;
  merge(j, file, "");
  for (const auto& o : overrides) apply_override(j, o);
  check_keys(j, ref, "");
  try {
    return from_json(j);
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

std::string default_config_text() { return defaults().dump(2); }

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  json file = json::parse(text, nullptr, false);
  if (file.is_discarded() || !file.is_object()) throw ConfigError("config is not a JSON object");
  return build(file, overrides);
}

RunConfig load_config(const fs::path& file, const std::vector<std::string>& overrides) {
  if (file.empty()) return build(json::object(), overrides);
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + file.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str(), overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

std::string label_stem(const std::string& label) {
  std::string s = label;
  std::replace(s.begin(), s.end(), '/', '_');
  return s;
}

namespace {

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

std::string finish(const fs::path& dir, const std::string& command, json summary) {
  json full{{"command", command}, {"status", "ok"}};
  full.update(summary);
  const std::string text = full.dump(2);
  if (dir.empty()) return text;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path file = dir / ("run_summary_" + command + ".json");
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write '" + file.string() + "'");
  out << text << '\n';
  if (!out) throw IoError("error writing '" + file.string() + "'");
  return text;
}

std::vector<std::string> berthing_labels(const RunConfig& cfg) {
  std::set<std::string> out;
  for (const auto& [name, tags] : cfg.splits) {
    for (const auto& t : tags) {
      if (ManeuverSpec::parse(t).kind == ManeuverSpec::Kind::kScripted) out.insert(t);
    }
  }
  return {out.begin(), out.end()};
}

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// Average ranks for ties.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t q = i; q <= j; ++q) r[idx[q]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

std::string cmd_scripts(const RunConfig& cfg, const LogFn& log) {
  const auto tags = berthing_labels(cfg);
  std::error_code ec;
  fs::create_directories(cfg.paths.scripts, ec);
  json files = json::array();
  for (const auto& t : tags) {
    const Script s = make_berthing_script(maneuver_seed(cfg.seeds.data, t), cfg.gen);
    const fs::path f = cfg.paths.scripts / (t + ".csv");
    write_script_csv(f, s);
    files.push_back({{"label", t}, {"file", f.generic_string()}, {"rows", s.t.size()}});
  }
  say(log, "wrote " + std::to_string(tags.size()) + " berthing scripts to " + cfg.paths.scripts.string());
  return finish({}, "scripts", {{"dir", cfg.paths.scripts.generic_string()}, {"scripts", files}});
}

std::string cmd_gen(const RunConfig& cfg, const LogFn& log) {
  if (cfg.splits.empty()) throw ConfigError("gen.splits is empty");
  struct Item {
    std::string split;
    ManeuverSpec spec;
  };
  std::vector<Item> items;
  std::set<std::string> seen;
  for (const auto& [name, tags] : cfg.splits) {
    if (tags.empty()) throw ConfigError("gen.splits." + name + " is empty");
    for (const auto& t : tags) {
      if (!seen.insert(t).second) throw ConfigError("maneuver '" + t + "' listed in more than one split");
      try {
        items.push_back({name, ManeuverSpec::parse(t)});
      } catch (const Error& e) {
        throw ConfigError("gen.splits." + name + ": " + e.what());
      }
    }
  }
  std::vector<TrajectoryRecord> recs(items.size());
  parallel_for(items.size(), cfg.jobs, [&](std::size_t i) {
    recs[i] = generate_maneuver(items[i].spec, cfg.gen, cfg.seeds.data, cfg.paths.scripts);
  });
  DatasetManifest man;
  man.generator = kGeneratorVersion;
  man.seed = cfg.seeds.data;
  man.dt_sim = cfg.gen.dt_sim;
  man.dt_obs = cfg.gen.dt_obs;
  json splits = json::object();
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string stem = label_stem(items[i].spec.label);
    const std::string file = items[i].split + "/" + stem + ".csv";
    const std::string truth = items[i].split + "/" + stem + "_truth.csv";
    fs::create_directories(cfg.paths.dataset / items[i].split);
    write_trajectory_csv(cfg.paths.dataset / file, recs[i]);
    write_trajectory_csv(cfg.paths.dataset / truth, recs[i], true);
    man.splits[items[i].split].push_back(
        {items[i].spec.label, file, truth, maneuver_seed(cfg.seeds.data, items[i].spec.label)});
    json& s = splits[items[i].split];
    if (s.is_null()) s = {{"records", 0}, {"duration", 0.0}};
    s["records"] = s["records"].get<int>() + 1;
    s["duration"] = s["duration"].get<double>() + (recs[i].t.back() - recs[i].t.front());
  }
  man.save(cfg.paths.dataset);
  say(log, "wrote " + std::to_string(items.size()) + " records to " + cfg.paths.dataset.string());
  return finish(cfg.paths.dataset, "gen", {{"seed", cfg.seeds.data}, {"splits", splits}});
}

std::string cmd_train(const RunConfig& cfg, const LogFn& log) {
  const Dataset train = load_split(cfg.paths.dataset, cfg.train_split);
  const TrainingData data = prepare_training(train, cfg.train);
  say(log, "training " + std::to_string(cfg.ensemble_size) + " members on " + std::to_string(data.windows.size()) +
               " windows");
  std::mutex mu;
  const int every = std::max(1, cfg.train.epochs / 10);
  EpochCallback cb;
  if (log) {
    cb = [&](std::size_t m, int epoch, double loss) {
      if ((epoch + 1) % every != 0) return;
      char buf[96];
      std::snprintf(buf, sizeof buf, "member %zu epoch %d loss %.6g", m, epoch + 1, loss);
      std::lock_guard<std::mutex> lk(mu);
      log(buf);
    };
  }
  const EnsembleModel e = train_ensemble(data, cfg.train, cfg.ensemble_size, cfg.seeds.train, cfg.jobs, cb);
  e.save(cfg.paths.artifact);
  json members = json::array();
  for (std::size_t i = 0; i < e.size(); ++i) {
    const auto& h = e.members[i].loss_history;
    members.push_back({{"index", i},
                       {"seed", e.members[i].seed},
                       {"loss_first", num(h.empty() ? std::nan("") : h.front())},
                       {"loss_last", num(h.empty() ? std::nan("") : h.back())}});
  }
  return finish(cfg.paths.artifact, "train",
                {{"split", cfg.train_split},
                 {"windows", data.windows.size()},
                 {"ensemble_size", e.size()},
                 {"base_seed", cfg.seeds.train},
                 {"members", members}});
}

std::string cmd_predict(const RunConfig& cfg, const LogFn& log) {
  const EnsembleModel e = EnsembleModel::load(cfg.paths.artifact);
  std::vector<std::size_t> prefixes = cfg.predict.member_prefixes;
  prefixes.erase(std::remove_if(prefixes.begin(), prefixes.end(), [&](std::size_t m) { return m > e.size(); }),
                 prefixes.end());
  if (std::find(prefixes.begin(), prefixes.end(), e.size()) == prefixes.end()) prefixes.push_back(e.size());
  std::sort(prefixes.begin(), prefixes.end());
  prefixes.erase(std::unique(prefixes.begin(), prefixes.end()), prefixes.end());

  fs::create_directories(cfg.paths.output);
  const fs::path metrics_file = cfg.paths.output / "predict_metrics.csv";
  std::FILE* f = std::fopen(metrics_file.c_str(), "wb");
  if (!f) throw IoError("cannot write '" + metrics_file.string() + "'");
  std::fprintf(f, "%s\n", kPredictMetricsHeader);
  json rows = json::array();
  json trends = json::array();
  try {
    for (const auto& split : cfg.predict.splits) {
      const Dataset test = load_split(cfg.paths.dataset, split);
      for (SamplingScheme scheme : cfg.predict.schemes) {
        std::vector<double> ms, maha;
        for (std::size_t m : prefixes) {
          PredictOptions o = cfg.predict.options;
          o.keep_clouds = cfg.predict.write_particles && m == e.size();
          const PredictionResult r = predict_windows(e.prefix(m), scheme, test, cfg.seeds.predict, o);
          const MetricReport& rep = r.report;
          const std::string tag = split + "_" + to_string(scheme) + "_M" + std::to_string(m);
          write_summary_csv(cfg.paths.output / ("predict_" + tag + ".csv"), rep);
          if (o.keep_clouds) {
            write_particles_csv(cfg.paths.output / ("particles_" + split + "_" + to_string(scheme) + ".csv"), r);
          }
          std::fprintf(f, "%s,%s,%zu,%.17g,%.17g,%zu,%zu,%zu,%zu\n", split.c_str(), to_string(scheme).c_str(), m,
                       rep.l_eucl, rep.l_maha, rep.windows_ok, rep.windows_failed, rep.diverged_particles,
                       rep.degenerate_steps);
          rows.push_back({{"split", split},
                          {"scheme", to_string(scheme)},
                          {"members", m},
                          {"l_eucl", num(rep.l_eucl)},
                          {"l_maha", num(rep.l_maha)},
                          {"windows_ok", rep.windows_ok},
                          {"windows_failed", rep.windows_failed},
                          {"diverged_particles", rep.diverged_particles},
                          {"degenerate_steps", rep.degenerate_steps}});
          ms.push_back(static_cast<double>(m));
          maha.push_back(rep.l_maha);
          char buf[160];
          std::snprintf(buf, sizeof buf, "%s %s M=%zu: L_eucl %.4g L_maha %.4g", split.c_str(),
                        to_string(scheme).c_str(), m, rep.l_eucl, rep.l_maha);
          say(log, buf);
        }
        if (ms.size() >= 2) {
          trends.push_back(
              {{"split", split}, {"scheme", to_string(scheme)}, {"spearman_maha_vs_members", num(spearman(ms, maha))}});
        }
      }
    }
  } catch (...) {
    std::fclose(f);
    throw;
  }
  if (std::fclose(f) != 0) throw IoError("error writing '" + metrics_file.string() + "'");
  return finish(cfg.paths.output, "predict",
                {{"ensemble_size", e.size()},
                 {"seed", cfg.seeds.predict},
                 {"K", cfg.predict.options.k},
                 {"particles", cfg.predict.options.particles},
                 {"metrics", rows},
                 {"member_trend", trends}});
}

std::string cmd_pdsweep(const RunConfig& cfg, const LogFn& log) {
  const EnsembleModel e = EnsembleModel::load(cfg.paths.artifact);
  SimSetup truth;
  truth.vessel = cfg.gen.vessel;
  truth.actuator = cfg.gen.actuator;
  truth.wind = cfg.gen.wind;
  truth.dt = cfg.gen.dt_sim;
  truth.actuator_lag = true;
  truth.wind_mode = WindMode::kCalm;
  const auto grid = gain_grid(cfg.pdsweep.kp, cfg.pdsweep.kd);
  say(log, "sweeping " + std::to_string(grid.size()) + " gain pairs with " + std::to_string(e.size()) + " members");
  const SweepReport rep = sweep(e, truth, grid, cfg.pdsweep.scenario, cfg.seeds.pdsweep, cfg.pdsweep.options);
  fs::create_directories(cfg.paths.output);
  write_sweep_csv(cfg.paths.output / "pdsweep.csv", rep);
  if (cfg.pdsweep.write_members && cfg.pdsweep.options.scheme == SamplingScheme::kTSInf) {
    write_sweep_members_csv(cfg.paths.output / "pdsweep_members.csv", rep);
  }
  std::size_t failed = 0, over_worst = 0, over_mean = 0, over_single = 0;
  json errors = json::array();
  for (const auto& c : rep.cells) {
    if (!c.ok) {
      ++failed;
      errors.push_back({{"kp", c.gains.kp}, {"kd", c.gains.kd}, {"error", c.error}});
      say(log, "cell kp=" + std::to_string(c.gains.kp) + " kd=" + std::to_string(c.gains.kd) + " failed: " + c.error);
      continue;
    }
    over_worst += c.score_worst < c.score_truth;
    over_mean += c.score_mean < c.score_truth;
    if (!c.member_scores.empty()) over_single += c.member_scores[0] < c.score_truth;
  }
  if (failed == rep.cells.size()) throw Error(ErrorKind::kRuntime, "every sweep cell failed: " + rep.cells[0].error);
  json over = {{"worst", over_worst}, {"mean", over_mean}};
  if (cfg.pdsweep.options.scheme == SamplingScheme::kTSInf) over["single_member"] = over_single;
  return finish(cfg.paths.output, "pdsweep",
                {{"cells", rep.cells.size()},
                 {"failed_cells", failed},
                 {"scheme", to_string(cfg.pdsweep.options.scheme)},
                 {"particles", cfg.pdsweep.options.particles},
                 {"seed", cfg.seeds.pdsweep},
                 {"overestimated_cells", over},
                 {"errors", errors}});
}

std::string run_command(const std::string& name, const RunConfig& cfg, const LogFn& log) {
  if (name == "scripts") return cmd_scripts(cfg, log);
  if (name == "gen") return cmd_gen(cfg, log);
  if (name == "train") return cmd_train(cfg, log);
  if (name == "predict") return cmd_predict(cfg, log);
  if (name == "pdsweep") return cmd_pdsweep(cfg, log);
  throw ConfigError("unknown command '" + name + "'");
}

}  // namespace shipens
