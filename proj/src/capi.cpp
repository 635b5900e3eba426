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

#include "shipens/shipens.h"

#include <atomic>
#include <cstdio>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "shipens/error.hpp"
#include "shipens/pipeline.hpp"

struct shipens_config {
  std::string path;
  std::vector<std::string> overrides;
  shipens::RunConfig cfg;
  std::string summary;
};

struct shipens_ensemble {
  shipens::EnsembleModel model;
};

namespace {

thread_local std::string g_error;
std::atomic<int> g_verbose{0};

shipens_status status_of(shipens::ErrorKind k) {
  using shipens::ErrorKind;
  switch (k) {
    case ErrorKind::kInvalidArgument:
      return SHIPENS_ERR_INVALID_ARGUMENT;
    case ErrorKind::kConfig:
      return SHIPENS_ERR_CONFIG;
    case ErrorKind::kIo:
      return SHIPENS_ERR_IO;
    case ErrorKind::kParse:
      return SHIPENS_ERR_PARSE;
    case ErrorKind::kDiverged:
      return SHIPENS_ERR_DIVERGED;
    case ErrorKind::kTraining:
      return SHIPENS_ERR_TRAINING;
    case ErrorKind::kRuntime:
      return SHIPENS_ERR_RUNTIME;
  }
  return SHIPENS_ERR_RUNTIME;
}

template <class F>
shipens_status guarded(F&& f) {
  try {
    f();
    g_error.clear();
    return SHIPENS_OK;
  } catch (const shipens::Error& e) {
    g_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return SHIPENS_ERR_RUNTIME;
  } catch (const std::exception& e) {
    g_error = e.what();
    return SHIPENS_ERR_RUNTIME;
  }
}

shipens_status null_arg(const char* what) {
  g_error = std::string(what) + " must not be NULL";
  return SHIPENS_ERR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* shipens_version(void) { return "0.1.0"; }

const char* shipens_last_error(void) { return g_error.c_str(); }

void shipens_set_verbose(int verbose) { g_verbose = verbose; }

shipens_status shipens_config_load(const char* path, shipens_config** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<shipens_config>();
    if (path) c->path = path;
    c->cfg = shipens::load_config(c->path);
    *out = c.release();
  });
}

shipens_status shipens_config_set(shipens_config* cfg, const char* assignment) {
  if (!cfg) return null_arg("cfg");
  if (!assignment) return null_arg("assignment");
  return guarded([&] {
    std::vector<std::string> o = cfg->overrides;
    o.emplace_back(assignment);
    cfg->cfg = shipens::load_config(cfg->path, o);
    cfg->overrides = std::move(o);
  });
}

const char* shipens_config_json(const shipens_config* cfg) { return cfg ? cfg->cfg.json.c_str() : ""; }

void shipens_config_free(shipens_config* cfg) { delete cfg; }

shipens_status shipens_run(shipens_config* cfg, const char* command, const char** summary) {
  if (!cfg) return null_arg("cfg");
  if (!command) return null_arg("command");
  if (summary) *summary = nullptr;
  return guarded([&] {
    shipens::LogFn log;
    if (g_verbose) {
      log = [](const std::string& line) {
        std::fprintf(stderr, "%s\n", line.c_str());
        std::fflush(stderr);
      };
    }
    cfg->summary = shipens::run_command(command, cfg->cfg, log);
    if (summary) *summary = cfg->summary.c_str();
  });
}

shipens_status shipens_ensemble_load(const char* dir, shipens_ensemble** out) {
  if (!out) return null_arg("out");
  if (!dir) return null_arg("dir");
  *out = nullptr;
  return guarded([&] {
    auto e = std::make_unique<shipens_ensemble>();
    e->model = shipens::EnsembleModel::load(dir);
    *out = e.release();
  });
}

size_t shipens_ensemble_size(const shipens_ensemble* ens) { return ens ? ens->model.size() : 0; }

void shipens_ensemble_free(shipens_ensemble* ens) { delete ens; }

shipens_status shipens_ensemble_step(const shipens_ensemble* ens, size_t member, const double* state,
                                     const double* act, const double* wind, double dt, double* out) {
  if (!ens) return null_arg("ens");
  if (!state || !act || !wind || !out) return null_arg("state/act/wind/out");
  return guarded([&] {
    if (member >= ens->model.size()) throw shipens::InvalidArgument("member index out of range");
    shipens::Vec6 x;
    for (int i = 0; i < 6; ++i) x[i] = state[i];
    const shipens::ShipState s = shipens::ShipState::from_vector(x);
    const shipens::ActuatorState a{act[0], act[1], act[2]};
    const shipens::TrueWind w{wind[0], wind[1]};
    const shipens::ShipState y =
        shipens::model_step(ens->model.members[member].dyn, s, a, w, dt, shipens::Integrator::kRk4);
    const shipens::Vec6 v = y.to_vector();
    for (int i = 0; i < 6; ++i) out[i] = v[i];
  });
}

}  // extern "C"
