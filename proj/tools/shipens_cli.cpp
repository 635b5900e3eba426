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

// shipens command-line front end. Exit codes: 0 success, 1 usage or
// configuration error, 2 runtime failure.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shipens/shipens.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Options {
  std::string config;
  std::vector<std::string> sets;
  int jobs = -1;
  bool quiet = false;
};

int exit_code(shipens_status s) {
  switch (s) {
    case SHIPENS_OK:
      return kExitOk;
    case SHIPENS_ERR_INVALID_ARGUMENT:
    case SHIPENS_ERR_CONFIG:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

int fail(const char* stage, shipens_status s) {
  std::fprintf(stderr, "shipens: %s: %s\n", stage, shipens_last_error());
  return exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ship maneuvering ensembles: data generation, training, probabilistic prediction and PD evaluation"};
  app.set_version_flag("--version", shipens_version());
  app.require_subcommand(1, 1);

  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"scripts", "write the pseudo-berthing command scripts"},
      {"gen", "simulate maneuvers and write the dataset"},
      {"train", "train the ensemble and write the artifact"},
      {"predict", "particle prediction metrics on the test splits"},
      {"pdsweep", "PD gain sweep against the simulator"},
      {"config", "print the effective configuration"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", opt.config, "JSON run configuration (defaults when omitted)");
    sub->add_option("-s,--set", opt.sets, "override a config key, e.g. train.epochs=50")->take_all();
    sub->add_option("-j,--jobs", opt.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_flag("-q,--quiet", opt.quiet, "no progress output");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  shipens_config* cfg = nullptr;
  shipens_status s = shipens_config_load(opt.config.empty() ? nullptr : opt.config.c_str(), &cfg);
  if (s != SHIPENS_OK) {
    fail("config", s);
    return kExitUsage;
  }
  std::vector<std::string> sets = opt.sets;
  if (opt.jobs >= 0) sets.push_back("jobs=" + std::to_string(opt.jobs));
  for (const auto& a : sets) {
    s = shipens_config_set(cfg, a.c_str());
    if (s != SHIPENS_OK) {
      fail("config", s);
      shipens_config_free(cfg);
      return kExitUsage;
    }
  }

  int rc = kExitOk;
  if (command == "config") {
    std::printf("%s\n", shipens_config_json(cfg));
  } else {
    shipens_set_verbose(opt.quiet ? 0 : 1);
    const char* summary = nullptr;
    s = shipens_run(cfg, command.c_str(), &summary);
    if (s == SHIPENS_OK) {
      std::printf("%s\n", summary);
    } else {
      rc = fail(command.c_str(), s);
    }
  }
  shipens_config_free(cfg);
  return rc;
}
