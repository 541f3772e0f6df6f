// Copyright 2026 The seld Authors.
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


// Command-line front end. Talks to the toolkit only through the C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seld/seld.h"

namespace {

struct Common {
  std::string config;
  std::vector<std::string> seeds;
  int threads = 0;
  bool threads_set = false;
  std::string out;
  bool quiet = false;
};

// Machine-readable failure line on stderr; the exit status is the code.
int Failure(seld_status s, const std::string& message) {
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    escaped += c == '\n' ? ' ' : c;
  }
  std::fprintf(stderr, "error status=%d code=%s message=\"%s\"\n", static_cast<int>(s),
               seld_status_name(s), escaped.c_str());
  return static_cast<int>(s);
}

int LastFailure(seld_status s) { return Failure(s, seld_last_error()); }

void PrintProgress(const char* message, void*) { std::fprintf(stderr, "[seld] %s\n", message); }

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "Experiment config (JSON); defaults apply if omitted")
      ->check(CLI::ExistingFile);
  app->add_option("-s,--seed", c.seeds, "Seed override NAME=VALUE (repeatable)");
  app->add_option("-j,--threads", c.threads, "Worker threads (0: all cores)")
      ->each([&c](const std::string&) { c.threads_set = true; });
  app->add_option("-o,--out", c.out, "Output directory");
  app->add_flag("-q,--quiet", c.quiet, "Suppress progress messages");
}

// Builds the config handle from file, seed overrides and flags.
seld_status MakeConfig(const Common& c, seld_config** cfg) {
  seld_status s = c.config.empty() ? seld_config_default(cfg) : seld_config_load(c.config.c_str(), cfg);
  if (s != SELD_OK) return s;
  for (const auto& kv : c.seeds) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      s = SELD_ERR_INVALID_ARGUMENT;
      Failure(s, "seed override must look like NAME=VALUE: " + kv);
      return s;
    }
    std::uint64_t value = 0;
    try {
      std::size_t used = 0;
      value = std::stoull(kv.substr(eq + 1), &used, 0);
      if (used != kv.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      s = SELD_ERR_INVALID_ARGUMENT;
      Failure(s, "seed value is not an unsigned integer: " + kv);
      return s;
    }
    if ((s = seld_config_set_seed(*cfg, kv.substr(0, eq).c_str(), value)) != SELD_OK) return s;
  }
  if (c.threads_set && (s = seld_config_set_threads(*cfg, c.threads)) != SELD_OK) return s;
  if (!c.out.empty() && (s = seld_config_set_output_dir(*cfg, c.out.c_str())) != SELD_OK) return s;
  return SELD_OK;
}

struct ConfigHandle {
  seld_config* ptr = nullptr;
  ~ConfigHandle() { seld_config_free(ptr); }
};

std::string OutputDir(seld_config* cfg) {
  size_t needed = 0;
  seld_config_output_dir(cfg, nullptr, 0, &needed);
  std::string dir(needed + 1, '\0');
  seld_config_output_dir(cfg, dir.data(), dir.size(), &needed);
  dir.resize(needed);
  return dir;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binaural sound event localization and detection toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(seld_version()));

  Common train_opts, test_opts, suite_opts, fit_opts;
  auto* train = app.add_subcommand("train", "Fit the segregation model and train all detectors");
  AddCommon(train, train_opts);
  auto* test = app.add_subcommand("test", "Evaluate trained detectors on the test suite");
  AddCommon(test, test_opts);
  auto* suite = app.add_subcommand("suite", "Write the bound train and test scene configs");
  AddCommon(suite, suite_opts);
  auto* fit = app.add_subcommand("fit-segregation", "Fit and save the segregation model only");
  AddCommon(fit, fit_opts);

  std::vector<std::string> metrics;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "Aggregate metrics CSVs into summary series");
  report->add_option("metrics", metrics, "metrics.csv files")->required()->check(CLI::ExistingFile);
  report->add_option("-o,--out", report_out, "Report directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Failure(SELD_ERR_INVALID_ARGUMENT, e.what());
  }

  if (report->parsed()) {
    std::vector<const char*> paths;
    for (const auto& m : metrics) paths.push_back(m.c_str());
    seld_status s = seld_report(paths.data(), paths.size(), report_out.c_str());
    if (s != SELD_OK) return LastFailure(s);
    std::printf("ok command=report out=%s\n", report_out.c_str());
    return 0;
  }

  const Common& opts = train->parsed() ? train_opts
                       : test->parsed() ? test_opts
                       : suite->parsed() ? suite_opts
                                         : fit_opts;
  ConfigHandle cfg;
  seld_status s = MakeConfig(opts, &cfg.ptr);
  if (s != SELD_OK) return *seld_last_error() ? LastFailure(s) : static_cast<int>(s);
  seld_progress_fn progress = opts.quiet ? nullptr : PrintProgress;
  const std::string out = OutputDir(cfg.ptr);

  if (train->parsed()) {
    if ((s = seld_train(cfg.ptr, progress, nullptr)) != SELD_OK) return LastFailure(s);
    std::printf("ok command=train out=%s\n", out.c_str());
  } else if (test->parsed()) {
    size_t rows = 0;
    if ((s = seld_test(cfg.ptr, progress, nullptr, &rows)) != SELD_OK) return LastFailure(s);
    std::printf("ok command=test out=%s rows=%zu\n", out.c_str(), rows);
  } else if (suite->parsed()) {
    if ((s = seld_write_suites(cfg.ptr)) != SELD_OK) return LastFailure(s);
    std::printf("ok command=suite out=%s\n", out.c_str());
  } else {
    seld_obs_model* model = nullptr;
    if ((s = seld_fit_segregation(cfg.ptr, progress, nullptr, &model)) != SELD_OK) return LastFailure(s);
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
      seld_obs_model_free(model);
      return Failure(SELD_ERR_IO, "cannot create " + out + ": " + ec.message());
    }
    const std::string path = out + "/segregation_model.json";
    s = seld_obs_model_save(model, path.c_str());
    const int order = seld_obs_model_order(model);
    seld_obs_model_free(model);
    if (s != SELD_OK) return LastFailure(s);
    std::printf("ok command=fit-segregation out=%s order=%d\n", path.c_str(), order);
  }
  return 0;
}
