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


#include "seld/seld.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "seld/common.hpp"
#include "seld/lasso.hpp"
#include "seld/pipeline.hpp"
#include "seld/segregation.hpp"

struct seld_config {
  seld::pipeline::ExperimentConfig cfg;
};
struct seld_obs_model {
  seld::seg::ObservationModel model;
};
struct seld_detector {
  seld::lasso::DetectionModel model;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
seld_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SELD_OK;
  } catch (const seld::Error& e) {
    g_last_error = e.what();
    return static_cast<seld_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return SELD_ERR_INTERNAL;
}

void Require(bool ok, const char* what) {
  if (!ok) seld::Fail(seld::ErrorCode::kInvalidArgument, what);
}

void CopyOut(const std::string& s, char* buf, std::size_t len, std::size_t* needed) {
  if (needed) *needed = s.size();
  if (buf && len > 0) {
    const std::size_t n = std::min(len - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
}

seld::pipeline::Progress Wrap(seld_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& m) { fn(m.c_str(), user); };
}

}  // namespace

extern "C" {

const char* seld_version(void) { return seld::pipeline::kPipelineVersion; }

const char* seld_last_error(void) { return g_last_error.c_str(); }

const char* seld_status_name(seld_status status) {
  switch (status) {
    case SELD_OK: return "ok";
    case SELD_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SELD_ERR_IO: return "io";
    case SELD_ERR_CONFIG: return "config";
    case SELD_ERR_NUMERIC: return "numeric";
    case SELD_ERR_MISMATCH: return "mismatch";
    case SELD_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

seld_status seld_config_default(seld_config** out) {
  return Guard([&] {
    Require(out, "null output handle");
    *out = new seld_config{};
  });
}

seld_status seld_config_load(const char* path, seld_config** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    *out = new seld_config{seld::pipeline::ExperimentConfig::Load(path)};
  });
}

seld_status seld_config_from_json(const char* json, seld_config** out) {
  return Guard([&] {
    Require(json && out, "null argument");
    *out = new seld_config{seld::pipeline::ExperimentConfig::FromJson(json)};
  });
}

void seld_config_free(seld_config* config) { delete config; }

seld_status seld_config_set_seed(seld_config* config, const char* name, uint64_t value) {
  return Guard([&] {
    Require(config && name, "null argument");
    const std::string n = name;
    if (n == "master") {
      config->cfg.seeds.master = value;
      return;
    }
    const auto& names = seld::pipeline::Seeds::Names();
    if (std::find(names.begin(), names.end(), n) == names.end())
      seld::Fail(seld::ErrorCode::kConfig, "unknown seed name: " + n);
    config->cfg.seeds.overrides[n] = value;
  });
}

seld_status seld_config_set_threads(seld_config* config, int threads) {
  return Guard([&] {
    Require(config, "null config");
    config->cfg.threads = threads;
  });
}

seld_status seld_config_set_output_dir(seld_config* config, const char* dir) {
  return Guard([&] {
    Require(config && dir && *dir, "output dir must be a non-empty string");
    config->cfg.output_dir = dir;
  });
}

seld_status seld_config_to_json(const seld_config* config, char* buf, size_t len, size_t* needed) {
  return Guard([&] {
    Require(config, "null config");
    CopyOut(config->cfg.ToJson(), buf, len, needed);
  });
}

seld_status seld_config_output_dir(const seld_config* config, char* buf, size_t len, size_t* needed) {
  return Guard([&] {
    Require(config, "null config");
    CopyOut(config->cfg.output_dir, buf, len, needed);
  });
}

seld_status seld_config_hash(const seld_config* config, char* buf, size_t len, size_t* needed) {
  return Guard([&] {
    Require(config, "null config");
    CopyOut(config->cfg.Hash(), buf, len, needed);
  });
}

seld_status seld_train(const seld_config* config, seld_progress_fn progress, void* user) {
  return Guard([&] {
    Require(config, "null config");
    seld::pipeline::RunTrain(config->cfg, Wrap(progress, user));
  });
}

seld_status seld_test(const seld_config* config, seld_progress_fn progress, void* user,
                      size_t* rows_written) {
  return Guard([&] {
    Require(config, "null config");
    auto r = seld::pipeline::RunTest(config->cfg, Wrap(progress, user));
    if (rows_written) *rows_written = r.rows;
  });
}

seld_status seld_report(const char* const* metric_csvs, size_t count, const char* out_dir) {
  return Guard([&] {
    Require(out_dir && (metric_csvs || count == 0), "null argument");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < count; ++i) {
      Require(metric_csvs[i], "null metrics path");
      paths.emplace_back(metric_csvs[i]);
    }
    seld::pipeline::EmitReport(paths, out_dir);
  });
}

seld_status seld_write_suites(const seld_config* config) {
  return Guard([&] {
    Require(config, "null config");
    seld::pipeline::WriteSuites(config->cfg);
  });
}

seld_status seld_fit_segregation(const seld_config* config, seld_progress_fn progress, void* user,
                                 seld_obs_model** out) {
  return Guard([&] {
    Require(config && out, "null argument");
    auto fit = seld::pipeline::FitSegregation(config->cfg, Wrap(progress, user));
    *out = new seld_obs_model{std::move(fit.model)};
  });
}

seld_status seld_obs_model_load(const char* path, seld_obs_model** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    *out = new seld_obs_model{seld::seg::LoadModel(path)};
  });
}

seld_status seld_obs_model_save(const seld_obs_model* model, const char* path) {
  return Guard([&] {
    Require(model && path, "null argument");
    seld::seg::SaveModel(path, model->model);
  });
}

void seld_obs_model_free(seld_obs_model* model) { delete model; }

int seld_obs_model_order(const seld_obs_model* model) { return model ? model->model.order : 0; }

size_t seld_obs_model_channels(const seld_obs_model* model) {
  return model ? model->model.num_channels() : 0;
}

seld_status seld_obs_model_predict(const seld_obs_model* model, double azimuth_deg, double* itd_s,
                                   double* ild_db) {
  return Guard([&] {
    Require(model && itd_s && ild_db, "null argument");
    auto p = seld::seg::PredictCues(model->model, azimuth_deg);
    std::copy(p.itd_s.begin(), p.itd_s.end(), itd_s);
    std::copy(p.ild_db.begin(), p.ild_db.end(), ild_db);
  });
}

seld_status seld_detector_load(const char* path, seld_detector** out) {
  return Guard([&] {
    Require(path && out, "null argument");
    *out = new seld_detector{seld::lasso::LoadModel(path)};
  });
}

void seld_detector_free(seld_detector* detector) { delete detector; }

size_t seld_detector_dimension(const seld_detector* detector) {
  return detector ? detector->model.weights.size() : 0;
}

seld_status seld_detector_margin(const seld_detector* detector, const float* x, size_t n,
                                 double* margin) {
  return Guard([&] {
    Require(detector && x && margin, "null argument");
    if (n != detector->model.weights.size())
      seld::Fail(seld::ErrorCode::kMismatch, "feature vector has the wrong dimension");
    *margin = detector->model.Margin({x, n});
  });
}

}  // extern "C"
