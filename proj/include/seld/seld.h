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


// C interface to the binaural sound event localization and detection
// toolkit. All objects are opaque handles; every fallible call returns a
// seld_status and leaves a message in seld_last_error().

#ifndef SELD_SELD_H_
#define SELD_SELD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SELD_BUILDING_LIBRARY)
#define SELD_API __attribute__((visibility("default")))
#else
#define SELD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum seld_status {
  SELD_OK = 0,
  SELD_ERR_INVALID_ARGUMENT = 1,
  SELD_ERR_IO = 2,
  SELD_ERR_CONFIG = 3,
  SELD_ERR_NUMERIC = 4,
  SELD_ERR_MISMATCH = 5,
  SELD_ERR_INTERNAL = 6
} seld_status;

typedef struct seld_config seld_config;
typedef struct seld_obs_model seld_obs_model;
typedef struct seld_detector seld_detector;

// Called with one human-readable line per pipeline step. May be invoked
// from worker threads.
typedef void (*seld_progress_fn)(const char* message, void* user);

SELD_API const char* seld_version(void);
// Message of the last failed call on this thread; empty after success.
SELD_API const char* seld_last_error(void);
SELD_API const char* seld_status_name(seld_status status);

SELD_API seld_status seld_config_default(seld_config** out);
SELD_API seld_status seld_config_load(const char* path, seld_config** out);
SELD_API seld_status seld_config_from_json(const char* json, seld_config** out);
SELD_API void seld_config_free(seld_config* config);
// `name` is "master" or one of the named stream seeds.
SELD_API seld_status seld_config_set_seed(seld_config* config, const char* name, uint64_t value);
SELD_API seld_status seld_config_set_threads(seld_config* config, int threads);
SELD_API seld_status seld_config_set_output_dir(seld_config* config, const char* dir);
// String outputs follow snprintf conventions: `needed` receives the full
// length without the terminator; a too-small buffer is not an error.
SELD_API seld_status seld_config_to_json(const seld_config* config, char* buf, size_t len, size_t* needed);
SELD_API seld_status seld_config_output_dir(const seld_config* config, char* buf, size_t len, size_t* needed);
SELD_API seld_status seld_config_hash(const seld_config* config, char* buf, size_t len, size_t* needed);

SELD_API seld_status seld_train(const seld_config* config, seld_progress_fn progress, void* user);
// Writes <output_dir>/metrics.csv.
SELD_API seld_status seld_test(const seld_config* config, seld_progress_fn progress, void* user,
                               size_t* rows_written);
SELD_API seld_status seld_report(const char* const* metric_csvs, size_t count, const char* out_dir);
SELD_API seld_status seld_write_suites(const seld_config* config);

SELD_API seld_status seld_fit_segregation(const seld_config* config, seld_progress_fn progress,
                                          void* user, seld_obs_model** out);
SELD_API seld_status seld_obs_model_load(const char* path, seld_obs_model** out);
SELD_API seld_status seld_obs_model_save(const seld_obs_model* model, const char* path);
SELD_API void seld_obs_model_free(seld_obs_model* model);
SELD_API int seld_obs_model_order(const seld_obs_model* model);
SELD_API size_t seld_obs_model_channels(const seld_obs_model* model);
// Expected ITD (seconds) and ILD (dB) per channel; the arrays must hold
// seld_obs_model_channels() values.
SELD_API seld_status seld_obs_model_predict(const seld_obs_model* model, double azimuth_deg,
                                            double* itd_s, double* ild_db);

SELD_API seld_status seld_detector_load(const char* path, seld_detector** out);
SELD_API void seld_detector_free(seld_detector* detector);
SELD_API size_t seld_detector_dimension(const seld_detector* detector);
SELD_API seld_status seld_detector_margin(const seld_detector* detector, const float* x, size_t n,
                                          double* margin);

#ifdef __cplusplus
}
#endif

#endif  // SELD_SELD_H_
