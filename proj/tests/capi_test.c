/*
 * Copyright 2026 The seld Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Exercises the C interface from a C translation unit. */

#include <stdio.h>
#include <string.h>

#include "seld/seld.h"

static int failures = 0;

#define EXPECT(cond)                                              \
  do {                                                            \
    if (!(cond)) {                                                \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                 \
    }                                                             \
  } while (0)

int main(void) {
  seld_config* cfg = NULL;
  char buf[64];
  size_t needed = 0;

  EXPECT(strlen(seld_version()) > 0);
  EXPECT(strcmp(seld_status_name(SELD_ERR_MISMATCH), "mismatch") == 0);

  EXPECT(seld_config_default(&cfg) == SELD_OK);
  EXPECT(seld_config_hash(cfg, buf, sizeof(buf), &needed) == SELD_OK);
  EXPECT(needed == 16 && strlen(buf) == 16);
  char first[64];
  strcpy(first, buf);

  EXPECT(seld_config_set_threads(cfg, 3) == SELD_OK);
  EXPECT(seld_config_hash(cfg, buf, sizeof(buf), NULL) == SELD_OK);
  EXPECT(strcmp(first, buf) == 0);
  EXPECT(seld_config_set_seed(cfg, "master", 5) == SELD_OK);
  EXPECT(seld_config_hash(cfg, buf, sizeof(buf), NULL) == SELD_OK);
  EXPECT(strcmp(first, buf) != 0);

  EXPECT(seld_config_set_seed(cfg, "no_such_seed", 1) == SELD_ERR_CONFIG);
  EXPECT(strstr(seld_last_error(), "no_such_seed") != NULL);
  EXPECT(seld_config_set_output_dir(cfg, "") == SELD_ERR_INVALID_ARGUMENT);

  /* Truncated output still reports the full length. */
  char tiny[4];
  EXPECT(seld_config_output_dir(cfg, tiny, sizeof(tiny), &needed) == SELD_OK);
  EXPECT(needed == strlen("seld_out") && strlen(tiny) == 3);

  seld_config* bad = NULL;
  EXPECT(seld_config_from_json("{\"unknown_key\": 1}", &bad) == SELD_ERR_CONFIG);
  EXPECT(bad == NULL);
  EXPECT(seld_config_load("/nonexistent/config.json", &bad) == SELD_ERR_IO);
  EXPECT(seld_config_from_json(NULL, &bad) == SELD_ERR_INVALID_ARGUMENT);

  /* Running tests without trained models fails cleanly. */
  EXPECT(seld_config_set_output_dir(cfg, "/nonexistent/seld_models") == SELD_OK);
  EXPECT(seld_test(cfg, NULL, NULL, NULL) == SELD_ERR_IO);
  EXPECT(strlen(seld_last_error()) > 0);

  const char* none[1] = {NULL};
  EXPECT(seld_report(none, 0, "/tmp/seld_capi_report") == SELD_ERR_INVALID_ARGUMENT);

  seld_obs_model* model = NULL;
  EXPECT(seld_obs_model_load("/nonexistent/model.json", &model) == SELD_ERR_IO);
  EXPECT(seld_obs_model_channels(NULL) == 0);
  seld_detector* det = NULL;
  EXPECT(seld_detector_load("/nonexistent/det.json", &det) == SELD_ERR_IO);

  seld_config_free(cfg);
  seld_config_free(NULL);
  if (failures == 0) printf("capi: all checks passed\n");
  return failures == 0 ? 0 : 1;
}
