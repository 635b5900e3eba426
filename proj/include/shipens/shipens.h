/*
 * Copyright 2026 The shipens Authors
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

/* C interface to the shipens library. All functions are thread-safe with
 * respect to distinct handles. Strings returned by the library stay valid
 * until the owning handle is freed or, for shipens_last_error, until the next
 * call on the same thread. */

#ifndef SHIPENS_SHIPENS_H_
#define SHIPENS_SHIPENS_H_

#include <stddef.h>

#if defined(_WIN32)
#define SHIPENS_API __declspec(dllexport)
#else
#define SHIPENS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum shipens_status {
  SHIPENS_OK = 0,
  SHIPENS_ERR_INVALID_ARGUMENT = 1,
  SHIPENS_ERR_CONFIG = 2,
  SHIPENS_ERR_IO = 3,
  SHIPENS_ERR_PARSE = 4,
  SHIPENS_ERR_DIVERGED = 5,
  SHIPENS_ERR_TRAINING = 6,
  SHIPENS_ERR_RUNTIME = 7
} shipens_status;

typedef struct shipens_config shipens_config;
typedef struct shipens_ensemble shipens_ensemble;

SHIPENS_API const char* shipens_version(void);

/* Message of the last failed call on this thread ("" if none). */
SHIPENS_API const char* shipens_last_error(void);

/* Log lines from long-running commands go to stderr when enabled. */
SHIPENS_API void shipens_set_verbose(int verbose);

/* Load a JSON run configuration; path may be NULL for built-in defaults. */
SHIPENS_API shipens_status shipens_config_load(const char* path, shipens_config** out);

/* Apply one "a.b.c=value" override; value is JSON or a bare string. */
SHIPENS_API shipens_status shipens_config_set(shipens_config* cfg, const char* assignment);

/* Effective configuration as pretty-printed JSON. */
SHIPENS_API const char* shipens_config_json(const shipens_config* cfg);

SHIPENS_API void shipens_config_free(shipens_config* cfg);

/* Run one command: "scripts", "gen", "train", "predict" or "pdsweep". On
 * success *summary (optional) points at the run summary JSON, owned by cfg. */
SHIPENS_API shipens_status shipens_run(shipens_config* cfg, const char* command, const char** summary);

/* Trained ensemble artifact. */
SHIPENS_API shipens_status shipens_ensemble_load(const char* dir, shipens_ensemble** out);
SHIPENS_API size_t shipens_ensemble_size(const shipens_ensemble* ens);
SHIPENS_API void shipens_ensemble_free(shipens_ensemble* ens);

/* One RK4 step of member `member`. state and out are (x0, y0, psi, u, vm, r);
 * act is (delta_p, delta_s, n_bt); wind is (U_T, xi_T). */
SHIPENS_API shipens_status shipens_ensemble_step(const shipens_ensemble* ens, size_t member, const double* state,
                                                 const double* act, const double* wind, double dt, double* out);

#ifdef __cplusplus
}
#endif

#endif /* SHIPENS_SHIPENS_H_ */
