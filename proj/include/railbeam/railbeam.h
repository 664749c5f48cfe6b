// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


/* C interface of the railbeam library. Every function returns one of the
 * RB_* status codes; on failure rb_last_error() describes the problem for
 * the calling thread. Strings returned through char** are owned by the
 * caller and released with rb_free. Configuration travels as JSON text. */

#ifndef RAILBEAM_RAILBEAM_H
#define RAILBEAM_RAILBEAM_H

#include <stddef.h>

#if defined(_WIN32)
#define RB_API __declspec(dllexport)
#else
#define RB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
    RB_OK = 0,
    RB_ERR_VALIDATION = 1, /* bad input or configuration */
    RB_ERR_INVARIANT = 2,  /* a self-check or integrity check failed */
    RB_ERR_RUNTIME = 3     /* I/O, divergence, anything else */
};

typedef struct rb_predictor rb_predictor;
typedef struct rb_experiment rb_experiment;

RB_API const char* rb_version(void);
RB_API const char* rb_last_error(void);
RB_API void rb_free(char* s);

/* Worker threads for parallel stages; 0 reads RAILBEAM_WORKERS. */
RB_API void rb_set_workers(size_t workers);

/* Built scenario geometry, cell list and hash for a ScenarioConfig. */
RB_API int rb_scenario_dump(const char* scenario_json, char** out_json);

/* Set A beam labels for one UPA plus the Set B selected at `ratio`
 * ("1/16") with `pattern` ("equidistant" or "random"). */
RB_API int rb_codebook_show(size_t rows, size_t cols, size_t oversampling, double spacing_wl, const char* ratio,
                            const char* pattern, unsigned long long seed, char** out_json);

/* Writes per-slot L1-RSRP as CSV (slot,cell,beam,rsrp_dbm). Config keys:
 * scenario, channel, seed, first_slot, n_slots, cells (optional list). */
RB_API int rb_channel_export(const char* config_json, const char* csv_path, char** summary_json);

/* Generates a dataset directory. Config keys: kind ("beam" or "cell"),
 * scenario, channel, dataset. */
RB_API int rb_dataset_generate(const char* config_json, const char* out_dir, char** meta_json);

/* Trains `predictor_id` on a dataset directory. train_json may be NULL. */
RB_API int rb_predictor_train(const char* dataset_dir, const char* predictor_id, const char* train_json,
                              int full_scale, unsigned long long seed, rb_predictor** out, char** result_json);
RB_API int rb_predictor_load(const char* path, rb_predictor** out);
RB_API int rb_predictor_save(const rb_predictor* p, const char* path);
RB_API int rb_predictor_meta(const rb_predictor* p, char** out_json);
RB_API void rb_predictor_destroy(rb_predictor* p);

/* Test metrics on one split ("train", "val", "test") of a dataset. */
RB_API int rb_predictor_eval(const rb_predictor* p, const char* dataset_dir, const char* split, char** out_json);

/* Handover simulation. Config keys: scenario, channel, cell_scenario
 * (optional), simulation, forecast ("none", "oracle", "model"). A model
 * forecast needs `p`. Events of every pass go to events_csv_path when it is
 * not NULL. */
RB_API int rb_simulate(const char* config_json, const rb_predictor* p, const char* events_csv_path,
                       char** report_json);

RB_API int rb_experiment_load(const char* path, rb_experiment** out);
RB_API int rb_experiment_from_json(const char* json, rb_experiment** out);
RB_API int rb_experiment_set_output_dir(rb_experiment* e, const char* dir);
RB_API int rb_experiment_config(const rb_experiment* e, char** out_json);
/* Runs the sweep; progress lines go to stderr when verbose is non-zero. */
RB_API int rb_experiment_run(rb_experiment* e, int verbose, char** summary_json);
RB_API void rb_experiment_destroy(rb_experiment* e);

/* Report of an artifact directory; style "fig3" or "table2", format "csv"
 * or "json". */
RB_API int rb_report(const char* dir, const char* style, const char* format, char** out);

/* Runs the invariant suite. Returns RB_ERR_INVARIANT when any check fails;
 * the report lists every check either way. */
RB_API int rb_verify(const char* scratch_dir, char** report_json);

#ifdef __cplusplus
}
#endif

#endif
