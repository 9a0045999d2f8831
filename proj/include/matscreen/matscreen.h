/*
 * Copyright 2026 The matscreen Authors
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

/*
 * C interface of the matscreen engine.
 *
 * Every call returns an ms_status. On failure a message is available from
 * ms_last_error() on the calling thread until that thread's next call.
 * Objects returned through out-parameters are owned by the caller and must
 * be released with the matching *_free function. Option arguments are JSON
 * object texts; NULL or "" selects the defaults. Units: eV, A, fs, amu, K.
 */

#ifndef MATSCREEN_MATSCREEN_H_
#define MATSCREEN_MATSCREEN_H_

#include <stddef.h>

#if defined(MATSCREEN_BUILDING_LIBRARY)
#define MS_API __attribute__((visibility("default")))
#else
#define MS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ms_status {
  MS_OK = 0,
  MS_ERR_INVALID_ARGUMENT = 1,
  MS_ERR_PARSE = 2,
  MS_ERR_RUNTIME = 3,
  MS_ERR_IO = 4,
  MS_ERR_NOT_FOUND = 5,
  MS_ERR_INTERNAL = 6
} ms_status;

typedef struct ms_structure ms_structure;
typedef struct ms_potential ms_potential;
/* Text output with one primary JSON document and optional named parts such
 * as "dispersion.csv" or "checkpoint". */
typedef struct ms_result ms_result;

MS_API const char* ms_version(void);
MS_API const char* ms_last_error(void);
MS_API const char* ms_status_name(ms_status status);
/* n >= 1 worker threads for parallel stages. */
MS_API ms_status ms_set_threads(int n);

/* ---- results ---------------------------------------------------------- */
MS_API const char* ms_result_text(const ms_result* r);
MS_API size_t ms_result_size(const ms_result* r);
/* NULL when the part does not exist. */
MS_API const char* ms_result_part(const ms_result* r, const char* name);
MS_API size_t ms_result_part_count(const ms_result* r);
MS_API const char* ms_result_part_name(const ms_result* r, size_t index);
MS_API void ms_result_free(ms_result* r);

/* ---- structures ------------------------------------------------------- */
/* format: "poscar" or "extxyz" (first frame). */
MS_API ms_status ms_structure_read(const char* text, const char* format, ms_structure** out);
MS_API ms_status ms_structure_write(const ms_structure* s, const char* format, ms_result** out);
MS_API ms_status ms_structure_size(const ms_structure* s, size_t* natoms);
MS_API ms_status ms_structure_volume(const ms_structure* s, double* volume);
/* Cartesian positions as natoms x 3 doubles. */
MS_API ms_status ms_structure_positions(const ms_structure* s, double* xyz, size_t capacity);
MS_API void ms_structure_free(ms_structure* s);

/* ---- potentials ------------------------------------------------------- */
MS_API ms_status ms_potential_load(const char* checkpoint_json, ms_potential** out);
MS_API ms_status ms_potential_save(const ms_potential* p, ms_result** out);
MS_API ms_status ms_potential_kind(const ms_potential* p, ms_result** out);
MS_API void ms_potential_free(ms_potential* p);
/* {"energy", "forces", "stress", "max_force"} */
MS_API ms_status ms_evaluate(const ms_potential* p, const ms_structure* s, ms_result** out);

/* ---- operations ------------------------------------------------------- */
/* Trains one model (one seed) or an ensemble (two or more seeds) on labeled
 * extended XYZ frames. Parts: "checkpoint". */
MS_API ms_status ms_fit(const char* extxyz_text, const char* options_json, ms_result** out);
/* Parts: "poscar". relaxed may be NULL. */
MS_API ms_status ms_relax(const ms_potential* p, const ms_structure* s, const char* options_json,
                          ms_structure** relaxed, ms_result** out);
/* Parts: "dispersion.csv", "dos.csv", "thermo.csv". */
MS_API ms_status ms_phonon(const ms_potential* p, const ms_structure* s, const char* options_json,
                           ms_result** out);
/* Parts: "elastic.csv". */
MS_API ms_status ms_elastic(const ms_potential* p, const ms_structure* s, const char* options_json,
                            ms_result** out);
/* Parts: "shear.csv". */
MS_API ms_status ms_shear(const ms_potential* p, const ms_structure* s, const char* options_json,
                          ms_result** out);
/* Parts: "msd.csv" and, when requested, "trajectory.extxyz". */
MS_API ms_status ms_md(const ms_potential* p, const ms_structure* s, const char* options_json, ms_result** out);
/* Parts: "extxyz". */
MS_API ms_status ms_generate(const char* spec_json, size_t count, ms_result** out);

/* Campaign-level calls take a campaign configuration text. */
/* Parts: "cycles.jsonl", "checkpoint". */
MS_API ms_status ms_active_learning(const char* config_json, ms_result** out);
/* Parts: "polymorphs.csv", "diffusivity.csv", "dopants.csv", "ledger". */
MS_API ms_status ms_screen(const char* config_json, ms_result** out);
/* Hosts are POSCAR texts with ids; with n_hosts == 0 the top-ranked hosts of
 * the campaign report under the output directory are used. Parts:
 * "dopants.csv". */
MS_API ms_status ms_dope(const char* config_json, const char* const* host_ids, const char* const* host_poscars,
                         size_t n_hosts, ms_result** out);
/* ledger_json may be NULL: the campaign ledger under the output directory is
 * used when present. Parts: "cost.csv". */
MS_API ms_status ms_cost(const char* config_json, const char* ledger_json, ms_result** out);
/* {"checked", "mismatches", "ok"}; a mismatch is not an error status. */
MS_API ms_status ms_verify(const char* config_json, double fraction, ms_result** out);

#ifdef __cplusplus
}
#endif

#endif /* MATSCREEN_MATSCREEN_H_ */
