// Copyright 2026 The fleetrl Authors.
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

/* C interface to the fleetrl library.
 *
 * Objects are opaque handles created by the library and released with the
 * matching *_free function. Every function that can fail returns a
 * fleetrl_status; on failure fleetrl_last_error() describes the problem
 * until the next call on the same thread. Output pointers are written only
 * on success. */
#ifndef FLEETRL_FLEETRL_H_
#define FLEETRL_FLEETRL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(FLEETRL_BUILDING_LIBRARY)
#define FLEETRL_API __attribute__((visibility("default")))
#else
#define FLEETRL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fleetrl_status {
  FLEETRL_OK = 0,
  FLEETRL_ERR_INPUT = 1,       /* malformed or inconsistent input */
  FLEETRL_ERR_DOMAIN = 2,      /* parameter outside its valid range */
  FLEETRL_ERR_INDEX = 3,       /* unknown cell or state-action pair */
  FLEETRL_ERR_IO = 4,          /* file could not be read or written */
  FLEETRL_ERR_CONVERGENCE = 5, /* iterative solver gave up */
  FLEETRL_ERR_INTERNAL = 6
} fleetrl_status;

typedef struct fleetrl_demand fleetrl_demand;
typedef struct fleetrl_solution fleetrl_solution;
typedef struct fleetrl_sim_config fleetrl_sim_config;
typedef struct fleetrl_run fleetrl_run;
typedef struct fleetrl_sweep fleetrl_sweep;
typedef struct fleetrl_assignment fleetrl_assignment;

FLEETRL_API const char* fleetrl_version(void);
FLEETRL_API const char* fleetrl_last_error(void);
/* Nonzero for statuses caused by the caller's input rather than the library. */
FLEETRL_API int fleetrl_is_user_error(fleetrl_status status);

/* --- demand models ------------------------------------------------------ */

typedef struct fleetrl_ingest_stats {
  uint64_t rows;
  uint64_t accepted;
  uint64_t rejected;
  int high_rejection;
} fleetrl_ingest_stats;

/* Reads a trip file and estimates L and D. config_json is
 * {"grid": {"rows", "cols", "cell_km", "origin", "projection"},
 *  "window_ticks": n, "max_departure_mass": x}; NULL selects defaults.
 * stats may be NULL. */
FLEETRL_API fleetrl_status fleetrl_demand_estimate(const char* trips_path, const char* config_json,
                                                   fleetrl_demand** out,
                                                   fleetrl_ingest_stats* stats);
FLEETRL_API fleetrl_status fleetrl_demand_load(const char* path, fleetrl_demand** out);
FLEETRL_API fleetrl_status fleetrl_demand_save(const fleetrl_demand* demand, const char* path);
FLEETRL_API size_t fleetrl_demand_n_cells(const fleetrl_demand* demand);
FLEETRL_API fleetrl_status fleetrl_demand_get(const fleetrl_demand* demand, size_t from, size_t to,
                                              double* probability, double* reward);
FLEETRL_API void fleetrl_demand_free(fleetrl_demand* demand);

/* --- MDP solutions ------------------------------------------------------ */

/* eval_sweeps <= 0 and tol <= 0 select the defaults. */
FLEETRL_API fleetrl_status fleetrl_solve(const fleetrl_demand* demand, double gamma,
                                         int eval_sweeps, double tol, fleetrl_solution** out);
FLEETRL_API fleetrl_status fleetrl_solution_load(const char* path, fleetrl_solution** out);
FLEETRL_API fleetrl_status fleetrl_solution_save(const fleetrl_solution* solution,
                                                 const char* path);
FLEETRL_API fleetrl_status fleetrl_solution_q(const fleetrl_solution* solution, size_t state,
                                              size_t destination, double* value);
/* Destination ranked at position rank (0 = best) for a state. */
FLEETRL_API fleetrl_status fleetrl_solution_ranked(const fleetrl_solution* solution, size_t state,
                                                   size_t rank, size_t* destination);
FLEETRL_API size_t fleetrl_solution_n_cells(const fleetrl_solution* solution);
/* Bellman residual of a fresh solve; 0 for loaded solutions. */
FLEETRL_API double fleetrl_solution_residual(const fleetrl_solution* solution);
FLEETRL_API void fleetrl_solution_free(fleetrl_solution* solution);

/* --- simulation --------------------------------------------------------- */

FLEETRL_API fleetrl_status fleetrl_sim_config_load(const char* path, fleetrl_sim_config** out);
FLEETRL_API fleetrl_status fleetrl_sim_config_parse(const char* json, fleetrl_sim_config** out);
FLEETRL_API void fleetrl_sim_config_set_seed(fleetrl_sim_config* config, uint64_t seed);
FLEETRL_API void fleetrl_sim_config_free(fleetrl_sim_config* config);

FLEETRL_API fleetrl_status fleetrl_simulate(const fleetrl_sim_config* config, fleetrl_run** out);
FLEETRL_API double fleetrl_run_total_revenue(const fleetrl_run* run);
FLEETRL_API int64_t fleetrl_run_ticks(const fleetrl_run* run);
/* Copies a NUL-terminated string into buf and returns its full length
 * (excluding the NUL), like snprintf. */
FLEETRL_API size_t fleetrl_run_dir_name(const fleetrl_run* run, char* buf, size_t len);
FLEETRL_API size_t fleetrl_run_summary(const fleetrl_run* run, char* buf, size_t len);
/* Writes the run's CSV files and summary.json into dir. */
FLEETRL_API fleetrl_status fleetrl_run_export(const fleetrl_run* run, const char* dir);
FLEETRL_API void fleetrl_run_free(fleetrl_run* run);

/* --- sweeps ------------------------------------------------------------- */

typedef struct fleetrl_sweep_row {
  uint64_t n_agents;
  double r_comm;
  uint64_t seed;
  double numerator;
  double denominator;
  double ratio;
} fleetrl_sweep_row;

/* Runs a matched-seed policy comparison described by a JSON document. */
FLEETRL_API fleetrl_status fleetrl_sweep_run(const char* json, fleetrl_sweep** out);
FLEETRL_API size_t fleetrl_sweep_size(const fleetrl_sweep* sweep);
FLEETRL_API fleetrl_status fleetrl_sweep_row_at(const fleetrl_sweep* sweep, size_t k,
                                                fleetrl_sweep_row* row);
FLEETRL_API fleetrl_status fleetrl_sweep_export(const fleetrl_sweep* sweep, const char* dir);
FLEETRL_API void fleetrl_sweep_free(fleetrl_sweep* sweep);

/* --- bounds ------------------------------------------------------------- */

FLEETRL_API fleetrl_status fleetrl_kappa_bound(double epsilon, double delta, double gamma,
                                               double r_inf, double* d, double* kappa);

typedef struct fleetrl_tracking_bounds {
  double delta_q;
  double delta_omega;
  double max_sigma;
  int infinite;
  int periodically_connected; /* b = 1 over the whole sequence */
} fleetrl_tracking_bounds;

/* From a "tick,row,col,weight" schedule file. */
FLEETRL_API fleetrl_status fleetrl_schedule_bounds(const char* schedule_path, double r_max,
                                                   double dr_max, fleetrl_tracking_bounds* out);
/* From a finished distributed run; negative r_max / dr_max use the values
 * observed during the run. */
FLEETRL_API fleetrl_status fleetrl_run_bounds(const fleetrl_run* run, double r_max, double dr_max,
                                              fleetrl_tracking_bounds* out);

/* --- assignment games --------------------------------------------------- */

/* Solves one game instance (JSON) by binary log-linear learning. */
FLEETRL_API fleetrl_status fleetrl_assign(const char* instance_json, uint64_t seed,
                                          fleetrl_assignment** out);
FLEETRL_API size_t fleetrl_assignment_size(const fleetrl_assignment* a);
/* Task ids held by an agent; -1 when absent. */
FLEETRL_API fleetrl_status fleetrl_assignment_agent(const fleetrl_assignment* a, size_t agent,
                                                    int64_t* first_task, int64_t* second_task);
FLEETRL_API double fleetrl_assignment_potential(const fleetrl_assignment* a);
FLEETRL_API int fleetrl_assignment_converged(const fleetrl_assignment* a);
FLEETRL_API fleetrl_status fleetrl_assignment_export(const fleetrl_assignment* a, const char* dir);
FLEETRL_API void fleetrl_assignment_free(fleetrl_assignment* a);

#ifdef __cplusplus
}
#endif

#endif /* FLEETRL_FLEETRL_H_ */
