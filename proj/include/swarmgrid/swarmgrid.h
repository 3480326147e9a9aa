/*
 * swarmgrid C API.
 *
 * Every function returning sg_status reports failures through the status code
 * and a message readable with sg_last_error() on the calling thread. Strings
 * returned through `char**` are heap copies owned by the caller; release them
 * with sg_string_free(). Handles are opaque and not thread-safe; use one handle
 * per thread or synchronise externally.
 */
#ifndef SWARMGRID_H
#define SWARMGRID_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SG_API __declspec(dllexport)
#else
#define SG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sg_status {
  SG_OK = 0,
  SG_ERR_INVALID_CONFIG = 1,
  SG_ERR_PLACEMENT = 2,
  SG_ERR_CAPACITY = 3,
  SG_ERR_LOOKUP = 4,
  SG_ERR_INVALID_ACTION = 5,
  SG_ERR_PARSE = 6,
  SG_ERR_VALIDATION = 7,
  SG_ERR_IO = 8,
  SG_ERR_FORMAT = 9,
  SG_ERR_UNSUPPORTED_VERSION = 10,
  SG_ERR_DIVERGENCE = 11,
  SG_ERR_CONTRACT = 12,
  SG_ERR_ORACLE_TOO_LARGE = 13,
  SG_ERR_STATE = 14,
  SG_ERR_NULL_ARGUMENT = 100,
  SG_ERR_INTERNAL = 101
} sg_status;

SG_API const char* sg_version(void);
SG_API const char* sg_status_name(sg_status status);
/* Message of the last failure on this thread; "" if none. */
SG_API const char* sg_last_error(void);
SG_API void sg_string_free(char* s);

/* ------------------------------------------------------------ environments */

typedef struct sg_env sg_env;

typedef struct sg_obs_shape {
  int32_t channels;
  int32_t height;
  int32_t width;
  int32_t features;
  int32_t n_actions;
} sg_obs_shape;

enum { SG_EVENT_ATTACK = 0, SG_EVENT_KILL = 1, SG_EVENT_DIE = 2, SG_EVENT_COLLIDE = 3 };

typedef struct sg_event {
  uint32_t kind;
  uint32_t actor;
  uint32_t target; /* victim, blocking agent, or 0xFFFFFFFE for a wall */
} sg_event;

/* Built-in name ("pursuit", "gathering", "battle", "tiny-pursuit") or path to
 * a scenario JSON file. The environment is reset with the scenario seed. */
SG_API sg_status sg_env_open(const char* scenario, sg_env** out);
SG_API sg_status sg_env_from_json(const char* json, sg_env** out);
/* Built-in scenario at a custom scale; zero / NULL keeps the default. */
SG_API sg_status sg_env_builtin(const char* name, int32_t map_size, const uint32_t* populations, size_t n_populations,
                                uint64_t max_steps, sg_env** out);
SG_API void sg_env_destroy(sg_env* env);

SG_API sg_status sg_env_config_json(const sg_env* env, char** out);
SG_API sg_status sg_env_reset(sg_env* env, uint64_t seed);
SG_API sg_status sg_env_group_count(const sg_env* env, size_t* out);
SG_API sg_status sg_env_group_index(const sg_env* env, const char* name, size_t* out);
/* The pointer stays valid for the lifetime of env. */
SG_API sg_status sg_env_group_name(const sg_env* env, size_t group, const char** out);
SG_API sg_status sg_env_shape(const sg_env* env, size_t group, sg_obs_shape* out);
SG_API sg_status sg_env_population(const sg_env* env, size_t group, size_t* out);

/* Observation of every living member of `group`, ascending id. `views` holds
 * capacity * channels*height*width floats and `features` capacity * features.
 * Fails with SG_ERR_CONTRACT if capacity is below the population. */
SG_API sg_status sg_env_observe(const sg_env* env, size_t group, uint32_t* ids, float* views, float* features,
                                size_t capacity);

/* `actions` lists the action index of every living agent, groups in order and
 * members in ascending id within each group. */
SG_API sg_status sg_env_step(sg_env* env, const uint32_t* actions, size_t n_actions, int* done);
/* Rewards of the last step for the living members of `group`, aligned with
 * sg_env_observe. */
SG_API sg_status sg_env_rewards(const sg_env* env, size_t group, double* out, size_t capacity);
SG_API sg_status sg_env_events(const sg_env* env, sg_event* out, size_t capacity, size_t* count);
SG_API sg_status sg_env_done(const sg_env* env, int* out);
SG_API sg_status sg_env_step_count(const sg_env* env, uint64_t* out);
SG_API sg_status sg_env_spawn(sg_env* env, size_t group, int32_t x, int32_t y, uint32_t* id);
SG_API sg_status sg_env_kill(sg_env* env, uint32_t id);

/* ------------------------------------------------------------ reward programs */

/* Parses and validates a reward program. With a schema environment, group
 * names and in() rectangles are checked against its groups and map; without,
 * only the program's own consistency is. On failure `report` (if non-NULL)
 * receives one "line:col: message" diagnostic per line. */
SG_API sg_status sg_dsl_check(const char* source, const sg_env* schema, char** report);
/* Canonical text of a program. */
SG_API sg_status sg_dsl_format(const char* source, char** out);

/* ------------------------------------------------------------ episodes */

typedef struct sg_runner sg_runner;

/* `assignments` are "group=spec" strings where spec is random, chase_nearest,
 * noop or a checkpoint path; unassigned groups act randomly. The runner copies
 * env and resets the copy with `seed`. */
SG_API sg_status sg_runner_create(const sg_env* env, const char* const* assignments, size_t n_assignments,
                                  uint64_t seed, sg_runner** out);
SG_API void sg_runner_destroy(sg_runner* runner);
/* Runs to the episode end or max_steps (0 = no cap), recording a replay when
 * record_path is non-NULL. `summary` receives a JSON document. */
SG_API sg_status sg_runner_run(sg_runner* runner, uint64_t max_steps, const char* record_path, char** summary);
SG_API sg_status sg_runner_summary(const sg_runner* runner, char** summary);

/* ------------------------------------------------------------ serving */

typedef struct sg_server sg_server;

typedef struct sg_serve_options {
  const char* address; /* default "127.0.0.1" */
  uint16_t port;       /* 0 picks a free port */
  double steps_per_second;
  int start_paused;
  uint64_t max_steps;      /* live sessions; 0 = episode end */
  const char* record_path; /* live sessions; NULL = no recording */
} sg_serve_options;

SG_API void sg_serve_options_default(sg_serve_options* opts);
/* Takes ownership of runner on success. */
SG_API sg_status sg_serve_live(sg_runner* runner, const sg_serve_options* opts, sg_server** out);
SG_API sg_status sg_serve_replay(const char* path, const sg_serve_options* opts, sg_server** out);
SG_API sg_status sg_server_port(const sg_server* server, uint16_t* port);
/* 1 once the source has no more frames, 0 on timeout. */
SG_API int sg_server_wait(const sg_server* server, uint32_t timeout_ms);
SG_API sg_status sg_server_summary(const sg_server* server, char** summary);
SG_API void sg_server_destroy(sg_server* server);

/* ------------------------------------------------------------ training */

typedef struct sg_train_config {
  double gamma;
  double learning_rate;
  uint32_t batch_size;
  uint32_t buffer_capacity;
  double epsilon_start;
  double epsilon_end;
  uint64_t epsilon_decay_steps;
  uint64_t target_sync_interval;
  uint32_t hidden;
  uint64_t total_steps;
  uint32_t train_every;
  uint64_t learning_starts;
  uint64_t eval_interval;
  uint32_t eval_episodes;
  double eval_epsilon;
  char opponent[16]; /* random, chase_nearest, noop or self */
  uint64_t seed;
} sg_train_config;

typedef void (*sg_curve_callback)(uint64_t step, double epsilon, double mean_reward, void* user);

SG_API void sg_train_config_default(sg_train_config* cfg);
/* "tiny-pursuit" is the only preset. */
SG_API sg_status sg_train_config_preset(const char* name, uint64_t seed, sg_train_config* cfg);
/* Trains `group` and writes the checkpoint and the step,epsilon,mean_reward
 * curve (each optional). On divergence the curve so far is kept, no checkpoint
 * is written, and SG_ERR_DIVERGENCE is returned. */
SG_API sg_status sg_train(const sg_env* env, const char* group, const sg_train_config* cfg,
                          const char* checkpoint_path, const char* curve_path, sg_curve_callback callback, void* user);
/* Dimensions and hyperparameters of a checkpoint as JSON. */
SG_API sg_status sg_checkpoint_info(const char* path, char** json);

/* ------------------------------------------------------------ replays and benchmark */

/* Frames, steps and final populations as JSON. A damaged file still yields a
 * summary with "truncated": true and SG_ERR_FORMAT. */
SG_API sg_status sg_replay_summary(const char* path, char** json);

typedef struct sg_bench_options {
  uint32_t agents;
  int32_t map;
  uint64_t steps;
  uint64_t seed;
  int observe;
} sg_bench_options;

SG_API void sg_bench_options_default(sg_bench_options* opts);
SG_API sg_status sg_bench(const sg_bench_options* opts, char** json);

#ifdef __cplusplus
}
#endif

#endif /* SWARMGRID_H */
