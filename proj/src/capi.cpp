#include "swarmgrid/swarmgrid.h"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <optional>
#include <sstream>

#include "swarmgrid/baselines.hpp"
#include "swarmgrid/bench.hpp"
#include "swarmgrid/replay.hpp"
#include "swarmgrid/reward_lang.hpp"
#include "swarmgrid/runner.hpp"
#include "swarmgrid/serve.hpp"

using namespace swarmgrid;

struct sg_env {
  Environment env;
  std::optional<StepResult> last;
};

struct sg_runner {
  std::unique_ptr<Runner> runner;
};

struct sg_server {
  std::unique_ptr<serve::Server> server;
  std::unique_ptr<std::ofstream> record;
};

namespace {

thread_local std::string g_last_error;

sg_status set_error(sg_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
sg_status guard(F&& f) {
  try {
    g_last_error.clear();
    f();
    return SG_OK;
  } catch (const Error& e) {
    return set_error(static_cast<sg_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(SG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(SG_ERR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

#define SG_REQUIRE(ptr) \
  if (!(ptr)) return set_error(SG_ERR_NULL_ARGUMENT, "null argument: " #ptr)

GroupId group_arg(const Environment& env, size_t g) {
  if (g >= env.group_count()) fail(ErrorCode::kLookup, "group index " + std::to_string(g) + " out of range");
  return static_cast<GroupId>(g);
}

sg_env* make_env(ScenarioConfig cfg) {
  const uint64_t seed = cfg.seed;
  auto* e = new sg_env{Environment(std::move(cfg)), std::nullopt};
  try {
    e->env.reset(seed);
  } catch (...) {
    delete e;
    throw;
  }
  return e;
}

std::string number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

dqn::TrainConfig from_c(const sg_train_config& c) {
  dqn::TrainConfig t;
  t.gamma = c.gamma;
  t.learning_rate = c.learning_rate;
  t.batch_size = c.batch_size;
  t.buffer_capacity = c.buffer_capacity;
  t.epsilon_start = c.epsilon_start;
  t.epsilon_end = c.epsilon_end;
  t.epsilon_decay_steps = c.epsilon_decay_steps;
  t.target_sync_interval = c.target_sync_interval;
  t.hidden = c.hidden;
  t.total_steps = c.total_steps;
  t.train_every = c.train_every;
  t.learning_starts = c.learning_starts;
  t.eval_interval = c.eval_interval;
  t.eval_episodes = c.eval_episodes;
  t.eval_epsilon = c.eval_epsilon;
  t.opponent = std::string(c.opponent, strnlen(c.opponent, sizeof c.opponent));
  t.seed = c.seed;
  return t;
}

void to_c(const dqn::TrainConfig& t, sg_train_config* c) {
  c->gamma = t.gamma;
  c->learning_rate = t.learning_rate;
  c->batch_size = t.batch_size;
  c->buffer_capacity = t.buffer_capacity;
  c->epsilon_start = t.epsilon_start;
  c->epsilon_end = t.epsilon_end;
  c->epsilon_decay_steps = t.epsilon_decay_steps;
  c->target_sync_interval = t.target_sync_interval;
  c->hidden = t.hidden;
  c->total_steps = t.total_steps;
  c->train_every = t.train_every;
  c->learning_starts = t.learning_starts;
  c->eval_interval = t.eval_interval;
  c->eval_episodes = t.eval_episodes;
  c->eval_epsilon = t.eval_epsilon;
  std::memset(c->opponent, 0, sizeof c->opponent);
  std::memcpy(c->opponent, t.opponent.data(), std::min(t.opponent.size(), sizeof c->opponent - 1));
  c->seed = t.seed;
}

nlohmann::json train_config_json(const dqn::TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"learning_rate", c.learning_rate},
          {"batch_size", c.batch_size},
          {"buffer_capacity", c.buffer_capacity},
          {"epsilon_start", c.epsilon_start},
          {"epsilon_end", c.epsilon_end},
          {"epsilon_decay_steps", c.epsilon_decay_steps},
          {"target_sync_interval", c.target_sync_interval},
          {"hidden", c.hidden},
          {"total_steps", c.total_steps},
          {"train_every", c.train_every},
          {"learning_starts", c.learning_starts},
          {"eval_interval", c.eval_interval},
          {"eval_episodes", c.eval_episodes},
          {"eval_epsilon", c.eval_epsilon},
          {"opponent", c.opponent},
          {"seed", c.seed}};
}

serve::ServeOptions serve_options(const sg_serve_options* o) {
  serve::ServeOptions s;
  if (!o) return s;
  if (o->address) s.address = o->address;
  s.port = o->port;
  s.steps_per_second = o->steps_per_second;
  s.start_paused = o->start_paused != 0;
  s.max_steps = o->max_steps;
  return s;
}

}  // namespace

extern "C" {

const char* sg_version(void) { return "0.1.0"; }

const char* sg_status_name(sg_status status) {
  switch (status) {
    case SG_OK: return "ok";
    case SG_ERR_NULL_ARGUMENT: return "null_argument";
    case SG_ERR_INTERNAL: return "internal";
    default: break;
  }
  if (status >= SG_ERR_INVALID_CONFIG && status <= SG_ERR_STATE) {
    return error_code_name(static_cast<ErrorCode>(status));
  }
  return "unknown";
}

const char* sg_last_error(void) { return g_last_error.c_str(); }

void sg_string_free(char* s) { std::free(s); }

// ---------------------------------------------------------------- environments

sg_status sg_env_open(const char* scenario, sg_env** out) {
  SG_REQUIRE(scenario);
  SG_REQUIRE(out);
  return guard([&] { *out = make_env(resolve_scenario(scenario)); });
}

sg_status sg_env_from_json(const char* json, sg_env** out) {
  SG_REQUIRE(json);
  SG_REQUIRE(out);
  return guard([&] { *out = make_env(parse_scenario(json)); });
}

sg_status sg_env_builtin(const char* name, int32_t map_size, const uint32_t* populations, size_t n_populations,
                         uint64_t max_steps, sg_env** out) {
  SG_REQUIRE(name);
  SG_REQUIRE(out);
  return guard([&] {
    ScenarioScale scale;
    scale.map_size = map_size;
    if (populations) scale.populations.assign(populations, populations + n_populations);
    scale.max_steps = max_steps;
    *out = make_env(builtin_scenario(name, scale));
  });
}

void sg_env_destroy(sg_env* env) { delete env; }

sg_status sg_env_config_json(const sg_env* env, char** out) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  return guard([&] { *out = dup(scenario_to_json(env->env.config())); });
}

sg_status sg_env_reset(sg_env* env, uint64_t seed) {
  SG_REQUIRE(env);
  return guard([&] {
    env->env.reset(seed);
    env->last.reset();
  });
}

sg_status sg_env_group_count(const sg_env* env, size_t* out) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  *out = env->env.group_count();
  return SG_OK;
}

sg_status sg_env_group_index(const sg_env* env, const char* name, size_t* out) {
  SG_REQUIRE(env);
  SG_REQUIRE(name);
  SG_REQUIRE(out);
  return guard([&] { *out = env->env.group_by_name(name); });
}

sg_status sg_env_group_name(const sg_env* env, size_t group, const char** out) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  return guard([&] { *out = env->env.config().groups[group_arg(env->env, group)].name.c_str(); });
}

sg_status sg_env_shape(const sg_env* env, size_t group, sg_obs_shape* out) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  return guard([&] {
    ObservationShape s = env->env.shape(group_arg(env->env, group));
    *out = {s.channels, s.height, s.width, s.features, s.n_actions};
  });
}

sg_status sg_env_population(const sg_env* env, size_t group, size_t* out) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  return guard([&] { *out = env->env.world().members(group_arg(env->env, group)).size(); });
}

sg_status sg_env_observe(const sg_env* env, size_t group, uint32_t* ids, float* views, float* features,
                         size_t capacity) {
  SG_REQUIRE(env);
  return guard([&] {
    GroupId g = group_arg(env->env, group);
    ObservationBatch b = observe_group(env->env.world(), g, env->env.config().observation);
    if (capacity < b.size()) {
      fail(ErrorCode::kContract, "capacity " + std::to_string(capacity) + " is below the population " +
                                     std::to_string(b.size()));
    }
    if (ids) std::copy(b.ids.begin(), b.ids.end(), ids);
    if (views) std::copy(b.views.begin(), b.views.end(), views);
    if (features) std::copy(b.features.begin(), b.features.end(), features);
  });
}

sg_status sg_env_step(sg_env* env, const uint32_t* actions, size_t n_actions, int* done) {
  SG_REQUIRE(env);
  if (n_actions) SG_REQUIRE(actions);
  return guard([&] {
    const World& w = env->env.world();
    if (n_actions != w.population()) {
      fail(ErrorCode::kInvalidAction, "expected " + std::to_string(w.population()) + " actions, got " +
                                          std::to_string(n_actions));
    }
    std::vector<std::vector<ActionIndex>> per_group(env->env.group_count());
    size_t k = 0;
    for (size_t g = 0; g < per_group.size(); ++g) {
      size_t n = w.members(static_cast<GroupId>(g)).size();
      per_group[g].assign(actions + k, actions + k + n);
      k += n;
    }
    env->last = env->env.step(per_group);
    if (done) *done = env->last->done ? 1 : 0;
  });
}

sg_status sg_env_rewards(const sg_env* env, size_t group, double* out, size_t capacity) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  return guard([&] {
    GroupId g = group_arg(env->env, group);
    if (!env->last) fail(ErrorCode::kState, "no step taken since reset");
    const auto& r = env->last->groups[g].rewards;
    if (capacity < r.size()) fail(ErrorCode::kContract, "capacity below the population");
    std::copy(r.begin(), r.end(), out);
  });
}

sg_status sg_env_events(const sg_env* env, sg_event* out, size_t capacity, size_t* count) {
  SG_REQUIRE(env);
  SG_REQUIRE(count);
  return guard([&] {
    const EventLog empty;
    const EventLog& ev = env->last ? env->last->events : empty;
    *count = ev.size();
    if (!out) return;
    if (capacity < ev.size()) fail(ErrorCode::kContract, "capacity below the event count");
    for (size_t i = 0; i < ev.size(); ++i) {
      out[i] = {static_cast<uint32_t>(ev[i].kind), ev[i].actor, ev[i].target};
    }
  });
}

sg_status sg_env_done(const sg_env* env, int* out) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  *out = env->env.done() ? 1 : 0;
  return SG_OK;
}

sg_status sg_env_step_count(const sg_env* env, uint64_t* out) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  return guard([&] { *out = env->env.world().step_count(); });
}

sg_status sg_env_spawn(sg_env* env, size_t group, int32_t x, int32_t y, uint32_t* id) {
  SG_REQUIRE(env);
  return guard([&] {
    AgentId a = env->env.spawn_agent(group_arg(env->env, group), {x, y}, Direction::North);
    if (id) *id = a;
  });
}

sg_status sg_env_kill(sg_env* env, uint32_t id) {
  SG_REQUIRE(env);
  return guard([&] { env->env.kill_agent(id); });
}

// ---------------------------------------------------------------- reward programs

sg_status sg_dsl_check(const char* source, const sg_env* schema, char** report) {
  SG_REQUIRE(source);
  if (report) *report = nullptr;
  try {
    g_last_error.clear();
    reward::Program p = reward::parse_program(source);
    reward::Schema open_schema;
    open_schema.open = true;
    reward::validate(p, schema ? reward::schema_of(schema->env.world()) : open_schema);
    put(report, "");
    return SG_OK;
  } catch (const reward::DslError& e) {
    put(report, e.what());
    return set_error(static_cast<sg_status>(e.code()), e.what());
  } catch (const Error& e) {
    return set_error(static_cast<sg_status>(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(SG_ERR_INTERNAL, e.what());
  }
}

sg_status sg_dsl_format(const char* source, char** out) {
  SG_REQUIRE(source);
  SG_REQUIRE(out);
  return guard([&] { *out = dup(reward::print_program(reward::parse_program(source))); });
}

// ---------------------------------------------------------------- episodes

sg_status sg_runner_create(const sg_env* env, const char* const* assignments, size_t n_assignments, uint64_t seed,
                           sg_runner** out) {
  SG_REQUIRE(env);
  SG_REQUIRE(out);
  if (n_assignments) SG_REQUIRE(assignments);
  return guard([&] {
    std::map<std::string, std::string> specs;
    for (size_t i = 0; i < n_assignments; ++i) {
      std::string a = assignments[i] ? assignments[i] : "";
      auto eq = a.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == a.size()) {
        fail(ErrorCode::kInvalidConfig, "policy assignment '" + a + "' is not group=spec");
      }
      if (!specs.emplace(a.substr(0, eq), a.substr(eq + 1)).second) {
        fail(ErrorCode::kInvalidConfig, "group '" + a.substr(0, eq) + "' assigned twice");
      }
    }
    Environment copy = env->env;
    auto policies = policies_for(copy, specs);
    *out = new sg_runner{std::make_unique<Runner>(std::move(copy), std::move(policies), seed)};
  });
}

void sg_runner_destroy(sg_runner* runner) { delete runner; }

sg_status sg_runner_run(sg_runner* runner, uint64_t max_steps, const char* record_path, char** summary) {
  SG_REQUIRE(runner);
  SG_REQUIRE(runner->runner);
  return guard([&] {
    nlohmann::json s;
    if (record_path) {
      std::ofstream f(record_path, std::ios::binary | std::ios::trunc);
      if (!f) fail(ErrorCode::kIo, std::string("cannot open '") + record_path + "' for writing");
      s = run_episode(*runner->runner, max_steps, &f);
      f.close();
      if (!f) fail(ErrorCode::kIo, std::string("failed to write '") + record_path + "'");
    } else {
      s = run_episode(*runner->runner, max_steps, nullptr);
    }
    put(summary, s.dump());
  });
}

sg_status sg_runner_summary(const sg_runner* runner, char** summary) {
  SG_REQUIRE(runner);
  SG_REQUIRE(runner->runner);
  SG_REQUIRE(summary);
  return guard([&] { *summary = dup(runner->runner->summary().dump()); });
}

// ---------------------------------------------------------------- serving

void sg_serve_options_default(sg_serve_options* opts) {
  if (!opts) return;
  *opts = {"127.0.0.1", 0, 5.0, 0, 0, nullptr};
}

sg_status sg_serve_live(sg_runner* runner, const sg_serve_options* opts, sg_server** out) {
  SG_REQUIRE(runner);
  SG_REQUIRE(runner->runner);
  SG_REQUIRE(out);
  return guard([&] {
    auto srv = std::make_unique<sg_server>();
    serve::ServeOptions so = serve_options(opts);
    if (opts && opts->record_path) {
      srv->record = std::make_unique<std::ofstream>(opts->record_path, std::ios::binary | std::ios::trunc);
      if (!*srv->record) fail(ErrorCode::kIo, std::string("cannot open '") + opts->record_path + "' for writing");
      so.record = srv->record.get();
    }
    srv->server = serve::Server::live(std::move(runner->runner), so);
    delete runner;
    *out = srv.release();
  });
}

sg_status sg_serve_replay(const char* path, const sg_serve_options* opts, sg_server** out) {
  SG_REQUIRE(path);
  SG_REQUIRE(out);
  return guard([&] {
    auto srv = std::make_unique<sg_server>();
    srv->server = serve::Server::replay(path, serve_options(opts));
    *out = srv.release();
  });
}

sg_status sg_server_port(const sg_server* server, uint16_t* port) {
  SG_REQUIRE(server);
  SG_REQUIRE(port);
  *port = server->server->port();
  return SG_OK;
}

int sg_server_wait(const sg_server* server, uint32_t timeout_ms) {
  if (!server) return 0;
  return server->server->wait_finished(std::chrono::milliseconds(timeout_ms)) ? 1 : 0;
}

sg_status sg_server_summary(const sg_server* server, char** summary) {
  SG_REQUIRE(server);
  SG_REQUIRE(summary);
  return guard([&] { *summary = dup(server->server->summary().dump()); });
}

void sg_server_destroy(sg_server* server) {
  if (!server) return;
  server->server->stop();
  delete server;
}

// ---------------------------------------------------------------- training

void sg_train_config_default(sg_train_config* cfg) {
  if (cfg) to_c(dqn::TrainConfig{}, cfg);
}

sg_status sg_train_config_preset(const char* name, uint64_t seed, sg_train_config* cfg) {
  SG_REQUIRE(name);
  SG_REQUIRE(cfg);
  if (std::strcmp(name, "tiny-pursuit") != 0) {
    return set_error(SG_ERR_LOOKUP, std::string("unknown training preset '") + name + "'");
  }
  to_c(dqn::tiny_pursuit_train_config(seed), cfg);
  return SG_OK;
}

sg_status sg_train(const sg_env* env, const char* group, const sg_train_config* cfg, const char* checkpoint_path,
                   const char* curve_path, sg_curve_callback callback, void* user) {
  SG_REQUIRE(env);
  SG_REQUIRE(group);
  SG_REQUIRE(cfg);
  sg_status status = SG_OK;
  sg_status g = guard([&] {
    const dqn::TrainConfig tc = from_c(*cfg);
    tc.validate();
    const GroupId gid = env->env.group_by_name(group);
    std::unique_ptr<std::ofstream> curve;
    if (curve_path) {
      curve = std::make_unique<std::ofstream>(curve_path, std::ios::binary | std::ios::trunc);
      if (!*curve) fail(ErrorCode::kIo, std::string("cannot open '") + curve_path + "' for writing");
      *curve << "step,epsilon,mean_reward\n";
      curve->flush();
    }
    auto result = dqn::train(env->env, gid, tc, [&](const dqn::CurvePoint& p) {
      if (curve) {
        *curve << p.step << ',' << number(p.epsilon) << ',' << number(p.mean_reward) << '\n';
        curve->flush();
        if (!*curve) fail(ErrorCode::kIo, "curve write failed");
      }
      if (callback) callback(p.step, p.epsilon, p.mean_reward, user);
    });
    if (result.diverged) {
      status = set_error(SG_ERR_DIVERGENCE, result.divergence_message);
      return;
    }
    if (checkpoint_path) {
      dqn::Checkpoint ck{std::move(result.params), env->env.shape(gid), tc};
      dqn::save_checkpoint(checkpoint_path, ck);
    }
  });
  if (g != SG_OK) return g;
  return status;
}

sg_status sg_checkpoint_info(const char* path, char** json) {
  SG_REQUIRE(path);
  SG_REQUIRE(json);
  return guard([&] {
    dqn::Checkpoint ck = dqn::load_checkpoint(path);
    const auto& s = ck.shape;
    nlohmann::json j = {{"input", ck.params.input_size()},
                        {"hidden", ck.params.hidden_size()},
                        {"actions", ck.params.action_count()},
                        {"shape", {s.channels, s.height, s.width, s.features, s.n_actions}},
                        {"config", train_config_json(ck.config)}};
    *json = dup(j.dump());
  });
}

// ---------------------------------------------------------------- replays and benchmark

sg_status sg_replay_summary(const char* path, char** json) {
  SG_REQUIRE(path);
  SG_REQUIRE(json);
  sg_status status = SG_OK;
  sg_status g = guard([&] {
    replay::Summary s = replay::summarize_file(path);
    *json = dup(replay::summary_to_json(s).dump());
    if (s.truncated) status = set_error(SG_ERR_FORMAT, "replay truncated: " + s.error);
  });
  return g != SG_OK ? g : status;
}

void sg_bench_options_default(sg_bench_options* opts) {
  if (!opts) return;
  BenchOptions d;
  *opts = {d.agents, d.map, d.steps, d.seed, d.observe ? 1 : 0};
}

sg_status sg_bench(const sg_bench_options* opts, char** json) {
  SG_REQUIRE(opts);
  SG_REQUIRE(json);
  return guard([&] {
    BenchOptions o;
    o.agents = opts->agents;
    o.map = opts->map;
    o.steps = opts->steps;
    o.seed = opts->seed;
    o.observe = opts->observe != 0;
    *json = dup(bench_to_json(o, run_bench(o)).dump());
  });
}

}  // extern "C"
