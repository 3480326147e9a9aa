// Command-line front end. Talks to the engine only through the C API.
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "swarmgrid/swarmgrid.h"

namespace {

using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitRuntime = 2;

volatile std::sig_atomic_t g_interrupted = 0;

void on_signal(int) { g_interrupted = 1; }

int exit_code(sg_status s) {
  switch (s) {
    case SG_OK: return kExitOk;
    case SG_ERR_IO:
    case SG_ERR_DIVERGENCE:
    case SG_ERR_STATE:
    case SG_ERR_ORACLE_TOO_LARGE:
    case SG_ERR_INTERNAL: return kExitRuntime;
    default: return kExitUser;
  }
}

int report(sg_status s, const std::string& context) {
  std::cerr << "error: " << context << " [" << sg_status_name(s) << "]\n" << sg_last_error() << "\n";
  return exit_code(s);
}

struct Owned {
  char* p = nullptr;
  ~Owned() { sg_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct EnvHandle {
  sg_env* p = nullptr;
  ~EnvHandle() { sg_env_destroy(p); }
};

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

uint64_t default_seed() {
  const char* s = std::getenv("SWARMGRID_SEED");
  if (!s || !*s) return 0;
  char* end = nullptr;
  errno = 0;
  unsigned long long v = std::strtoull(s, &end, 10);
  if (errno || *end || *s == '-') throw CLI::ValidationError("SWARMGRID_SEED", "must be a non-negative integer");
  return v;
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void print_run_summary(const json& s) {
  std::cout << s["scenario"].get<std::string>() << " seed " << s["seed"] << ": " << s["steps"] << " steps"
            << (s["done"].get<bool>() ? " (episode done)" : "") << "\n";
  for (const auto& g : s["groups"]) {
    std::cout << "  " << g["name"].get<std::string>() << " [" << g["policy"].get<std::string>() << "] population "
              << g["start_population"] << " -> " << g["final_population"] << ", mean reward "
              << fixed(g["mean_reward"].get<double>()) << "\n";
  }
}

bool wait_until_interrupted(sg_server* server, bool stop_when_finished) {
  bool announced = false;
  while (!g_interrupted) {
    if (sg_server_wait(server, 200)) {
      if (stop_when_finished) return true;
      if (!announced) {
        std::cerr << "source finished; still serving, Ctrl-C to exit\n";
        announced = true;
      }
    }
  }
  return false;
}

// ---------------------------------------------------------------- run

struct RunArgs {
  std::string scenario;
  uint64_t seed = 0;
  uint64_t steps = 0;
  std::vector<std::string> policies;
  std::string record;
  int serve = -1;
  bool json = false;
};

int cmd_run(const RunArgs& a) {
  EnvHandle env;
  if (sg_status s = sg_env_open(a.scenario.c_str(), &env.p)) return report(s, "cannot load scenario '" + a.scenario + "'");
  std::vector<const char*> assign;
  for (const auto& p : a.policies) assign.push_back(p.c_str());
  sg_runner* runner = nullptr;
  if (sg_status s = sg_runner_create(env.p, assign.data(), assign.size(), a.seed, &runner)) {
    return report(s, "cannot set up policies");
  }
  Owned summary;
  if (a.serve >= 0) {
    sg_serve_options opts;
    sg_serve_options_default(&opts);
    opts.port = static_cast<uint16_t>(a.serve);
    opts.max_steps = a.steps;
    opts.record_path = a.record.empty() ? nullptr : a.record.c_str();
    sg_server* server = nullptr;
    if (sg_status s = sg_serve_live(runner, &opts, &server)) {
      sg_runner_destroy(runner);
      return report(s, "cannot start server");
    }
    uint16_t port = 0;
    sg_server_port(server, &port);
    std::cerr << "serving ws://127.0.0.1:" << port << "\n";
    wait_until_interrupted(server, false);
    sg_status s = sg_server_summary(server, &summary.p);
    sg_server_destroy(server);
    if (s) return report(s, "cannot read summary");
  } else {
    sg_status s = sg_runner_run(runner, a.steps, a.record.empty() ? nullptr : a.record.c_str(), &summary.p);
    sg_runner_destroy(runner);
    if (s) return report(s, "run failed");
  }
  json j = json::parse(summary.str());
  if (a.json) {
    std::cout << j.dump() << "\n";
  } else {
    print_run_summary(j);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string scenario;
  std::string group;
  std::string out;
  std::string curve;
  sg_train_config cfg{};
  std::string opponent;
  bool json = false;
};

void on_curve(uint64_t step, double epsilon, double reward, void*) {
  std::cerr << "step " << step << "  epsilon " << fixed(epsilon) << "  eval reward " << fixed(reward) << "\n";
}

int cmd_train(TrainArgs& a) {
  EnvHandle env;
  if (sg_status s = sg_env_open(a.scenario.c_str(), &env.p)) return report(s, "cannot load scenario '" + a.scenario + "'");
  if (a.group.empty()) {
    const char* name = nullptr;
    sg_env_group_name(env.p, 0, &name);
    a.group = name;
  }
  if (!a.opponent.empty()) {
    if (a.opponent.size() >= sizeof a.cfg.opponent) {
      std::cerr << "error: unknown opponent '" << a.opponent << "'\n";
      return kExitUser;
    }
    std::snprintf(a.cfg.opponent, sizeof a.cfg.opponent, "%s", a.opponent.c_str());
  }
  const std::string curve = a.curve.empty() ? a.out + ".curve.csv" : a.curve;
  sg_status s = sg_train(env.p, a.group.c_str(), &a.cfg, a.out.c_str(), curve.c_str(), a.json ? nullptr : on_curve,
                         nullptr);
  if (s == SG_ERR_DIVERGENCE) {
    std::cerr << "training diverged: " << sg_last_error() << "\npartial curve kept in " << curve << "\n";
    return kExitRuntime;
  }
  if (s) return report(s, "training failed");
  if (a.json) {
    Owned info;
    if (sg_status s2 = sg_checkpoint_info(a.out.c_str(), &info.p)) return report(s2, "cannot read checkpoint");
    json j = {{"checkpoint", a.out}, {"curve", curve}, {"group", a.group}, {"network", json::parse(info.str())}};
    std::cout << j.dump() << "\n";
  } else {
    std::cout << "checkpoint " << a.out << "\ncurve " << curve << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- check

int cmd_check(const std::string& file, const std::string& schema, bool as_json) {
  auto text = read_file(file);
  if (!text) {
    std::cerr << "error: cannot read '" << file << "'\n";
    return kExitRuntime;
  }
  EnvHandle env;
  if (!schema.empty()) {
    if (sg_status s = sg_env_open(schema.c_str(), &env.p)) return report(s, "cannot load schema scenario '" + schema + "'");
  }
  Owned diagnostics;
  sg_status s = sg_dsl_check(text->c_str(), env.p, &diagnostics.p);
  if (as_json) {
    json j = {{"file", file}, {"ok", s == SG_OK}, {"status", sg_status_name(s)}};
    json list = json::array();
    std::istringstream lines(diagnostics.str());
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty()) list.push_back(line);
    }
    j["diagnostics"] = list;
    std::cout << j.dump() << "\n";
  }
  if (s == SG_OK) {
    if (!as_json) std::cout << file << ": ok\n";
    return kExitOk;
  }
  if (s == SG_ERR_PARSE || s == SG_ERR_VALIDATION) {
    std::istringstream lines(diagnostics.str());
    for (std::string line; std::getline(lines, line);) {
      if (!line.empty()) std::cerr << file << ":" << line << "\n";
    }
    return kExitUser;
  }
  return report(s, "check failed");
}

// ---------------------------------------------------------------- bench

int cmd_bench(const sg_bench_options& o, bool as_json) {
  Owned out;
  if (sg_status s = sg_bench(&o, &out.p)) return report(s, "benchmark failed");
  json j = json::parse(out.str());
  if (as_json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << j["agents"] << " agents on " << j["map"] << "x" << j["map"] << ", " << j["steps"] << " steps"
              << (o.observe ? " with observations" : "") << "\n"
              << "  " << fixed(j["steps_per_second"].get<double>(), 2) << " steps/s ("
              << fixed(j["seconds"].get<double>()) << " s)\n"
              << "  peak RSS " << fixed(j["peak_rss_bytes"].get<double>() / (1024.0 * 1024.0), 1) << " MiB\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- replay

int cmd_replay(const std::string& file, int serve, bool summary, bool as_json) {
  if (serve >= 0) {
    sg_serve_options opts;
    sg_serve_options_default(&opts);
    opts.port = static_cast<uint16_t>(serve);
    sg_server* server = nullptr;
    if (sg_status s = sg_serve_replay(file.c_str(), &opts, &server)) return report(s, "cannot serve '" + file + "'");
    uint16_t port = 0;
    sg_server_port(server, &port);
    std::cerr << "serving ws://127.0.0.1:" << port << "\n";
    wait_until_interrupted(server, false);
    sg_server_destroy(server);
    if (!summary) return kExitOk;
  }
  Owned out;
  sg_status s = sg_replay_summary(file.c_str(), &out.p);
  if (s && s != SG_ERR_FORMAT) return report(s, "cannot read replay '" + file + "'");
  if (!out.p) return report(s, "cannot read replay '" + file + "'");
  json j = json::parse(out.str());
  if (as_json) {
    std::cout << j.dump() << "\n";
  } else {
    std::cout << file << ": scenario " << j["scenario"].get<std::string>() << ", seed " << j["seed"] << ", "
              << j["frames"] << " frames";
    if (j["frames"].get<uint64_t>() > 0) std::cout << " (steps " << j["first_step"] << "-" << j["last_step"] << ")";
    std::cout << "\n";
    for (const auto& g : j["groups"]) {
      std::cout << "  " << g["name"].get<std::string>() << " final population " << g["final_population"] << "\n";
    }
  }
  if (s == SG_ERR_FORMAT) {
    std::cerr << "error: replay truncated: " << j.value("error", std::string()) << "\n";
    return kExitUser;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"swarmgrid: many-agent gridworld simulation, reward programs and DQN baselines"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sg_version()));

  uint64_t env_seed = 0;
  try {
    env_seed = default_seed();
  } catch (const CLI::Error& e) {
    std::cerr << "error: SWARMGRID_SEED must be a non-negative integer\n";
    return kExitUser;
  }

  RunArgs run;
  run.seed = env_seed;
  auto* r = app.add_subcommand("run", "Run one episode of a scenario");
  r->add_option("scenario", run.scenario, "Built-in scenario (pursuit, gathering, battle, tiny-pursuit) or JSON file")
      ->required();
  r->add_option("--seed", run.seed, "Episode seed (default: SWARMGRID_SEED or 0)");
  r->add_option("--steps", run.steps, "Stop after this many steps (default: episode end)");
  r->add_option("--policy", run.policies, "group=spec, spec is random, chase_nearest, noop or a checkpoint path")
      ->expected(1, -1);
  r->add_option("--record", run.record, "Write a replay file");
  r->add_option("--serve", run.serve, "Serve the run over websocket on this port (0 = any free port)")
      ->check(CLI::Range(0, 65535));
  r->add_flag("--json", run.json, "Print the summary as JSON");

  TrainArgs train;
  sg_train_config_default(&train.cfg);
  auto* t = app.add_subcommand("train", "Train a parameter-sharing DQN for one group");
  t->add_option("scenario", train.scenario, "Built-in scenario or JSON file; tiny-pursuit selects its preset")
      ->required();
  t->add_option("--group", train.group, "Group to train (default: first group)");
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--curve", train.curve, "Learning curve CSV (default: <out>.curve.csv)");
  t->add_option("--gamma", train.cfg.gamma, "Discount factor");
  t->add_option("--lr", train.cfg.learning_rate, "Adam learning rate");
  t->add_option("--batch-size", train.cfg.batch_size, "Minibatch size");
  t->add_option("--buffer", train.cfg.buffer_capacity, "Replay buffer capacity");
  t->add_option("--eps-start", train.cfg.epsilon_start, "Initial exploration epsilon");
  t->add_option("--eps-end", train.cfg.epsilon_end, "Final exploration epsilon");
  t->add_option("--eps-decay", train.cfg.epsilon_decay_steps, "Steps of linear epsilon decay");
  t->add_option("--target-sync", train.cfg.target_sync_interval, "Steps between target network syncs");
  t->add_option("--hidden", train.cfg.hidden, "Hidden layer width");
  t->add_option("--total-steps", train.cfg.total_steps, "Environment steps");
  t->add_option("--train-every", train.cfg.train_every, "Environment steps per gradient step");
  t->add_option("--learning-starts", train.cfg.learning_starts, "Steps before the first update");
  t->add_option("--eval-interval", train.cfg.eval_interval, "Steps between evaluations");
  t->add_option("--eval-episodes", train.cfg.eval_episodes, "Episodes per evaluation");
  t->add_option("--eval-epsilon", train.cfg.eval_epsilon, "Epsilon during evaluation");
  t->add_option("--opponent", train.opponent, "Policy of the other groups: random, chase_nearest, noop or self");
  auto* train_seed = t->add_option("--seed", train.cfg.seed, "Training seed (default: SWARMGRID_SEED or 0)");
  t->add_flag("--json", train.json, "Print the result as JSON");

  std::string check_file, check_schema;
  bool check_json = false;
  auto* c = app.add_subcommand("check", "Parse and validate a reward program");
  c->add_option("file", check_file, "Reward program file")->required();
  c->add_option("--schema", check_schema, "Validate group names and map bounds against this scenario");
  c->add_flag("--json", check_json, "Print the result as JSON");

  sg_bench_options bench;
  sg_bench_options_default(&bench);
  bench.seed = env_seed;
  bool bench_observe = false, bench_json = false;
  auto* b = app.add_subcommand("bench", "Random-action throughput benchmark");
  b->add_option("--agents", bench.agents, "Number of agents");
  b->add_option("--map", bench.map, "Map side length")->check(CLI::PositiveNumber);
  b->add_option("--steps", bench.steps, "Steps to time");
  b->add_option("--seed", bench.seed, "Seed (default: SWARMGRID_SEED or 0)");
  b->add_flag("--obs", bench_observe, "Also extract every agent's observation each step");
  b->add_flag("--json", bench_json, "Print the report as JSON");

  std::string replay_file;
  int replay_serve = -1;
  bool replay_summary = false, replay_json = false;
  auto* rp = app.add_subcommand("replay", "Summarize or serve a replay file");
  rp->add_option("file", replay_file, "Replay file")->required();
  rp->add_option("--serve", replay_serve, "Serve the replay over websocket on this port (0 = any free port)")
      ->check(CLI::Range(0, 65535));
  rp->add_flag("--summary", replay_summary, "Print frames, steps and final populations");
  rp->add_flag("--json", replay_json, "Print the summary as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUser;
  }

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  try {
    if (*r) return cmd_run(run);
    if (*t) {
      if (train.scenario == "tiny-pursuit") {
        // Preset values, then any explicit flags on top.
        sg_train_config preset;
        sg_train_config_preset("tiny-pursuit", 0, &preset);
        sg_train_config user = train.cfg;
        train.cfg = preset;
        auto keep = [&](const char* flag, auto& field, const auto& value) {
          if (t->count(flag) > 0) field = value;
        };
        keep("--gamma", train.cfg.gamma, user.gamma);
        keep("--lr", train.cfg.learning_rate, user.learning_rate);
        keep("--batch-size", train.cfg.batch_size, user.batch_size);
        keep("--buffer", train.cfg.buffer_capacity, user.buffer_capacity);
        keep("--eps-start", train.cfg.epsilon_start, user.epsilon_start);
        keep("--eps-end", train.cfg.epsilon_end, user.epsilon_end);
        keep("--eps-decay", train.cfg.epsilon_decay_steps, user.epsilon_decay_steps);
        keep("--target-sync", train.cfg.target_sync_interval, user.target_sync_interval);
        keep("--hidden", train.cfg.hidden, user.hidden);
        keep("--total-steps", train.cfg.total_steps, user.total_steps);
        keep("--train-every", train.cfg.train_every, user.train_every);
        keep("--learning-starts", train.cfg.learning_starts, user.learning_starts);
        keep("--eval-interval", train.cfg.eval_interval, user.eval_interval);
        keep("--eval-episodes", train.cfg.eval_episodes, user.eval_episodes);
        keep("--eval-epsilon", train.cfg.eval_epsilon, user.eval_epsilon);
        train.cfg.seed = user.seed;
      }
      if (train_seed->count() == 0) train.cfg.seed = env_seed;
      return cmd_train(train);
    }
    if (*c) return cmd_check(check_file, check_schema, check_json);
    if (*b) {
      bench.observe = bench_observe ? 1 : 0;
      return cmd_bench(bench, bench_json);
    }
    if (*rp) return cmd_replay(replay_file, replay_serve, replay_summary || replay_serve < 0, replay_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUser;
}
