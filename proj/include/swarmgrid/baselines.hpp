#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "swarmgrid/env.hpp"
#include "swarmgrid/qnet.hpp"

namespace swarmgrid::dqn {

/// Network input for row i of a batch: the flattened view followed by the
/// feature vector.
Matrix flatten_batch(const ObservationBatch& batch);

/// Chooses actions for every living member of one group.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::vector<ActionIndex> act(const World& world, GroupId group, const ObservationBatch& obs, Rng& rng) = 0;
  virtual std::string name() const = 0;
};

/// "random", "chase_nearest" or "noop". Throws Error(kLookup) for other names.
std::unique_ptr<Policy> scripted_policy(const std::string& name);

/// Uniform over the group's action space.
std::vector<ActionIndex> random_actions(const World& world, GroupId group, Rng& rng);

/// Attack the nearest agent of another group when in range, otherwise step to
/// a free cell that reduces the Chebyshev distance to it. Ties go to the first
/// action in canonical order; no enemies means DoNothing.
std::vector<ActionIndex> chase_nearest_actions(const World& world, GroupId group);

/// Epsilon-greedy over a shared network. Every member of the group reads the
/// same parameter object.
class QPolicy : public Policy {
 public:
  QPolicy(std::shared_ptr<const QNetwork> net, double epsilon) : net_(std::move(net)), epsilon_(epsilon) {}
  std::vector<ActionIndex> act(const World& world, GroupId group, const ObservationBatch& obs, Rng& rng) override;
  std::string name() const override { return "dqn"; }
  const std::shared_ptr<const QNetwork>& network() const { return net_; }
  void set_epsilon(double e) { epsilon_ = e; }

 private:
  std::shared_ptr<const QNetwork> net_;
  double epsilon_;
};

struct TrainConfig {
  double gamma = 0.95;
  double learning_rate = 1e-3;
  uint32_t batch_size = 64;
  uint32_t buffer_capacity = 50'000;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  uint64_t epsilon_decay_steps = 20'000;
  uint64_t target_sync_interval = 1'000;
  uint32_t hidden = 64;
  uint64_t total_steps = 50'000;
  uint32_t train_every = 2;
  uint64_t learning_starts = 1'000;
  uint64_t eval_interval = 10'000;
  uint32_t eval_episodes = 20;
  double eval_epsilon = 0.05;
  /// Policy for the other groups: "random", "chase_nearest", "noop", or "self"
  /// (a copy of the learner, refreshed at every target sync).
  std::string opponent = "random";
  uint64_t seed = 0;

  /// Throws Error(kInvalidConfig).
  void validate() const;
};

struct CurvePoint {
  uint64_t step = 0;
  double epsilon = 0.0;
  double mean_reward = 0.0;
};

struct TrainResult {
  QNetwork params;
  std::vector<CurvePoint> curve;
  bool diverged = false;
  std::string divergence_message;
};

/// Epsilon at a given environment step (linear decay).
double epsilon_at(const TrainConfig& cfg, uint64_t step);

/// Parameter-sharing DQN on one group. Transitions of every member are pooled
/// into one replay buffer; agents that die contribute a terminal transition.
/// Fully determined by the environment config and cfg.seed.
TrainResult train(const Environment& env, GroupId group, const TrainConfig& cfg,
                  const std::function<void(const CurvePoint&)>& on_eval = {});

/// Mean over episodes of the group's per-agent episode reward (total reward
/// paid to the group divided by its starting size). `learner` acts for the
/// group; the other groups use `opponent`.
double evaluate_policy(const Environment& env, GroupId group, Policy& learner, Policy& opponent, uint32_t episodes,
                       uint64_t seed);

/// Tiny pursuit used for learning-sanity checks: 8x8 bordered map, two
/// predators, one prey.
ScenarioConfig tiny_pursuit_scenario();
TrainConfig tiny_pursuit_train_config(uint64_t seed);

struct Checkpoint {
  QNetwork params;
  ObservationShape shape;
  TrainConfig config;
};

/// Binary little-endian container; layout in docs/checkpoint_format.md.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Builds a policy from "random", "chase_nearest", "noop" or a checkpoint path.
std::unique_ptr<Policy> make_policy(const std::string& spec);

}  // namespace swarmgrid::dqn
