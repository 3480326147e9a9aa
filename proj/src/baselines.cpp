#include "swarmgrid/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "swarmgrid/engine.hpp"
#include "swarmgrid/error.hpp"

namespace swarmgrid::dqn {

Matrix flatten_batch(const ObservationBatch& batch) {
  const auto n = static_cast<int64_t>(batch.size());
  const auto vsz = static_cast<int64_t>(batch.shape.view_size());
  const auto fsz = static_cast<int64_t>(batch.shape.features);
  Matrix x(n, vsz + fsz);
  for (int64_t i = 0; i < n; ++i) {
    const float* v = batch.views.data() + i * vsz;
    const float* f = batch.features.data() + i * fsz;
    for (int64_t j = 0; j < vsz; ++j) x(i, j) = v[j];
    for (int64_t j = 0; j < fsz; ++j) x(i, vsz + j) = f[j];
  }
  return x;
}

// ---------------------------------------------------------------- policies

std::vector<ActionIndex> random_actions(const World& world, GroupId group, Rng& rng) {
  const auto n_actions = static_cast<uint64_t>(action_count(world.type_of(group)));
  std::vector<ActionIndex> out;
  out.reserve(world.members(group).size());
  for (size_t i = 0; i < world.members(group).size(); ++i) out.push_back(static_cast<ActionIndex>(rng.below(n_actions)));
  return out;
}

namespace {

int64_t chebyshev(Position a, Position b) { return std::max(std::abs(int64_t{a.x} - b.x), std::abs(int64_t{a.y} - b.y)); }

const Agent* nearest_enemy(const World& world, const Agent& self) {
  const int32_t limit = std::max(world.width(), world.height());
  for (int32_t r = 1;; r *= 2) {
    const Agent* best = nullptr;
    int64_t best_d = std::numeric_limits<int64_t>::max();
    for (AgentId id : world.query_rect(self.pos.x - r, self.pos.y - r, self.pos.x + r, self.pos.y + r)) {
      const Agent& other = world.agent(id);
      if (other.group == self.group) continue;
      int64_t d = chebyshev(self.pos, other.pos);
      if (d < best_d) {
        best_d = d;
        best = &other;
      }
    }
    if (best && best_d <= r) return best;
    if (r >= limit) return best;
  }
}

class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(std::string name) : name_(std::move(name)) {}
  std::vector<ActionIndex> act(const World& world, GroupId group, const ObservationBatch&, Rng& rng) override {
    if (name_ == "random") return random_actions(world, group, rng);
    if (name_ == "chase_nearest") return chase_nearest_actions(world, group);
    return std::vector<ActionIndex>(world.members(group).size(), kNoOp);
  }
  std::string name() const override { return name_; }

 private:
  std::string name_;
};

}  // namespace

std::vector<ActionIndex> chase_nearest_actions(const World& world, GroupId group) {
  const AgentTypeSpec& t = world.type_of(group);
  const auto table = action_space(t);
  std::vector<ActionIndex> out;
  out.reserve(world.members(group).size());
  const bool any_enemy = world.population() > world.members(group).size();
  for (AgentId id : world.members(group)) {
    const Agent& self = world.agent(id);
    const Agent* target = any_enemy ? nearest_enemy(world, self) : nullptr;
    ActionIndex choice = kNoOp;
    if (target) {
      const auto& tt = world.type_of(*target);
      const int64_t d = chebyshev(self.pos, target->pos);
      // attack first
      for (size_t k = 0; k < table.size() && choice == kNoOp; ++k) {
        if (table[k].kind != ActionKind::Attack) continue;
        Offset o = rotate_offset(table[k].offset, self.dir);
        int32_t x = self.pos.x + o.dx;
        int32_t y = self.pos.y + o.dy;
        if (x >= target->pos.x && x < target->pos.x + tt.body_w && y >= target->pos.y && y < target->pos.y + tt.body_h) {
          choice = static_cast<ActionIndex>(k);
        }
      }
      int64_t best = d;
      for (size_t k = 0; k < table.size() && choice == kNoOp; ++k) {
        if (table[k].kind != ActionKind::Move) continue;
        Offset o = rotate_offset(table[k].offset, self.dir);
        Position to{self.pos.x + o.dx, self.pos.y + o.dy};
        if (world.blocker(to, t.body_w, t.body_h, self.id) != kEmptyCell) continue;
        int64_t nd = chebyshev(to, target->pos);
        if (nd < best) best = nd;
      }
      if (choice == kNoOp && best < d) {
        for (size_t k = 0; k < table.size(); ++k) {
          if (table[k].kind != ActionKind::Move) continue;
          Offset o = rotate_offset(table[k].offset, self.dir);
          Position to{self.pos.x + o.dx, self.pos.y + o.dy};
          if (world.blocker(to, t.body_w, t.body_h, self.id) != kEmptyCell) continue;
          if (chebyshev(to, target->pos) == best) {
            choice = static_cast<ActionIndex>(k);
            break;
          }
        }
      }
    }
    out.push_back(choice);
  }
  return out;
}

std::unique_ptr<Policy> scripted_policy(const std::string& name) {
  if (name == "random" || name == "chase_nearest" || name == "noop") return std::make_unique<ScriptedPolicy>(name);
  fail(ErrorCode::kLookup, "unknown scripted policy '" + name + "'");
}

std::vector<ActionIndex> QPolicy::act(const World&, GroupId, const ObservationBatch& obs, Rng& rng) {
  if (obs.size() == 0) return {};
  if (static_cast<int64_t>(obs.shape.input_size()) != net_->input_size() ||
      obs.shape.n_actions != net_->action_count()) {
    fail(ErrorCode::kContract, "network expects input " + std::to_string(net_->input_size()) + " and " +
                                   std::to_string(net_->action_count()) + " actions; group observation has input " +
                                   std::to_string(obs.shape.input_size()) + " and " +
                                   std::to_string(obs.shape.n_actions) + " actions");
  }
  return act_epsilon_greedy(*net_, flatten_batch(obs), epsilon_, rng);
}

// ---------------------------------------------------------------- training

void TrainConfig::validate() const {
  auto bad = [](const std::string& m) { fail(ErrorCode::kInvalidConfig, "train config: " + m); };
  if (!(gamma >= 0.0 && gamma < 1.0)) bad("gamma must be in [0, 1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) bad("learning rate must be positive");
  if (batch_size == 0) bad("batch size must be positive");
  if (buffer_capacity == 0) bad("buffer capacity must be positive");
  if (!(epsilon_end >= 0.0 && epsilon_end <= epsilon_start && epsilon_start <= 1.0)) {
    bad("need 0 <= epsilon_end <= epsilon_start <= 1");
  }
  if (target_sync_interval == 0) bad("target sync interval must be positive");
  if (hidden == 0) bad("hidden width must be positive");
  if (train_every == 0) bad("train_every must be positive");
  if (eval_interval == 0) bad("eval interval must be positive");
  if (!(eval_epsilon >= 0.0 && eval_epsilon <= 1.0)) bad("eval epsilon must be in [0, 1]");
  if (opponent != "self" && opponent != "random" && opponent != "chase_nearest" && opponent != "noop") {
    bad("unknown opponent '" + opponent + "'");
  }
}

double epsilon_at(const TrainConfig& cfg, uint64_t step) {
  if (cfg.epsilon_decay_steps == 0 || step >= cfg.epsilon_decay_steps) return cfg.epsilon_end;
  double frac = static_cast<double>(step) / static_cast<double>(cfg.epsilon_decay_steps);
  return cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
}

namespace {

class ReplayBuffer {
 public:
  ReplayBuffer(size_t capacity, int64_t width) : capacity_(capacity), width_(width) {
    obs_.resize(capacity * static_cast<size_t>(width));
    next_.resize(capacity * static_cast<size_t>(width));
    actions_.resize(capacity);
    rewards_.resize(capacity);
    done_.resize(capacity);
  }

  size_t size() const { return size_; }

  void push(const Matrix& obs, int64_t row, ActionIndex a, double r, const Matrix* next, int64_t next_row, bool done) {
    const size_t at = head_;
    float* o = obs_.data() + at * width_;
    float* n = next_.data() + at * width_;
    for (int64_t j = 0; j < width_; ++j) o[j] = static_cast<float>(obs(row, j));
    for (int64_t j = 0; j < width_; ++j) n[j] = next ? static_cast<float>((*next)(next_row, j)) : 0.0f;
    actions_[at] = a;
    rewards_[at] = r;
    done_[at] = done;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  TransitionBatch sample(size_t n, Rng& rng) const {
    TransitionBatch b;
    b.obs.resize(static_cast<int64_t>(n), width_);
    b.next_obs.resize(static_cast<int64_t>(n), width_);
    for (size_t i = 0; i < n; ++i) {
      size_t k = rng.below(size_);
      const float* o = obs_.data() + k * width_;
      const float* nx = next_.data() + k * width_;
      for (int64_t j = 0; j < width_; ++j) {
        b.obs(static_cast<int64_t>(i), j) = o[j];
        b.next_obs(static_cast<int64_t>(i), j) = nx[j];
      }
      b.actions.push_back(actions_[k]);
      b.rewards.push_back(rewards_[k]);
      b.done.push_back(done_[k]);
    }
    return b;
  }

 private:
  size_t capacity_;
  int64_t width_;
  size_t head_ = 0;
  size_t size_ = 0;
  std::vector<float> obs_, next_;
  std::vector<ActionIndex> actions_;
  std::vector<double> rewards_;
  std::vector<uint8_t> done_;
};

std::unique_ptr<Policy> opponent_for(const TrainConfig& cfg, const std::shared_ptr<const QNetwork>& learner,
                                     double epsilon) {
  if (cfg.opponent == "self") return std::make_unique<QPolicy>(learner, epsilon);
  return scripted_policy(cfg.opponent);
}

std::vector<std::vector<ActionIndex>> joint_actions(const Environment& env, GroupId learner_group,
                                                    std::vector<ActionIndex> learner,
                                                    const std::vector<ObservationBatch>& obs, Policy& opponent,
                                                    Rng& rng) {
  std::vector<std::vector<ActionIndex>> actions(env.group_count());
  for (size_t g = 0; g < env.group_count(); ++g) {
    if (g == learner_group) {
      actions[g] = std::move(learner);
    } else {
      actions[g] = opponent.act(env.world(), static_cast<GroupId>(g), obs[g], rng);
    }
  }
  return actions;
}

}  // namespace

double evaluate_policy(const Environment& env_in, GroupId group, Policy& learner, Policy& opponent, uint32_t episodes,
                       uint64_t seed) {
  if (episodes == 0) return 0.0;
  Environment env = env_in;
  Rng seeds(seed);
  Rng rng = seeds.split();
  double sum = 0.0;
  for (uint32_t e = 0; e < episodes; ++e) {
    auto obs = env.reset(seeds.next_u64());
    const size_t start = env.world().members(group).size();
    double total = 0.0;
    while (!env.done()) {
      auto mine = learner.act(env.world(), group, obs[group], rng);
      auto actions = joint_actions(env, group, std::move(mine), obs, opponent, rng);
      StepResult res = env.step(actions);
      for (double r : res.groups[group].rewards) total += r;
      for (double r : res.groups[group].fallen_rewards) total += r;
      obs.clear();
      for (auto& gs : res.groups) obs.push_back(std::move(gs.obs));
    }
    sum += start ? total / static_cast<double>(start) : 0.0;
  }
  return sum / static_cast<double>(episodes);
}

TrainResult train(const Environment& env_in, GroupId group, const TrainConfig& cfg,
                  const std::function<void(const CurvePoint&)>& on_eval) {
  cfg.validate();
  if (group >= env_in.group_count()) fail(ErrorCode::kLookup, "unknown group id " + std::to_string(group));
  Environment env = env_in;
  Rng root(cfg.seed);
  Rng act_rng = root.split();
  Rng sample_rng = root.split();
  Rng opp_rng = root.split();
  Rng episode_seeds = root.split();
  const uint64_t eval_seed = root.next_u64();

  auto obs = env.reset(episode_seeds.next_u64());
  const ObservationShape shape = env.shape(group);
  const auto width = static_cast<int64_t>(shape.input_size());

  TrainResult result;
  QNetwork online = init_network(width, shape.n_actions, cfg.hidden, root.next_u64());
  result.params = online;
  if (cfg.total_steps == 0) return result;

  auto target = std::make_shared<const QNetwork>(online);
  Adam adam(online, cfg.learning_rate);
  ReplayBuffer buffer(cfg.buffer_capacity, width);
  auto opponent = opponent_for(cfg, target, cfg.eval_epsilon);
  Gradients grads;

  for (uint64_t step = 1; step <= cfg.total_steps; ++step) {
    const double eps = epsilon_at(cfg, step - 1);
    Matrix x = flatten_batch(obs[group]);
    std::vector<ActionIndex> mine =
        obs[group].size() ? act_epsilon_greedy(online, x, eps, act_rng) : std::vector<ActionIndex>{};
    const std::vector<ActionIndex> taken = mine;
    auto actions = joint_actions(env, group, std::move(mine), obs, *opponent, opp_rng);
    StepResult res = env.step(actions);

    const GroupStep& gs = res.groups[group];
    Matrix next_x = flatten_batch(gs.obs);
    const auto& prev_ids = obs[group].ids;
    for (size_t i = 0; i < prev_ids.size(); ++i) {
      AgentId id = prev_ids[i];
      auto alive = std::lower_bound(gs.obs.ids.begin(), gs.obs.ids.end(), id);
      if (alive != gs.obs.ids.end() && *alive == id) {
        auto row = static_cast<int64_t>(alive - gs.obs.ids.begin());
        buffer.push(x, static_cast<int64_t>(i), taken[i], gs.rewards[static_cast<size_t>(row)], &next_x, row, res.done);
      } else {
        auto f = std::find(gs.fallen.begin(), gs.fallen.end(), id);
        double r = f == gs.fallen.end() ? 0.0 : gs.fallen_rewards[static_cast<size_t>(f - gs.fallen.begin())];
        buffer.push(x, static_cast<int64_t>(i), taken[i], r, nullptr, 0, true);
      }
    }

    if (res.done) {
      obs = env.reset(episode_seeds.next_u64());
    } else {
      obs.clear();
      for (auto& g : res.groups) obs.push_back(std::move(g.obs));
    }

    if (step >= cfg.learning_starts && step % cfg.train_every == 0 && buffer.size() >= cfg.batch_size) {
      TransitionBatch batch = buffer.sample(cfg.batch_size, sample_rng);
      auto y = td_targets(*target, batch, cfg.gamma);
      double loss = td_gradients(online, batch, y, grads);
      if (!std::isfinite(loss)) {
        result.diverged = true;
        result.divergence_message = "non-finite TD loss at step " + std::to_string(step);
        break;
      }
      adam.apply(online, grads);
      if (!online.all_finite()) {
        result.diverged = true;
        result.divergence_message = "non-finite parameters at step " + std::to_string(step);
        break;
      }
    }
    if (step % cfg.target_sync_interval == 0) {
      target = std::make_shared<const QNetwork>(online);
      if (cfg.opponent == "self") opponent = opponent_for(cfg, target, cfg.eval_epsilon);
    }
    if (step % cfg.eval_interval == 0 || step == cfg.total_steps) {
      auto shared = std::make_shared<const QNetwork>(online);
      QPolicy learner(shared, cfg.eval_epsilon);
      auto eval_opponent = opponent_for(cfg, shared, cfg.eval_epsilon);
      CurvePoint p{step, eps, evaluate_policy(env_in, group, learner, *eval_opponent, cfg.eval_episodes, eval_seed)};
      result.curve.push_back(p);
      if (on_eval) on_eval(p);
    }
  }
  result.params = std::move(online);
  return result;
}

ScenarioConfig tiny_pursuit_scenario() {
  ScenarioScale scale;
  scale.map_size = 8;
  scale.populations = {2, 1};
  scale.max_steps = 25;
  ScenarioConfig c = builtin_scenario("pursuit", scale);
  c.name = "tiny-pursuit";
  return c;
}

TrainConfig tiny_pursuit_train_config(uint64_t seed) {
  TrainConfig c;
  c.gamma = 0.9;
  c.learning_rate = 1e-3;
  c.batch_size = 64;
  c.buffer_capacity = 50'000;
  c.epsilon_start = 1.0;
  c.epsilon_end = 0.05;
  c.epsilon_decay_steps = 10'000;
  c.target_sync_interval = 500;
  c.hidden = 64;
  c.total_steps = 20'000;
  c.train_every = 2;
  c.learning_starts = 1'000;
  c.eval_interval = 5'000;
  c.eval_episodes = 20;
  c.eval_epsilon = 0.05;
  c.opponent = "random";
  c.seed = seed;
  return c;
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[4] = {'S', 'G', 'Q', 'N'};
constexpr uint32_t kCheckpointVersion = 1;

class Writer {
 public:
  void bytes(const void* p, size_t n) {
    auto c = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename T>
  void le(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    bytes(raw, sizeof(T));
  }
  void u32(uint32_t v) { le(v); }
  void u64(uint64_t v) { le(v); }
  void f64(double v) { le(v); }
  const std::vector<uint8_t>& data() const { return buf_; }

 private:
  std::vector<uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<uint8_t> data) : buf_(std::move(data)) {}
  template <typename T>
  T le() {
    if (pos_ + sizeof(T) > buf_.size()) fail(ErrorCode::kFormat, "checkpoint truncated");
    uint8_t raw[sizeof(T)];
    std::memcpy(raw, buf_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  uint32_t u32() { return le<uint32_t>(); }
  uint64_t u64() { return le<uint64_t>(); }
  double f64() { return le<double>(); }
  std::string str(size_t n) {
    if (pos_ + n > buf_.size()) fail(ErrorCode::kFormat, "checkpoint truncated");
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  size_t pos() const { return pos_; }
  const std::vector<uint8_t>& data() const { return buf_; }

 private:
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

uint64_t fnv1a(const uint8_t* p, size_t n) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  for (int32_t v : {ck.shape.channels, ck.shape.height, ck.shape.width, ck.shape.features, ck.shape.n_actions}) {
    w.u32(static_cast<uint32_t>(v));
  }
  const QNetwork& n = ck.params;
  w.u32(static_cast<uint32_t>(n.input_size()));
  w.u32(static_cast<uint32_t>(n.hidden_size()));
  w.u32(static_cast<uint32_t>(n.action_count()));
  const TrainConfig& c = ck.config;
  w.f64(c.gamma);
  w.f64(c.learning_rate);
  w.u32(c.batch_size);
  w.u32(c.buffer_capacity);
  w.f64(c.epsilon_start);
  w.f64(c.epsilon_end);
  w.u64(c.epsilon_decay_steps);
  w.u64(c.target_sync_interval);
  w.u32(c.hidden);
  w.u64(c.total_steps);
  w.u32(c.train_every);
  w.u64(c.learning_starts);
  w.u64(c.eval_interval);
  w.u32(c.eval_episodes);
  w.f64(c.eval_epsilon);
  w.u32(static_cast<uint32_t>(c.opponent.size()));
  w.bytes(c.opponent.data(), c.opponent.size());
  w.u64(c.seed);
  for (int64_t i = 0; i < n.w1.size(); ++i) w.f64(n.w1.data()[i]);
  for (int64_t i = 0; i < n.b1.size(); ++i) w.f64(n.b1[i]);
  for (int64_t i = 0; i < n.w2.size(); ++i) w.f64(n.w2.data()[i]);
  for (int64_t i = 0; i < n.b2.size(); ++i) w.f64(n.b2[i]);
  w.u64(fnv1a(w.data().data(), w.data().size()));
  out.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
  if (!out) fail(ErrorCode::kIo, "failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(std::move(data));
  if (r.str(4) != std::string(kMagic, 4)) fail(ErrorCode::kFormat, "not a checkpoint (bad magic)");
  uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kUnsupportedVersion, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.shape.channels = static_cast<int32_t>(r.u32());
  ck.shape.height = static_cast<int32_t>(r.u32());
  ck.shape.width = static_cast<int32_t>(r.u32());
  ck.shape.features = static_cast<int32_t>(r.u32());
  ck.shape.n_actions = static_cast<int32_t>(r.u32());
  const uint32_t input = r.u32();
  const uint32_t hidden = r.u32();
  const uint32_t actions = r.u32();
  if (input == 0 || hidden == 0 || actions == 0 || input > (1u << 24) || hidden > (1u << 16) || actions > (1u << 16)) {
    fail(ErrorCode::kFormat, "checkpoint has implausible network dimensions");
  }
  TrainConfig& c = ck.config;
  c.gamma = r.f64();
  c.learning_rate = r.f64();
  c.batch_size = r.u32();
  c.buffer_capacity = r.u32();
  c.epsilon_start = r.f64();
  c.epsilon_end = r.f64();
  c.epsilon_decay_steps = r.u64();
  c.target_sync_interval = r.u64();
  c.hidden = r.u32();
  c.total_steps = r.u64();
  c.train_every = r.u32();
  c.learning_starts = r.u64();
  c.eval_interval = r.u64();
  c.eval_episodes = r.u32();
  c.eval_epsilon = r.f64();
  uint32_t opp_len = r.u32();
  if (opp_len > 64) fail(ErrorCode::kFormat, "checkpoint opponent name too long");
  c.opponent = r.str(opp_len);
  c.seed = r.u64();
  QNetwork& n = ck.params;
  n.w1.resize(hidden, input);
  n.b1.resize(hidden);
  n.w2.resize(actions, hidden);
  n.b2.resize(actions);
  for (int64_t i = 0; i < n.w1.size(); ++i) n.w1.data()[i] = r.f64();
  for (int64_t i = 0; i < n.b1.size(); ++i) n.b1[i] = r.f64();
  for (int64_t i = 0; i < n.w2.size(); ++i) n.w2.data()[i] = r.f64();
  for (int64_t i = 0; i < n.b2.size(); ++i) n.b2[i] = r.f64();
  const size_t body = r.pos();
  uint64_t stored = r.u64();
  if (stored != fnv1a(r.data().data(), body)) fail(ErrorCode::kFormat, "checkpoint checksum mismatch");
  if (r.pos() != r.data().size()) fail(ErrorCode::kFormat, "trailing bytes after checkpoint");
  if (static_cast<int64_t>(ck.shape.input_size()) != n.input_size() || ck.shape.n_actions != n.action_count()) {
    fail(ErrorCode::kFormat, "checkpoint observation shape does not match network dimensions");
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  write_checkpoint(out, ck);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

std::unique_ptr<Policy> make_policy(const std::string& spec) {
  if (spec == "random" || spec == "chase_nearest" || spec == "noop") return scripted_policy(spec);
  Checkpoint ck = load_checkpoint(spec);
  return std::make_unique<QPolicy>(std::make_shared<const QNetwork>(std::move(ck.params)), 0.0);
}

}  // namespace swarmgrid::dqn
