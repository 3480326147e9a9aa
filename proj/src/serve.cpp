#include "swarmgrid/serve.hpp"

#include <array>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "swarmgrid/error.hpp"
#include "swarmgrid/replay.hpp"

namespace swarmgrid::serve {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using json = nlohmann::json;
using FramePtr = std::shared_ptr<const replay::Frame>;

namespace {

constexpr size_t kMaxQueuedMessages = 4096;
constexpr double kMaxSpeed = 1000.0;

class Source {
 public:
  virtual ~Source() = default;
  virtual const replay::ReplayHeader& header() const = 0;
  virtual Runner* runner() { return nullptr; }
  /// State shown to clients before the first step, if any.
  virtual FramePtr initial() = 0;
  /// Next frame, or null once exhausted.
  virtual FramePtr advance(const std::map<AgentId, ActionIndex>& overrides) = 0;
  virtual json summary() const = 0;
};

class LiveSource : public Source {
 public:
  LiveSource(std::unique_ptr<Runner> runner, uint64_t max_steps, std::ostream* record)
      : runner_(std::move(runner)), header_(replay::make_header(runner_->env())), max_steps_(max_steps) {
    if (record) recorder_.emplace(*record, header_);
  }
  const replay::ReplayHeader& header() const override { return header_; }
  Runner* runner() override { return runner_.get(); }
  FramePtr initial() override {
    return std::make_shared<replay::Frame>(replay::make_frame(runner_->env().world(), nullptr));
  }
  FramePtr advance(const std::map<AgentId, ActionIndex>& overrides) override {
    if (runner_->done() || (max_steps_ && runner_->steps() >= max_steps_)) {
      if (recorder_) recorder_->flush();
      return nullptr;
    }
    StepResult res = runner_->advance(overrides);
    auto f = std::make_shared<replay::Frame>(replay::make_frame(runner_->env().world(), &res));
    if (recorder_) {
      recorder_->frame(*f);
      if (runner_->done() || (max_steps_ && runner_->steps() >= max_steps_)) recorder_->flush();
    }
    return f;
  }
  json summary() const override { return runner_->summary(); }

 private:
  std::unique_ptr<Runner> runner_;
  replay::ReplayHeader header_;
  uint64_t max_steps_;
  std::optional<replay::Recorder> recorder_;
};

class ReplaySource : public Source {
 public:
  explicit ReplaySource(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) fail(ErrorCode::kIo, "cannot open replay '" + path + "'");
    reader_.emplace(in_);
  }
  const replay::ReplayHeader& header() const override { return reader_->header(); }
  FramePtr initial() override { return nullptr; }
  FramePtr advance(const std::map<AgentId, ActionIndex>&) override {
    replay::Frame f;
    if (!reader_->next(f)) return nullptr;
    return std::make_shared<replay::Frame>(std::move(f));
  }
  json summary() const override {
    json j = {{"scenario", header().scenario}, {"frames", reader_->frames_read()}, {"truncated", reader_->truncated()}};
    if (reader_->truncated()) j["error"] = reader_->error();
    return j;
  }

 private:
  std::ifstream in_;
  std::optional<replay::Reader> reader_;
};

using Rect = std::array<int32_t, 4>;

struct Client : std::enable_shared_from_this<Client> {
  explicit Client(tcp::socket s) : ws(std::move(s)) {}
  websocket::stream<beast::tcp_stream> ws;
  beast::flat_buffer buffer;
  std::deque<std::shared_ptr<const std::string>> out;
  bool writing = false;
  bool closed = false;
  uint64_t id = 0;
  std::optional<Rect> viewport;
};

struct Command {
  uint64_t client = 0;
  bool disconnect = false;
  json msg;
};

}  // namespace

struct Server::Impl {
  ServeOptions opts;
  std::unique_ptr<Source> source;
  bool is_live = false;

  net::io_context ioc;
  net::executor_work_guard<net::io_context::executor_type> work{ioc.get_executor()};
  tcp::acceptor acceptor{ioc};
  uint16_t bound_port = 0;

  // I/O thread only.
  std::map<uint64_t, std::shared_ptr<Client>> clients;
  FramePtr latest;
  std::shared_ptr<const std::string> header_line;
  std::vector<std::pair<int32_t, int32_t>> body_of_group;
  uint64_t next_client = 1;

  // Command queue.
  std::mutex mu;
  std::condition_variable cv;
  std::deque<Command> queue;
  bool stopping = false;

  // Engine thread only.
  bool paused = false;
  double speed = 5.0;
  uint32_t step_requests = 0;
  bool exhausted = false;
  std::chrono::steady_clock::time_point next_tick;
  std::map<AgentId, uint64_t> controller;
  std::map<AgentId, ActionIndex> pending;

  // Shared with callers.
  mutable std::mutex state_mu;
  mutable std::condition_variable state_cv;
  bool finished = false;
  json summary;

  std::thread io_thread;
  std::thread engine_thread;

  void start();
  void shutdown();

  // I/O side.
  void accept();
  void on_open(const std::shared_ptr<Client>& c);
  void read(const std::shared_ptr<Client>& c);
  void send(const std::shared_ptr<Client>& c, std::shared_ptr<const std::string> text);
  void write_next(const std::shared_ptr<Client>& c);
  void drop(const std::shared_ptr<Client>& c);
  void send_frame(const std::shared_ptr<Client>& c, const FramePtr& f, const std::shared_ptr<const std::string>& full);
  void broadcast(const FramePtr& f);
  void enqueue(Command cmd);

  // Engine side.
  void engine_loop();
  void tick();
  void publish(const FramePtr& f);
  void handle(const Command& cmd);
  void reply(uint64_t client, json msg);
  void ack(uint64_t client, const std::string& cmd, json extra = json::object());
  void error(uint64_t client, const std::string& msg, const std::string& cmd = {});
  void mark_finished();
};

namespace {

std::shared_ptr<const std::string> line_of(const json& j) {
  return std::make_shared<const std::string>(replay::encode_line(j));
}

bool rect_hits(const Rect& r, const replay::AgentState& a, std::pair<int32_t, int32_t> body) {
  return a.x + body.first - 1 >= r[0] && a.x <= r[2] && a.y + body.second - 1 >= r[1] && a.y <= r[3];
}

int64_t int_arg(const json& msg, const char* key) {
  auto it = msg.find(key);
  if (it == msg.end() || !it->is_number_integer()) {
    fail(ErrorCode::kInvalidConfig, std::string("'") + key + "' must be an integer");
  }
  return it->get<int64_t>();
}

AgentId agent_arg(const json& msg) {
  int64_t v = int_arg(msg, "agent");
  if (v < 0 || v > static_cast<int64_t>(kMaxAgentId)) fail(ErrorCode::kInvalidConfig, "'agent' is out of range");
  return static_cast<AgentId>(v);
}

}  // namespace

// ---------------------------------------------------------------- lifecycle

void Server::Impl::start() {
  speed = opts.steps_per_second;
  paused = opts.start_paused;
  if (!(speed > 0.0 && speed <= kMaxSpeed)) fail(ErrorCode::kInvalidConfig, "steps per second must be in (0, 1000]");
  const auto& h = source->header();
  json hj = replay::header_to_json(h);
  hj["source"] = is_live ? "live" : "replay";
  header_line = line_of(hj);
  for (const auto& g : h.groups) {
    std::pair<int32_t, int32_t> body{1, 1};
    for (const auto& t : h.types) {
      if (t.name == g.type) body = {t.body_w, t.body_h};
    }
    body_of_group.push_back(body);
  }
  summary = source->summary();

  boost::system::error_code ec;
  auto addr = net::ip::make_address(opts.address, ec);
  if (ec) fail(ErrorCode::kInvalidConfig, "bad listen address '" + opts.address + "'");
  tcp::endpoint ep(addr, opts.port);
  acceptor.open(ep.protocol(), ec);
  if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(ep, ec);
  if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    fail(ErrorCode::kIo, "cannot listen on " + opts.address + ":" + std::to_string(opts.port) + ": " + ec.message());
  }
  bound_port = acceptor.local_endpoint().port();

  latest = source->initial();
  accept();
  io_thread = std::thread([this] { ioc.run(); });
  engine_thread = std::thread([this] { engine_loop(); });
}

void Server::Impl::shutdown() {
  {
    std::lock_guard lk(mu);
    if (stopping) return;
    stopping = true;
  }
  cv.notify_all();
  if (engine_thread.joinable()) engine_thread.join();
  work.reset();
  ioc.stop();
  if (io_thread.joinable()) io_thread.join();
  // The I/O thread is gone; close everything from here.
  boost::system::error_code ec;
  acceptor.close(ec);
  for (auto& [id, c] : clients) {
    c->closed = true;
    beast::get_lowest_layer(c->ws).socket().close(ec);
  }
  clients.clear();
  mark_finished();
}

// ---------------------------------------------------------------- I/O thread

void Server::Impl::accept() {
  acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    auto c = std::make_shared<Client>(std::move(socket));
    c->ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    c->ws.async_accept([this, c](boost::system::error_code ec2) {
      if (!ec2) on_open(c);
    });
    accept();
  });
}

void Server::Impl::on_open(const std::shared_ptr<Client>& c) {
  c->id = next_client++;
  clients[c->id] = c;
  send(c, header_line);
  if (latest) send_frame(c, latest, nullptr);
  read(c);
}

void Server::Impl::read(const std::shared_ptr<Client>& c) {
  c->ws.async_read(c->buffer, [this, c](boost::system::error_code ec, size_t) {
    if (ec) {
      drop(c);
      return;
    }
    std::string text = beast::buffers_to_string(c->buffer.data());
    c->buffer.consume(c->buffer.size());
    json msg = json::parse(text, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) {
      send(c, line_of({{"t", "error"}, {"msg", "message is not a JSON object"}}));
    } else {
      enqueue({c->id, false, std::move(msg)});
    }
    read(c);
  });
}

void Server::Impl::send(const std::shared_ptr<Client>& c, std::shared_ptr<const std::string> text) {
  if (c->closed) return;
  if (c->out.size() >= kMaxQueuedMessages) {
    drop(c);
    return;
  }
  c->out.push_back(std::move(text));
  if (!c->writing) write_next(c);
}

void Server::Impl::write_next(const std::shared_ptr<Client>& c) {
  if (c->out.empty() || c->closed) {
    c->writing = false;
    return;
  }
  c->writing = true;
  c->ws.text(true);
  c->ws.async_write(net::buffer(*c->out.front()), [this, c](boost::system::error_code ec, size_t) {
    if (ec) {
      drop(c);
      return;
    }
    c->out.pop_front();
    write_next(c);
  });
}

void Server::Impl::drop(const std::shared_ptr<Client>& c) {
  if (c->closed) return;
  c->closed = true;
  boost::system::error_code ec;
  beast::get_lowest_layer(c->ws).socket().close(ec);
  if (clients.erase(c->id)) enqueue({c->id, true, {}});
}

void Server::Impl::send_frame(const std::shared_ptr<Client>& c, const FramePtr& f,
                              const std::shared_ptr<const std::string>& full) {
  if (!c->viewport) {
    send(c, full ? full : line_of(replay::frame_to_json(*f)));
    return;
  }
  replay::Frame culled = *f;
  culled.agents.clear();
  for (const auto& a : f->agents) {
    auto body = a.group < body_of_group.size() ? body_of_group[a.group] : std::pair<int32_t, int32_t>{1, 1};
    if (rect_hits(*c->viewport, a, body)) culled.agents.push_back(a);
  }
  json j = replay::frame_to_json(culled);
  const Rect& r = *c->viewport;
  j["viewport"] = {r[0], r[1], r[2], r[3]};
  send(c, line_of(j));
}

void Server::Impl::broadcast(const FramePtr& f) {
  latest = f;
  std::shared_ptr<const std::string> full;
  for (auto& [id, c] : std::map(clients)) {
    if (!c->viewport && !full) full = line_of(replay::frame_to_json(*f));
    send_frame(c, f, full);
  }
}

void Server::Impl::enqueue(Command cmd) {
  {
    std::lock_guard lk(mu);
    queue.push_back(std::move(cmd));
  }
  cv.notify_all();
}

// ---------------------------------------------------------------- engine thread

void Server::Impl::reply(uint64_t client, json msg) {
  auto text = line_of(msg);
  net::post(ioc, [this, client, text] {
    auto it = clients.find(client);
    if (it != clients.end()) send(it->second, text);
  });
}

void Server::Impl::ack(uint64_t client, const std::string& cmd, json extra) {
  json j = {{"t", "ack"}, {"cmd", cmd}};
  j.update(extra);
  reply(client, std::move(j));
}

void Server::Impl::error(uint64_t client, const std::string& msg, const std::string& cmd) {
  json j = {{"t", "error"}, {"msg", msg}};
  if (!cmd.empty()) j["cmd"] = cmd;
  reply(client, std::move(j));
}

void Server::Impl::mark_finished() {
  {
    std::lock_guard lk(state_mu);
    finished = true;
  }
  state_cv.notify_all();
}

void Server::Impl::publish(const FramePtr& f) {
  net::post(ioc, [this, f] { broadcast(f); });
}

void Server::Impl::tick() {
  std::map<AgentId, ActionIndex> overrides;
  for (const auto& [agent, client] : controller) {
    auto p = pending.find(agent);
    overrides[agent] = p == pending.end() ? kNoOp : p->second;
  }
  pending.clear();
  FramePtr f = source->advance(overrides);
  if (!f) {
    exhausted = true;
    mark_finished();
    return;
  }
  if (Runner* r = source->runner()) {
    std::erase_if(controller, [&](const auto& kv) { return !r->env().world().alive(kv.first); });
  }
  {
    std::lock_guard lk(state_mu);
    summary = source->summary();
  }
  publish(f);
}

void Server::Impl::handle(const Command& c) {
  if (c.disconnect) {
    std::erase_if(controller, [&](const auto& kv) {
      if (kv.second != c.client) return false;
      pending.erase(kv.first);
      return true;
    });
    return;
  }
  const json& msg = c.msg;
  if (msg.value("t", json()) != "control" || !msg.contains("cmd") || !msg["cmd"].is_string()) {
    error(c.client, "expected {\"t\":\"control\",\"cmd\":...}");
    return;
  }
  const std::string cmd = msg["cmd"].get<std::string>();
  try {
    if (cmd == "pause") {
      paused = true;
      ack(c.client, cmd);
    } else if (cmd == "resume") {
      paused = false;
      next_tick = std::chrono::steady_clock::now();
      ack(c.client, cmd);
    } else if (cmd == "speed") {
      auto it = msg.find("steps_per_second");
      if (it == msg.end() || !it->is_number()) fail(ErrorCode::kInvalidConfig, "'steps_per_second' must be a number");
      double v = it->get<double>();
      if (!(v > 0.0 && v <= kMaxSpeed)) fail(ErrorCode::kInvalidConfig, "'steps_per_second' must be in (0, 1000]");
      speed = v;
      next_tick = std::chrono::steady_clock::now();
      ack(c.client, cmd, {{"steps_per_second", v}});
    } else if (cmd == "step") {
      if (exhausted) fail(ErrorCode::kState, "session has no more frames");
      ++step_requests;
      ack(c.client, cmd);
    } else if (cmd == "viewport") {
      std::optional<Rect> rect;
      if (msg.contains("x0") || msg.contains("y0") || msg.contains("x1") || msg.contains("y1")) {
        Rect r{};
        const char* keys[] = {"x0", "y0", "x1", "y1"};
        for (int i = 0; i < 4; ++i) {
          int64_t v = int_arg(msg, keys[i]);
          if (v < INT32_MIN || v > INT32_MAX) fail(ErrorCode::kInvalidConfig, "viewport coordinate out of range");
          r[static_cast<size_t>(i)] = static_cast<int32_t>(v);
        }
        if (r[0] > r[2] || r[1] > r[3]) fail(ErrorCode::kInvalidConfig, "viewport needs x0 <= x1 and y0 <= y1");
        rect = r;
      }
      uint64_t id = c.client;
      net::post(ioc, [this, id, rect] {
        auto it = clients.find(id);
        if (it == clients.end()) return;
        it->second->viewport = rect;
        json a = {{"t", "ack"}, {"cmd", "viewport"}};
        if (rect) a["rect"] = {(*rect)[0], (*rect)[1], (*rect)[2], (*rect)[3]};
        send(it->second, line_of(a));
        if (latest) send_frame(it->second, latest, nullptr);
      });
    } else if (cmd == "take" || cmd == "release" || cmd == "act" || cmd == "spawn" || cmd == "kill") {
      Runner* runner = source->runner();
      if (!runner) fail(ErrorCode::kState, "'" + cmd + "' is not available on a replay session");
      const World& w = runner->env().world();
      if (cmd == "spawn") {
        GroupId g = 0;
        const json& gj = msg.contains("group") ? msg["group"] : json();
        if (gj.is_string()) {
          g = runner->env().group_by_name(gj.get<std::string>());
        } else if (gj.is_number_unsigned() && gj.get<uint64_t>() < runner->env().group_count()) {
          g = static_cast<GroupId>(gj.get<uint64_t>());
        } else {
          fail(ErrorCode::kInvalidConfig, "'group' must be a group name or index");
        }
        int64_t x = int_arg(msg, "x");
        int64_t y = int_arg(msg, "y");
        if (x < INT32_MIN || x > INT32_MAX || y < INT32_MIN || y > INT32_MAX) {
          fail(ErrorCode::kPlacement, "spawn position out of range");
        }
        Direction dir = Direction::North;
        if (msg.contains("dir")) {
          const std::string d = msg["dir"].is_string() ? msg["dir"].get<std::string>() : "";
          bool ok = false;
          for (Direction cand : {Direction::North, Direction::East, Direction::South, Direction::West}) {
            if (d == direction_name(cand)) {
              dir = cand;
              ok = true;
            }
          }
          if (!ok) fail(ErrorCode::kInvalidConfig, "'dir' must be one of N, E, S, W");
        }
        AgentId id = runner->spawn(g, {static_cast<int32_t>(x), static_cast<int32_t>(y)}, dir);
        ack(c.client, cmd, {{"agent", id}});
        return;
      }
      AgentId id = agent_arg(msg);
      if (cmd == "take") {
        if (!w.alive(id)) fail(ErrorCode::kLookup, "agent " + std::to_string(id) + " is not alive");
        auto it = controller.find(id);
        if (it != controller.end() && it->second != c.client) {
          fail(ErrorCode::kState, "agent " + std::to_string(id) + " is controlled by another client");
        }
        controller[id] = c.client;
      } else if (cmd == "release") {
        auto it = controller.find(id);
        if (it == controller.end() || it->second != c.client) {
          fail(ErrorCode::kState, "agent " + std::to_string(id) + " is not under your control");
        }
        controller.erase(it);
        pending.erase(id);
      } else if (cmd == "act") {
        auto it = controller.find(id);
        if (it == controller.end() || it->second != c.client) {
          fail(ErrorCode::kState, "agent " + std::to_string(id) + " is not under your control");
        }
        int64_t a = int_arg(msg, "action");
        const auto n = static_cast<int64_t>(action_count(w.type_of(w.agent(id))));
        if (a < 0 || a >= n) {
          fail(ErrorCode::kInvalidAction, "action " + std::to_string(a) + " is outside [0, " + std::to_string(n) + ")");
        }
        pending[id] = static_cast<ActionIndex>(a);  // latest wins within a tick
      } else {
        runner->kill(id);
        controller.erase(id);
        pending.erase(id);
      }
      ack(c.client, cmd, {{"agent", id}});
    } else {
      error(c.client, "unknown command '" + cmd + "'", cmd);
    }
  } catch (const std::exception& e) {
    error(c.client, e.what(), cmd);
  }
}

void Server::Impl::engine_loop() {
  using clock = std::chrono::steady_clock;
  next_tick = clock::now();
  while (true) {
    std::deque<Command> batch;
    {
      std::unique_lock lk(mu);
      auto ready = [&] { return stopping || !queue.empty(); };
      if (paused || exhausted) {
        cv.wait(lk, ready);
      } else {
        cv.wait_until(lk, next_tick, ready);
      }
      if (stopping) return;
      batch.swap(queue);
    }
    for (const Command& c : batch) handle(c);
    try {
      const auto now = clock::now();
      if (!paused && !exhausted && now >= next_tick) {
        tick();
        next_tick += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / speed));
        if (next_tick < now) next_tick = now;
      }
      while (step_requests > 0 && !exhausted) {
        --step_requests;
        tick();
      }
      step_requests = 0;
    } catch (const Error& e) {
      // A failing source (e.g. a sink write error) ends the session.
      std::lock_guard lk(state_mu);
      summary["error"] = e.what();
      exhausted = true;
      finished = true;
      state_cv.notify_all();
    }
  }
}

// ---------------------------------------------------------------- public

Server::Server(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

Server::~Server() { stop(); }

std::unique_ptr<Server> Server::live(std::unique_ptr<Runner> runner, ServeOptions opts) {
  if (!runner) fail(ErrorCode::kContract, "null runner");
  auto impl = std::make_unique<Impl>();
  impl->opts = opts;
  impl->is_live = true;
  impl->source = std::make_unique<LiveSource>(std::move(runner), opts.max_steps, opts.record);
  impl->start();
  return std::unique_ptr<Server>(new Server(std::move(impl)));
}

std::unique_ptr<Server> Server::replay(const std::string& path, ServeOptions opts) {
  auto impl = std::make_unique<Impl>();
  impl->opts = opts;
  impl->source = std::make_unique<ReplaySource>(path);
  impl->start();
  return std::unique_ptr<Server>(new Server(std::move(impl)));
}

uint16_t Server::port() const { return impl_->bound_port; }

bool Server::finished() const {
  std::lock_guard lk(impl_->state_mu);
  return impl_->finished;
}

bool Server::wait_finished(std::chrono::milliseconds timeout) const {
  std::unique_lock lk(impl_->state_mu);
  return impl_->state_cv.wait_for(lk, timeout, [&] { return impl_->finished; });
}

void Server::stop() {
  if (impl_) impl_->shutdown();
}

json Server::summary() const {
  std::lock_guard lk(impl_->state_mu);
  return impl_->summary;
}

}  // namespace swarmgrid::serve
