#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include "json.hpp"

#include "swarmgrid/runner.hpp"

namespace swarmgrid::serve {

struct ServeOptions {
  std::string address = "127.0.0.1";
  uint16_t port = 0;  // 0 picks a free port
  double steps_per_second = 5.0;
  bool start_paused = false;
  /// Live sessions stop stepping after this many steps (0 = episode end).
  uint64_t max_steps = 0;
  /// Live sessions append every frame here; flushed when the episode ends.
  std::ostream* record = nullptr;
};

/// A websocket session over a live runner or a replay file.
///
/// One engine thread owns the source and applies control messages from an
/// ordered queue between steps; one I/O thread handles every client and
/// receives frames through a broadcast channel. Messages follow the JSON line
/// protocol in docs/protocol.md.
class Server {
 public:
  static std::unique_ptr<Server> live(std::unique_ptr<Runner> runner, ServeOptions opts);
  static std::unique_ptr<Server> replay(const std::string& path, ServeOptions opts);
  ~Server();

  uint16_t port() const;
  /// True once the source has no more frames.
  bool finished() const;
  /// Waits up to `timeout` for the source to finish.
  bool wait_finished(std::chrono::milliseconds timeout) const;
  void stop();
  /// Live sessions: the runner summary. Replay sessions: frames streamed so far.
  nlohmann::json summary() const;

  struct Impl;

 private:
  explicit Server(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace swarmgrid::serve
