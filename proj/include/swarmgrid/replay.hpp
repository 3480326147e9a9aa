#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "swarmgrid/engine.hpp"
#include "swarmgrid/env.hpp"

namespace swarmgrid::replay {

inline constexpr int kFormatVersion = 1;

struct GroupInfo {
  std::string name;
  std::string type;
  bool operator==(const GroupInfo&) const = default;
};

struct ReplayHeader {
  int version = kFormatVersion;
  int32_t width = 0;
  int32_t height = 0;
  std::vector<Position> walls;
  std::vector<AgentTypeSpec> types;
  std::vector<GroupInfo> groups;
  std::string scenario;
  uint64_t seed = 0;
  bool operator==(const ReplayHeader&) const = default;
};

struct AgentState {
  AgentId id = 0;
  GroupId group = 0;
  int32_t x = 0;
  int32_t y = 0;
  Direction dir = Direction::North;
  double hp = 0.0;
  bool operator==(const AgentState&) const = default;
};

struct Frame {
  uint64_t step = 0;
  std::vector<AgentState> agents;  // ascending id
  EventLog events;
  std::vector<std::pair<AgentId, double>> rewards;  // ascending id, nonzero only
  std::vector<uint32_t> populations;
  bool operator==(const Frame&) const = default;
};

ReplayHeader make_header(const Environment& env);
/// State after a step; `result` supplies the events and rewards of that step.
Frame make_frame(const World& world, const StepResult* result);

nlohmann::json header_to_json(const ReplayHeader& h);
nlohmann::json frame_to_json(const Frame& f);
/// Both throw Error(kFormat) on schema violations; header_from_json throws
/// Error(kUnsupportedVersion) for other format versions.
ReplayHeader header_from_json(const nlohmann::json& j);
Frame frame_from_json(const nlohmann::json& j);

/// Client key binding over one type's "actions" table from the header, in the
/// agent's own frame: ArrowUp/Down/Left/Right move one cell forward, back,
/// left or right, " " attacks the cell ahead, "q"/"e" turn left/right and
/// "." does nothing. Empty when the key is unbound or the type lacks the action.
std::optional<ActionIndex> key_action(const nlohmann::json& actions, std::string_view key);

/// One line of the file, without the trailing newline.
std::string encode_line(const nlohmann::json& j);

/// Header then one frame per step. Every write checks the sink and throws
/// Error(kIo) on failure.
class Recorder {
 public:
  Recorder(std::ostream& sink, const ReplayHeader& header);
  void frame(const Frame& f);
  void flush();
  uint64_t frames() const { return frames_; }

 private:
  void put(const std::string& line);
  std::ostream* sink_;
  uint64_t frames_ = 0;
  std::optional<uint64_t> last_step_;
};

/// Streaming reader. The header is parsed on construction (Error(kFormat) for
/// an empty or malformed first line, Error(kUnsupportedVersion) for another
/// version). next() stops at end of input or at the first damaged line, in
/// which case truncated() is set and error() says where.
class Reader {
 public:
  explicit Reader(std::istream& in);
  const ReplayHeader& header() const { return header_; }
  bool next(Frame& out);
  bool truncated() const { return truncated_; }
  const std::string& error() const { return error_; }
  uint64_t frames_read() const { return frames_; }

 private:
  std::istream* in_;
  ReplayHeader header_;
  uint64_t line_ = 1;
  uint64_t frames_ = 0;
  std::optional<uint64_t> last_step_;
  bool truncated_ = false;
  std::string error_;
};

struct Summary {
  ReplayHeader header;
  uint64_t frames = 0;
  uint64_t first_step = 0;
  uint64_t last_step = 0;
  std::vector<uint32_t> final_populations;
  bool truncated = false;
  std::string error;
};

/// Streams a whole file. Throws Error(kIo) if it cannot be opened.
Summary summarize_file(const std::string& path);
nlohmann::json summary_to_json(const Summary& s);

}  // namespace swarmgrid::replay
