#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmgrid/replay.hpp"
#include "swarmgrid/runner.hpp"

using namespace swarmgrid;
using namespace swarmgrid::replay;
using sgtest::error_of;

namespace {

// Records `steps` steps of a random pursuit episode.
std::string record(uint64_t steps, uint64_t seed = 3, std::vector<Frame>* frames = nullptr) {
  Environment env(builtin_scenario("pursuit", {12, {3, 3}, 0}));
  Runner runner(env, policies_for(env, {}), seed);
  std::ostringstream out;
  Recorder rec(out, make_header(runner.env()));
  for (uint64_t s = 0; s < steps && !runner.done(); ++s) {
    StepResult r = runner.advance();
    Frame f = make_frame(runner.env().world(), &r);
    if (frames) frames->push_back(f);
    rec.frame(f);
  }
  rec.flush();
  return out.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("ten steps make a header and ten frames") {
  std::vector<Frame> frames;
  std::string text = record(10, 3, &frames);
  auto ls = lines(text);
  REQUIRE(ls.size() == 11);
  CHECK(ls[0].rfind("{\"t\":\"header\"", 0) == 0);
  for (size_t i = 1; i < ls.size(); ++i) CHECK(ls[i].rfind("{\"t\":\"frame\"", 0) == 0);

  std::istringstream in(text);
  Reader reader(in);
  CHECK(reader.header().width == 12);
  CHECK(reader.header().groups[1] == GroupInfo{"prey", "prey"});
  Frame f;
  size_t i = 0;
  while (reader.next(f)) {
    CHECK(f == frames.at(i));
    CHECK(f.step == i + 1);
    ++i;
  }
  CHECK(i == 10);
  CHECK_FALSE(reader.truncated());
}

TEST_CASE("json round trip") {
  Environment env(builtin_scenario("battle", {10, {4, 4}, 0}));
  env.reset(0);
  ReplayHeader h = make_header(env);
  CHECK(header_from_json(header_to_json(h)) == h);
  CHECK(h.walls.size() == 36);

  Frame f;
  f.step = 42;
  f.agents = {{0, 0, 1, 2, Direction::West, 9.5}, {3, 1, 4, 4, Direction::South, 0.25}};
  f.events = {{EventKind::Attack, 0, 3}, {EventKind::Collide, 3, kWallCell}, {EventKind::Die, 3, 0}};
  f.rewards = {{0, 0.2}, {3, -1.0}};
  f.populations = {1, 0};
  CHECK(frame_from_json(frame_to_json(f)) == f);
  std::string line = encode_line(frame_to_json(f));
  CHECK(line.rfind("{\"t\":\"frame\",\"agents\":", 0) == 0);
  CHECK(line.find("[\"collide\",3,null]") != std::string::npos);
  CHECK(frame_from_json(nlohmann::json::parse(line)) == f);
}

TEST_CASE("malformed files") {
  std::istringstream empty("");
  CHECK(error_of([&] { Reader r(empty); }) == ErrorCode::kFormat);
  std::istringstream junk("hello\n");
  CHECK(error_of([&] { Reader r(junk); }) == ErrorCode::kFormat);

  std::string text = record(3);
  auto ls = lines(text);
  auto header = nlohmann::json::parse(ls[0]);
  header["version"] = 2;
  std::istringstream future(encode_line(header) + "\n");
  CHECK(error_of([&] { Reader r(future); }) == ErrorCode::kUnsupportedVersion);

  // cut the last frame in half
  std::string cut = text.substr(0, text.size() - ls.back().size() / 2 - 1);
  std::istringstream in(cut);
  Reader r(in);
  Frame f;
  int n = 0;
  while (r.next(f)) ++n;
  CHECK(n == 2);
  CHECK(r.truncated());
  CHECK(r.error().find("line 4") != std::string::npos);

  // steps must increase
  std::istringstream twice(ls[0] + "\n" + ls[1] + "\n" + ls[1] + "\n");
  Reader t(twice);
  CHECK(t.next(f));
  CHECK_FALSE(t.next(f));
  CHECK(t.truncated());
}

TEST_CASE("recorder rejects out-of-order frames and dead sinks") {
  std::ostringstream out;
  ReplayHeader h;
  h.width = h.height = 4;
  Recorder rec(out, h);
  Frame f;
  f.step = 2;
  rec.frame(f);
  CHECK(error_of([&] { rec.frame(f); }).has_value());

  std::ofstream closed;
  CHECK(error_of([&] { Recorder bad(closed, h); }) == ErrorCode::kIo);
}

TEST_CASE("a thousand frames") {
  Environment env(builtin_scenario("pursuit", {16, {4, 4}, 1000}));
  env.reset(1);
  std::ostringstream out;
  Recorder rec(out, make_header(env));
  for (uint64_t s = 1; s <= 1000; ++s) {
    std::vector<std::vector<ActionIndex>> idle{std::vector<ActionIndex>(4, 0), std::vector<ActionIndex>(4, 0)};
    StepResult r = env.step(idle);
    rec.frame(make_frame(env.world(), &r));
  }
  rec.flush();
  auto path = std::filesystem::temp_directory_path() / "swarmgrid_replay_test.jsonl";
  std::ofstream(path) << out.str();
  Summary s = summarize_file(path.string());
  CHECK(s.frames == 1000);
  CHECK(s.first_step == 1);
  CHECK(s.last_step == 1000);
  CHECK(s.final_populations == std::vector<uint32_t>{4, 4});
  CHECK_FALSE(s.truncated);
  std::filesystem::remove(path);
  CHECK(error_of([] { summarize_file("/nonexistent/replay.jsonl"); }) == ErrorCode::kIo);
}
