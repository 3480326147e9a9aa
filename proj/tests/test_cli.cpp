#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("swarmgrid_cli_" + std::to_string(getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string at(const char* name) { return (scratch() / name).string(); }

// Runs the CLI with `args`; `env` is prepended as VAR=value assignments.
Result cli(const std::string& args, const std::string& env = "") {
  fs::path out = scratch() / "stdout", err = scratch() / "stderr";
  std::string cmd = env + " '" SWARMGRID_CLI "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
  int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

const char* kPursuitRule =
    "symbol a: predator[any]\n"
    "symbol b: prey[any]\n"
    "rule on attack(a, b) receiver a, b value 1, -1\n";

}  // namespace

TEST_CASE("run") {
  Result r = cli("run pursuit --seed 7 --steps 100 --policy predator=random prey=random");
  CHECK(r.code == 0);
  CHECK(r.out.find("predator") != std::string::npos);

  r = cli("run pursuit --seed 7 --steps 100 --json");
  REQUIRE(r.code == 0);
  auto s = nlohmann::json::parse(r.out);
  CHECK(s["steps"] == 100);
  CHECK(s["groups"].size() == 2);

  CHECK(cli("run nowhere").code == 1);
  CHECK(cli("run pursuit --policy wolves=random").code == 1);
  CHECK(cli("run pursuit --bogus").code == 1);
  CHECK(cli("").code != 0);
}

TEST_CASE("run is reproducible, and SWARMGRID_SEED is the default seed") {
  REQUIRE(cli("run pursuit --seed 7 --steps 200 --record " + at("a.jsonl")).code == 0);
  REQUIRE(cli("run pursuit --seed 7 --steps 200 --record " + at("b.jsonl")).code == 0);
  REQUIRE(cli("run pursuit --steps 200 --record " + at("c.jsonl"), "SWARMGRID_SEED=7").code == 0);
  REQUIRE(cli("run pursuit --seed 8 --steps 200 --record " + at("d.jsonl")).code == 0);
  std::string a = slurp(at("a.jsonl"));
  CHECK(a.size() > 1000);
  CHECK(a == slurp(at("b.jsonl")));
  CHECK(a == slurp(at("c.jsonl")));
  CHECK(a != slurp(at("d.jsonl")));
  CHECK(cli("run pursuit --steps 1", "SWARMGRID_SEED=seven").code == 1);
}

TEST_CASE("run reports reward program errors with a location") {
  nlohmann::json doc = nlohmann::json::parse(slurp(SWARMGRID_SOURCE_DIR "/docs/examples/duel.json"));
  CHECK(cli("run " + std::string(SWARMGRID_SOURCE_DIR "/docs/examples/duel.json") + " --steps 3").code == 0);
  doc["reward_program"] = "symbol a: red[any]\nrule on attack(a, z) receiver a value 1";
  write(at("bad.json"), doc.dump());
  Result r = cli("run " + at("bad.json"));
  CHECK(r.code == 1);
  CHECK(r.err.find("2:") != std::string::npos);
  CHECK(r.err.find("undefined symbol 'z'") != std::string::npos);
}

TEST_CASE("train") {
  Result r = cli("train tiny-pursuit --total-steps 0 --out " + at("zero.ckpt") + " --json");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(at("zero.ckpt")));
  CHECK(slurp(at("zero.ckpt")).substr(0, 4) == "SGQN");
  CHECK(cli("run tiny-pursuit --policy predator=" + at("zero.ckpt")).code == 0);
  // A tiny-pursuit network does not fit the prey group.
  CHECK(cli("run tiny-pursuit --policy prey=" + at("zero.ckpt")).code == 1);

  const std::string small = " --total-steps 600 --learning-starts 100 --eval-interval 300 --eval-episodes 2 --seed 3";
  REQUIRE(cli("train tiny-pursuit --out " + at("t1.ckpt") + small).code == 0);
  REQUIRE(cli("train tiny-pursuit --out " + at("t2.ckpt") + small).code == 0);
  std::string curve = slurp(at("t1.ckpt") + ".curve.csv");
  CHECK(curve.rfind("step,epsilon,mean_reward\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 3);
  CHECK(curve == slurp(at("t2.ckpt") + ".curve.csv"));
  CHECK(slurp(at("t1.ckpt")) == slurp(at("t2.ckpt")));

  r = cli("train tiny-pursuit --out " + at("div.ckpt") + " --lr 1e300" + small);
  CHECK(r.code == 2);
  CHECK_FALSE(fs::exists(at("div.ckpt")));
  CHECK(fs::exists(at("div.ckpt") + ".curve.csv"));

  CHECK(cli("train tiny-pursuit --out " + at("x.ckpt") + " --gamma 1.5").code == 1);
  CHECK(cli("train tiny-pursuit").code == 1);

  // Self-play evaluation with one checkpoint for both armies.
  REQUIRE(cli("train battle --group a --total-steps 0 --out " + at("army.ckpt")).code == 0);
  CHECK(cli("run battle --steps 5 --policy a=" + at("army.ckpt") + " b=" + at("army.ckpt")).code == 0);
}

TEST_CASE("check") {
  write(at("pursuit.rules"), kPursuitRule);
  CHECK(cli("check " + at("pursuit.rules")).code == 0);
  CHECK(cli("check " + at("pursuit.rules") + " --schema pursuit").code == 0);
  CHECK(cli("check " + at("pursuit.rules") + " --schema battle").code == 1);

  write(at("undeclared.rules"), "symbol a: predator[any]\nrule on attack(a, c) receiver a value 1\n");
  Result r = cli("check " + at("undeclared.rules"));
  CHECK(r.code == 1);
  CHECK(r.err.find("undeclared.rules:2:9: rule 1: undefined symbol 'c'") != std::string::npos);

  write(at("unsafe.rules"), "symbol a: predator[any]\nsymbol b: prey[any]\nrule on not die(a) receiver a value 1\n");
  r = cli("check " + at("unsafe.rules"));
  CHECK(r.code == 1);
  CHECK(r.err.find(":3:1: rule 1: unsafe negation") != std::string::npos);

  write(at("syntax.rules"), "symbol a predator[any]\n");
  r = cli("check " + at("syntax.rules") + " --json");
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.out)["ok"] == false);

  CHECK(cli("check " + at("missing.rules")).code == 2);
}

TEST_CASE("bench") {
  Result r = cli("bench --agents 1000 --map 128 --steps 100 --json");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["steps_per_second"].get<double>() > 0);
  CHECK(j["peak_rss_bytes"].get<double>() > 0);
  CHECK(cli("bench --agents 20000 --map 100 --steps 1").code == 1);
}

TEST_CASE("replay") {
  REQUIRE(cli("run pursuit --seed 2 --steps 10 --record " + at("ten.jsonl")).code == 0);
  Result r = cli("replay " + at("ten.jsonl") + " --summary --json");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["frames"] == 10);
  CHECK(j["last_step"] == 10);
  r = cli("replay " + at("ten.jsonl") + " --summary");
  CHECK(r.out.find("10 frames") != std::string::npos);

  std::string text = slurp(at("ten.jsonl"));
  write(at("cut.jsonl"), text.substr(0, text.size() - 40));
  r = cli("replay " + at("cut.jsonl") + " --summary");
  CHECK(r.code == 1);
  CHECK(r.err.find("9 complete frame(s)") != std::string::npos);
  write(at("empty.jsonl"), "");
  CHECK(cli("replay " + at("empty.jsonl") + " --summary").code == 1);
  CHECK(cli("replay " + at("absent.jsonl") + " --summary").code == 2);
}

TEST_CASE("help lists every flag") {
  Result r = cli("train --help");
  CHECK(r.code == 0);
  for (const char* flag : {"--gamma", "--lr", "--batch-size", "--buffer", "--eps-start", "--eps-end", "--eps-decay",
                           "--target-sync", "--hidden", "--total-steps", "--eval-episodes", "--seed", "--out"}) {
    CHECK(r.out.find(flag) != std::string::npos);
  }
  CHECK(cli("--version").code == 0);
  fs::remove_all(scratch());
}
