#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "support.hpp"
#include "wdn/cli.hpp"

using namespace wdn;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitValidation);
  CHECK(cli({"bogus"}).code == kExitValidation);
  CHECK(cli({"--help"}).code == kExitOk);
  CHECK(cli({"train", "--world", "x"}).code == kExitValidation);  // --agent missing
  const auto dir = testing::scratch_dir("cli_usage");
  CHECK(cli({"train", "--agent", "4", "--world", dir.string()}).code == kExitValidation);
  CHECK(cli({"train", "--agent", "1", "--world", (dir / "nope").string(), "--out", (dir / "o").string()}).code ==
        kExitIo);
}

TEST_CASE("gen writes a world and is repeatable") {
  const auto dir = testing::scratch_dir("cli_gen");
  const auto a = dir / "a", b = dir / "b";
  REQUIRE(cli({"gen", "--seed", "42", "--days", "30", "--out", a.string()}).code == kExitOk);
  REQUIRE(cli({"--seed", "42", "--out", b.string(), "gen", "--days", "30"}).code == kExitOk);
  for (const char* f : {"network.json", "operator.json", "history.csv", "demands.csv", "manifest.json"})
    CHECK(fs::exists(a / f));
  CHECK(lines(slurp(a / "history.csv")) == 1 + 30 * 96);
  CHECK(slurp(a / "history.csv") == slurp(b / "history.csv"));
  CHECK(slurp(a / "network.json") == slurp(b / "network.json"));
  const auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(m["command"] == "gen");
  CHECK(m["seeds"]["seed"] == 42);
  CHECK(m.contains("wall_clock_seconds"));
  CHECK(m.contains("tool_version"));

  REQUIRE(cli({"gen", "--seed", "43", "--days", "2", "--out", (dir / "c").string()}).code == kExitOk);
  CHECK(slurp(a / "network.json") != slurp(dir / "c" / "network.json"));
}

TEST_CASE("unwritable output directory") {
  const auto dir = testing::scratch_dir("cli_ro");
  { std::ofstream(dir / "file") << "x"; }
  // a regular file where a directory is expected
  CHECK(cli({"gen", "--days", "1", "--out", (dir / "file" / "sub").string()}).code == kExitIo);
}

TEST_CASE("train, eval and hybrid end to end") {
  const auto dir = testing::scratch_dir("cli_e2e");
  const auto world = (dir / "world").string();
  REQUIRE(cli({"gen", "--days", "20", "--out", world}).code == kExitOk);

  SUBCASE("zero budget writes an untrained checkpoint") {
    const auto r = cli({"train", "--agent", "1", "--world", world, "--steps", "0", "--out", (dir / "t0").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(dir / "t0" / "checkpoint.json"));
    CHECK(lines(slurp(dir / "t0" / "reward_curve.csv")) == 1);
  }
  SUBCASE("rule-based controller against itself is zero") {
    const auto out = dir / "rb";
    REQUIRE(cli({"eval", "--checkpoint", "rule-based", "--world", world, "--episodes", "4", "--out", out.string()})
                .code == kExitOk);
    const auto j = nlohmann::json::parse(slurp(out / "comparison.json"));
    bool seen = false;
    for (const auto& row : j["rows"]) {
      if (row["label"] == "historical") continue;
      CHECK(row["area_improvement_pct"] == 0.0);
      CHECK(row["cost_delta_pct"] == 0.0);
      seen = true;
    }
    CHECK(seen);
  }
  SUBCASE("agent 2 pipeline") {
    const auto t = dir / "t2";
    REQUIRE(cli({"train", "--agent", "2", "--world", world, "--steps", "2000", "--out", t.string()}).code == kExitOk);
    const auto ck = (t / "checkpoint.json").string();
    const auto ev = dir / "e2";
    REQUIRE(cli({"eval", "--checkpoint", ck, "--world", world, "--episodes", "3", "--with-random", "--out",
                 ev.string()})
                .code == kExitOk);
    CHECK(lines(slurp(ev / "comparison.csv")) == 4);
    const auto hy = dir / "h2";
    REQUIRE(cli({"hybrid", "--checkpoint", ck, "--world", world, "--cases", "3", "--workers", "2", "--out",
                 hy.string()})
                .code == kExitOk);
    const auto j = nlohmann::json::parse(slurp(hy / "strategy_report.json"));
    CHECK(j["strategies"].size() == 5);
    const auto rep = dir / "rep";
    REQUIRE(cli({"report", "--from", ev.string(), hy.string(), "--out", rep.string()}).code == kExitOk);
    CHECK(slurp(rep / "report.md").find("dynamic_end") != std::string::npos);
  }
  SUBCASE("hybrid refuses an agent 1 checkpoint") {
    const auto t = dir / "t1";
    REQUIRE(cli({"train", "--agent", "1", "--world", world, "--steps", "0", "--out", t.string()}).code == kExitOk);
    CHECK(cli({"hybrid", "--checkpoint", (t / "checkpoint.json").string(), "--world", world, "--out",
               (dir / "bad").string()})
              .code == kExitValidation);
  }
}

TEST_CASE("hybrid with too small an attempt budget") {
  const auto dir = testing::scratch_dir("cli_few");
  const auto world = (dir / "world").string();
  REQUIRE(cli({"gen", "--days", "20", "--out", world}).code == kExitOk);
  const auto t = dir / "t";
  REQUIRE(cli({"train", "--agent", "2", "--world", world, "--steps", "0", "--out", t.string()}).code == kExitOk);
  const auto r = cli({"hybrid", "--checkpoint", (t / "checkpoint.json").string(), "--world", world, "--cases", "16",
                      "--attempts", "10", "--out", (dir / "h").string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("imperfection") != std::string::npos);
}

}  // TEST_SUITE
