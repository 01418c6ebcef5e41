#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "advcons/cli.hpp"
#include "test_support.hpp"

using namespace advcons;
using testing::scenario_dir;
using testing::slurp;
using testing::spit;
using testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string scenario(const char* name) { return (scenario_dir() / name).string(); }

}  // namespace

TEST_CASE("simulate writes trajectory and summary") {
  TempDir dir;
  const auto r = cli({"simulate", "--scenario", scenario("paper_k4_none.json"), "--out", dir.path().string()});
  CHECK(r.code == kExitOk);
  CHECK(std::filesystem::exists(dir.path() / "trajectory.csv"));
  CHECK_FALSE(std::filesystem::exists(dir.path() / "control.csv"));
  const auto summary = slurp(dir.path() / "summary.json");
  const auto pos = summary.find("\"final_spread\": ");
  REQUIRE(pos != std::string::npos);
  CHECK(std::stod(summary.substr(pos + 16)) < 0.05);
}

TEST_CASE("simulate on a consensus start reports zero objective") {
  TempDir dir;
  const auto r = cli({"simulate", "--scenario", scenario("consensus_start.json"), "--out", dir.path().string(),
                      "--quiet"});
  CHECK(r.code == kExitOk);
  CHECK(r.err.empty());
  CHECK(slurp(dir.path() / "summary.json").find("\"objective\": 0.0") != std::string::npos);
}

TEST_CASE("simulate warns about an ignored attack block") {
  TempDir dir;
  const auto r = cli({"simulate", "--scenario", scenario("paper_k4.json"), "--out", dir.path().string(), "--quiet"});
  CHECK(r.code == kExitOk);
  CHECK(r.err.find("ignores") != std::string::npos);
}

TEST_CASE("missing scenario file is a configuration error naming the path") {
  const auto r = cli({"simulate", "--scenario", "/no/such/file.json"});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("/no/such/file.json") != std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"simulate", "--scenario", scenario("paper_k4.json"), "--bogus"}).code == kExitUsage);
  CHECK(cli({"simulate"}).code == kExitUsage);
  CHECK(cli({"dance"}).code == kExitUsage);
  CHECK(cli({"verify", "--steps", "0"}).code == kExitUsage);
  CHECK(cli({"verify", "--inject-fault", "other"}).code == kExitUsage);
  CHECK(cli({"attack2", "--scenario", scenario("paper_k4.json")}).code == kExitUsage);
}

TEST_CASE("invalid scenario content is a configuration error") {
  TempDir dir;
  spit(dir.path() / "bad.json", "{\"name\": \"x\", \"topology\": {\"n\": 2, \"edges\": [[1, 2, 1]]},\n"
                                "\"x0\": [0, 1], \"T\": 1, \"steps\": 10,\n\"attack\": {\"link\": {\"ell\": 5}}}");
  const auto r = cli({"attack1", "--scenario", (dir.path() / "bad.json").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("attack.ell") != std::string::npos);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("help names the output directory variable") {
  const auto r = cli({"--help"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find(kOutDirEnv) != std::string::npos);
  CHECK(r.out.find("inject-fault") == std::string::npos);
}

TEST_CASE("attack1 writes broken edges and is deterministic") {
  TempDir a, b;
  CHECK(cli({"attack1", "--scenario", scenario("paper_k4.json"), "--out", a.path().string(), "--quiet"}).code == 0);
  CHECK(cli({"attack1", "--scenario", scenario("paper_k4.json"), "--out", b.path().string(), "--quiet"}).code == 0);
  for (const char* name : {"trajectory.csv", "broken_edges.csv", "summary.json"}) {
    CHECK(slurp(a.path() / name) == slurp(b.path() / name));
  }
  CHECK(slurp(a.path() / "summary.json").find("\"schedule_agreement\": 1.0") != std::string::npos);
}

TEST_CASE("attack2 honours the step override") {
  TempDir dir;
  const auto r = cli({"attack2", "--scenario", scenario("two_node.json"), "--out", dir.path().string(), "--steps",
                      "80", "--quiet"});
  CHECK(r.code == kExitOk);
  const auto control = slurp(dir.path() / "control.csv");
  CHECK(std::count(control.begin(), control.end(), '\n') == 82);
}

TEST_CASE("output directory falls back to the environment variable") {
  TempDir dir;
  ::setenv(kOutDirEnv, dir.path().c_str(), 1);
  const auto r = cli({"simulate", "--scenario", scenario("paper_k4_none.json"), "--quiet"});
  ::unsetenv(kOutDirEnv);
  CHECK(r.code == kExitOk);
  CHECK(std::filesystem::exists(dir.path() / "summary.json"));
}

TEST_CASE("reproduce-paper emits all runs and a passing check table") {
  TempDir dir;
  const auto r = cli({"reproduce-paper", "--out", dir.path().string(), "--quiet"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(std::filesystem::exists(dir.path() / "no_attack" / "trajectory.csv"));
  CHECK(std::filesystem::exists(dir.path() / "attack1" / "broken_edges.csv"));
  CHECK(std::filesystem::exists(dir.path() / "attack2" / "control.csv"));
  const auto table = slurp(dir.path() / "check_table.csv");
  CHECK(table.find("false") == std::string::npos);
}

TEST_CASE("verify names the failing property under the sign fault") {
  const auto r = cli({"verify", "--inject-fault", "f-sign", "--quiet"});
  CHECK(r.code == kExitFailure);
  CHECK(r.out.find("FAIL [3] greedy-MP consistency") != std::string::npos);
  const auto last = r.out.substr(r.out.rfind('\n', r.out.size() - 2) + 1);
  CHECK(last.find("3 (greedy-MP consistency)") != std::string::npos);
}
