#include <doctest.h>

#include <algorithm>
#include <clocale>

#include "advcons/report.hpp"
#include "advcons/scenario.hpp"
#include "test_support.hpp"

using namespace advcons;
using testing::scenario_dir;
using testing::slurp;
using testing::spit;
using testing::TempDir;

namespace {

std::string minimal(const std::string& extra_fields) {
  return "{\n  \"name\": \"t\",\n  \"topology\": {\"n\": 3, \"edges\": [[1, 2, 1.0], [2, 3, 0.5]]},\n"
         "  \"x0\": [0, 1, 2],\n  \"T\": 2,\n  \"steps\": 40" +
         extra_fields + "\n}\n";
}

std::size_t line_count(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("bundled k4 fixture matches the built-in scenario") {
  const auto loaded = load_scenario(scenario_dir() / "paper_k4.json");
  CHECK(loaded == paper_k4_scenario());
  const auto& w = loaded.topology.edges();
  CHECK(w[0].weight == 0.0326);
  CHECK(w[5].weight == 1.4916);
}

TEST_CASE("topology file references resolve next to the scenario") {
  const auto loaded = load_scenario(scenario_dir() / "paper_k4_noise.json");
  CHECK(loaded.topology == paper_k4_topology());
  REQUIRE(loaded.topology_file);
  CHECK(*loaded.topology_file == "k4_topology.json");
  const auto& noise = std::get<NoiseAttackSpec>(loaded.attack);
  CHECK(noise.p_max == 1.0);
  CHECK(noise.safety == 0.9);
  CHECK(loaded.noise_problem().safety == 0.9);
}

TEST_CASE("defaults for optional fields") {
  const auto c = parse_scenario(minimal(""));
  CHECK(std::holds_alternative<NoAttack>(c.attack));
  CHECK(c.kernel == Kernel::constant(1.0));
  CHECK(c.seed == 0);
}

TEST_CASE("round trip through the serialized form") {
  std::vector<ScenarioConfig> configs{paper_k4_scenario()};
  auto noise = paper_k4_scenario();
  noise.attack = NoiseAttackSpec{2.0, std::nullopt, 0.01};
  noise.kernel = Kernel::table({{0.0, 1.0}, {0.7, 2.5}, {2.0, 0.3}});
  noise.seed = -17;
  noise.x0 = Eigen::Vector4d(0.1, 1.0 / 3.0, -2e-17, 1e300);
  configs.push_back(noise);
  auto safety = paper_k4_scenario();
  safety.attack = NoiseAttackSpec{1.0, 0.5, std::nullopt};
  safety.name = "with \"quotes\" and unicode é";
  configs.push_back(safety);
  auto none = paper_k4_scenario();
  none.attack = NoAttack{};
  none.horizon = 0.1;
  none.steps = 7;
  configs.push_back(none);
  for (const auto& c : configs) CHECK(parse_scenario(serialize_scenario(c)) == c);

  TempDir dir;
  auto file_backed = load_scenario(scenario_dir() / "paper_k4_none.json");
  spit(dir.path() / "k4_topology.json", serialize_topology(file_backed.topology));
  spit(dir.path() / "s.json", serialize_scenario(file_backed));
  CHECK(load_scenario(dir.path() / "s.json") == file_backed);
}

TEST_CASE("parsing ignores the C locale's decimal separator") {
  const char* previous = std::setlocale(LC_NUMERIC, nullptr);
  const std::string saved = previous ? previous : "C";
  if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8") != nullptr) {
    const auto c = parse_scenario(minimal(",\n  \"kernel\": {\"constant\": 0.25}"));
    CHECK(c.kernel.constant_value() == 0.25);
    CHECK(serialize_scenario(c).find("0.25") != std::string::npos);
  }
  std::setlocale(LC_NUMERIC, saved.c_str());
}

TEST_CASE("budget larger than the edge count is rejected with its line") {
  try {
    parse_scenario(minimal(",\n  \"attack\": {\"link\": {\"ell\": 3}}"));
    FAIL("expected a budget error");
  } catch (const ScenarioError& e) {
    CHECK(e.field() == "attack.ell");
    CHECK(e.line() == 7);
    CHECK(std::string(e.what()).find("exceeds edge count") != std::string::npos);
  }
}

TEST_CASE("initial state length must match the node count") {
  const std::string text =
      "{\n  \"name\": \"t\",\n  \"topology\": {\"n\": 3, \"edges\": [[1, 2, 1.0]]},\n"
      "  \"x0\": [0, 1],\n  \"T\": 2,\n  \"steps\": 40\n}\n";
  try {
    parse_scenario(text);
    FAIL("expected a length error");
  } catch (const ScenarioError& e) {
    CHECK(e.field() == "x0");
    CHECK(e.line() == 4);
  }
}

TEST_CASE("invalid fields are named") {
  auto field_of = [](const std::string& text) {
    try {
      parse_scenario(text);
    } catch (const ScenarioError& e) {
      return e.field();
    }
    return std::string("<accepted>");
  };
  CHECK(field_of(minimal(",\n  \"attack\": {\"noise\": {\"p_max\": 0}}")) == "attack.p_max");
  CHECK(field_of(minimal(",\n  \"attack\": {\"noise\": {\"p_max\": 1, \"nu\": 1.0}}")) == "attack.nu");
  CHECK(field_of(minimal(",\n  \"attack\": {\"noise\": {\"p_max\": 1, \"safety\": 1.5}}")) == "attack.safety");
  CHECK(field_of(minimal(",\n  \"attack\": \"bogus\"")) == "attack");
  CHECK(field_of(minimal(",\n  \"kernel\": {\"constant\": -1}")) == "kernel");
  CHECK(field_of("{\"name\": \"t\"}") == "topology");
  CHECK(field_of("{\"name\": \"t\", \"topology\": {\"n\": 2, \"edges\": [[1, 3, 1]]}}") == "topology.edges[0]");
  CHECK(field_of(minimal(",\n  \"attack\": {\"noise\": {\"p_max\": 1, \"nu\": 0.05}}")) == "<accepted>");
}

TEST_CASE("syntax errors report the line") {
  try {
    parse_scenario("{\n  \"name\": \"t\",\n  \"x0\": [1, 2,,]\n}\n");
    FAIL("expected a parse error");
  } catch (const ScenarioError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("missing files name the path") {
  try {
    load_scenario("/nonexistent/scenario.json");
    FAIL("expected an error");
  } catch (const ScenarioError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/scenario.json") != std::string::npos);
  }
}

TEST_CASE("link attack report files") {
  const auto config = paper_k4_scenario();
  const auto outcome = simulate_attack1(config.link_problem());
  TempDir dir;
  const auto files = write_report(config, outcome, dir.path());
  REQUIRE(files.size() == 3);
  const auto trajectory = slurp(dir.path() / "trajectory.csv");
  CHECK(line_count(trajectory) == 402);  // header plus 401 samples
  const auto edges = slurp(dir.path() / "broken_edges.csv");
  CHECK(edges.rfind("t,edge_i,edge_j\n0,1,3\n0,1,4\n", 0) == 0);
  CHECK(line_count(edges) == 801);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "control.csv"));
  const auto summary = slurp(dir.path() / "summary.json");
  CHECK(summary.find("\"classification\": \"ongoing\"") != std::string::npos);

  TempDir again;
  write_report(config, simulate_attack1(config.link_problem()), again.path());
  for (const char* name : {"trajectory.csv", "broken_edges.csv", "summary.json"}) {
    CHECK(slurp(dir.path() / name) == slurp(again.path() / name));
  }
}

TEST_CASE("no-attack report has no control file") {
  auto config = paper_k4_scenario();
  config.attack = NoAttack{};
  const auto outcome = simulate_consensus(config.topology, config.x0, config.grid(), config.kernel);
  TempDir dir;
  const auto files = write_report(config, outcome, dir.path());
  CHECK(files.size() == 2);
  CHECK_FALSE(std::filesystem::exists(dir.path() / "control.csv"));
  CHECK_FALSE(std::filesystem::exists(dir.path() / "broken_edges.csv"));
}

TEST_CASE("noise attack report files") {
  auto config = load_scenario(scenario_dir() / "paper_k4_noise.json");
  config.steps = 100;
  const auto problem = config.noise_problem();
  const auto outcome = simulate_attack2(problem);
  TempDir dir;
  write_report(config, outcome, dir.path());
  const auto control = slurp(dir.path() / "control.csv");
  CHECK(control.rfind("t,u1,u2,u3,u4\n", 0) == 0);
  CHECK(line_count(control) == 102);
  CHECK(slurp(dir.path() / "trajectory.csv").rfind("t,x1,x2,x3,x4,p1,p2,p3,p4\n", 0) == 0);
  CHECK(slurp(dir.path() / "summary.json").find("\"contraction_factor\"") != std::string::npos);
}

TEST_CASE("unwritable output directories surface the path") {
  TempDir dir;
  spit(dir.path() / "blocker", "x");
  const auto config = paper_k4_scenario();
  const auto outcome = simulate_consensus(config.topology, config.x0, config.grid(), config.kernel);
  CHECK_THROWS(write_report(config, outcome, dir.path() / "blocker" / "sub"));
}
