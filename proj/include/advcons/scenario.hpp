#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "advcons/dynamics.hpp"
#include "advcons/link_attack.hpp"
#include "advcons/noise_attack.hpp"
#include "advcons/topology.hpp"

namespace advcons {

/// Configuration problem, tagged with the offending field and, when known,
/// the 1-based source line.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, std::string message, int line = 0);

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

struct NoAttack {
  friend bool operator==(const NoAttack&, const NoAttack&) = default;
};

struct LinkAttackSpec {
  std::size_t ell = 0;
  friend bool operator==(const LinkAttackSpec&, const LinkAttackSpec&) = default;
};

struct NoiseAttackSpec {
  double p_max = 1.0;
  std::optional<double> safety;  // defaults to 0.9 when neither is given
  std::optional<double> nu;
  friend bool operator==(const NoiseAttackSpec&, const NoiseAttackSpec&) = default;
};

using AttackSpec = std::variant<NoAttack, LinkAttackSpec, NoiseAttackSpec>;

struct ScenarioConfig {
  std::string name;
  NetworkTopology topology{1, {}};
  /// Set when the topology came from a separate file; kept relative to the
  /// scenario file so it can be written back unchanged.
  std::optional<std::string> topology_file;
  State x0;
  double horizon = 2.0;
  int steps = 400;
  Kernel kernel = Kernel::constant(1.0);
  AttackSpec attack = NoAttack{};
  std::int64_t seed = 0;

  TimeGrid grid() const { return TimeGrid(horizon, steps); }
  LinkAttackProblem link_problem() const;
  NoiseAttackProblem noise_problem() const;

  friend bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);
};

/// Parses and validates a scenario document. Relative topology file
/// references resolve against `base_dir`.
ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Scenario document with every field written out at full precision.
std::string serialize_scenario(const ScenarioConfig& config);

/// Topology document `{ "n": int, "edges": [[i, j, weight], ...] }`, 1-based.
NetworkTopology parse_topology(std::string_view text);
NetworkTopology load_topology(const std::filesystem::path& path);
std::string serialize_topology(const NetworkTopology& topology);

/// Four-node complete graph of the reference example, weights a_12 .. a_34.
NetworkTopology paper_k4_topology();
/// paper_k4: K4, x0 = [1,2,3,4], T = 2, 400 steps, k = 1, ell = 2.
ScenarioConfig paper_k4_scenario();

}  // namespace advcons
