#include "advcons/report.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <json.hpp>

namespace advcons {

using nlohmann::json;

namespace {

json scenario_header(const ScenarioConfig& c) {
  return json{{"name", c.name},
              {"n", c.topology.node_count()},
              {"edges", c.topology.edge_count()},
              {"T", c.horizon},
              {"steps", c.steps},
              {"seed", c.seed}};
}

json state_json(const State& x) { return std::vector<double>(x.data(), x.data() + x.size()); }

double spread(const State& x) { return average_and_disagreement(x).disagreement.lpNorm<Eigen::Infinity>(); }

// Runs of identical controls as {t_start, t_end, broken: [[i, j], ...]}.
json broken_segments(const Attack1Outcome& outcome, const NetworkTopology& topology) {
  json segments = json::array();
  const auto& grid = outcome.trajectory.grid;
  std::size_t start = 0;
  for (std::size_t k = 1; k <= outcome.schedule.size(); ++k) {
    if (k < outcome.schedule.size() && outcome.schedule[k] == outcome.schedule[start]) continue;
    json broken = json::array();
    for (auto [i, j] : outcome.schedule[start].broken_pairs(topology.index())) {
      broken.push_back(json::array({i + 1, j + 1}));
    }
    segments.push_back(json{{"t_start", grid.at(start)}, {"t_end", grid.at(k)}, {"broken", broken}});
    start = k;
  }
  return segments;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

template <typename Writer>
void write_stream(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  writer(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path prepare(const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  return directory;
}

}  // namespace

std::string summary_json(const ScenarioConfig& config, const ConsensusOutcome& outcome) {
  json doc{{"scenario", scenario_header(config)},
           {"attack", "none"},
           {"objective", outcome.objective},
           {"final_spread", outcome.final_spread},
           {"final_state", state_json(outcome.trajectory.x.back())},
           {"average", config.x0.mean()},
           {"topology_connected", config.topology.connected()}};
  return doc.dump(2) + "\n";
}

std::string summary_json(const ScenarioConfig& config, const Attack1Outcome& outcome,
                         const ConsistencyReport* consistency) {
  const auto ell = std::holds_alternative<LinkAttackSpec>(config.attack)
                       ? std::get<LinkAttackSpec>(config.attack).ell
                       : std::size_t{0};
  json doc{{"scenario", scenario_header(config)},
           {"attack", "link"},
           {"ell", ell},
           {"objective", outcome.objective},
           {"classification", std::string(to_string(outcome.classification))},
           {"min_cut", outcome.min_cut},
           {"topology_connected", outcome.topology_connected},
           {"final_spread", spread(outcome.trajectory.x.back())},
           {"final_state", state_json(outcome.trajectory.x.back())},
           {"broken_segments", broken_segments(outcome, config.topology)}};
  if (consistency) {
    doc["consistency"] = json{{"schedule_agreement", consistency->schedule_agreement},
                              {"ordering_agreement", consistency->ordering_agreement},
                              {"objective_greedy", consistency->objective_greedy},
                              {"objective_sweep", consistency->objective_sweep},
                              {"sweep_converged", consistency->sweep_converged},
                              {"consistent", consistency->consistent}};
  }
  return doc.dump(2) + "\n";
}

std::string summary_json(const ScenarioConfig& config, const Attack2Outcome& outcome,
                         const BaselineReport* baseline) {
  const auto singular = std::count(outcome.control.singular.begin(), outcome.control.singular.end(), true);
  json doc{{"scenario", scenario_header(config)},
           {"attack", "noise"},
           {"p_max", outcome.setup.power_budget},
           {"nu", outcome.setup.scaling},
           {"nu_max", outcome.setup.scaling_limit},
           {"contraction_factor", outcome.setup.contraction_factor},
           {"objective", outcome.objective},
           {"scaled_objective", outcome.scaled_objective},
           {"iterations", outcome.iterations},
           {"converged", outcome.converged},
           {"final_residual", outcome.residuals.empty() ? 0.0 : outcome.residuals.back()},
           {"singular_samples", singular},
           {"max_multiplier", outcome.lagrange.max_multiplier},
           {"max_slackness", outcome.lagrange.max_slackness},
           {"final_spread", spread(outcome.trajectory.x.back())},
           {"final_state", state_json(outcome.trajectory.x.back())}};
  if (baseline) {
    doc["baseline"] = json{{"closed_form", baseline->closed_form},
                           {"closed_form_trapezoid", baseline->closed_form_trapezoid},
                           {"simulated", baseline->simulated},
                           {"bound", baseline->bound}};
  }
  return doc.dump(2) + "\n";
}

void write_broken_edges_csv(std::ostream& out, const Attack1Outcome& outcome, const NetworkTopology& topology) {
  out << "t,edge_i,edge_j\n";
  for (std::size_t k = 0; k < outcome.schedule.size(); ++k) {
    const auto t = format_double(outcome.trajectory.grid.at(k));
    for (auto [i, j] : outcome.schedule[k].broken_pairs(topology.index())) {
      out << t << ',' << i + 1 << ',' << j + 1 << '\n';
    }
  }
}

void write_control_csv(std::ostream& out, const TimeGrid& grid, const StateTrace& u) {
  const auto n = u.empty() ? 0 : u.front().size();
  out << 't';
  for (Eigen::Index i = 1; i <= n; ++i) out << ",u" << i;
  out << '\n';
  for (std::size_t k = 0; k < u.size(); ++k) {
    out << format_double(grid.at(k));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(u[k](i));
    out << '\n';
  }
}

FileSet write_report(const ScenarioConfig& config, const ConsensusOutcome& outcome,
                     const std::filesystem::path& directory) {
  const auto dir = prepare(directory);
  FileSet files{dir / "trajectory.csv", dir / "summary.json"};
  write_stream(files[0], [&](std::ostream& o) { write_trajectory_csv(o, outcome.trajectory); });
  write_text(files[1], summary_json(config, outcome));
  return files;
}

FileSet write_report(const ScenarioConfig& config, const Attack1Outcome& outcome,
                     const std::filesystem::path& directory, const ConsistencyReport* consistency) {
  const auto dir = prepare(directory);
  FileSet files{dir / "trajectory.csv", dir / "broken_edges.csv", dir / "summary.json"};
  write_stream(files[0], [&](std::ostream& o) { write_trajectory_csv(o, outcome.trajectory); });
  write_stream(files[1], [&](std::ostream& o) { write_broken_edges_csv(o, outcome, config.topology); });
  write_text(files[2], summary_json(config, outcome, consistency));
  return files;
}

FileSet write_report(const ScenarioConfig& config, const Attack2Outcome& outcome,
                     const std::filesystem::path& directory, const BaselineReport* baseline) {
  const auto dir = prepare(directory);
  FileSet files{dir / "trajectory.csv", dir / "control.csv", dir / "summary.json"};
  write_stream(files[0], [&](std::ostream& o) { write_trajectory_csv(o, outcome.trajectory); });
  write_stream(files[1], [&](std::ostream& o) { write_control_csv(o, outcome.trajectory.grid, outcome.control.u); });
  write_text(files[2], summary_json(config, outcome, baseline));
  return files;
}

}  // namespace advcons
