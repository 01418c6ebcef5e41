#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "advcons/dynamics.hpp"
#include "advcons/link_attack.hpp"
#include "advcons/noise_attack.hpp"
#include "advcons/scenario.hpp"

namespace advcons {

using FileSet = std::vector<std::filesystem::path>;

/// Summary documents. Keys are sorted and numbers printed round-trip exact,
/// so identical runs give byte-identical text.
std::string summary_json(const ScenarioConfig& config, const ConsensusOutcome& outcome);
std::string summary_json(const ScenarioConfig& config, const Attack1Outcome& outcome,
                         const ConsistencyReport* consistency = nullptr);
std::string summary_json(const ScenarioConfig& config, const Attack2Outcome& outcome,
                         const BaselineReport* baseline = nullptr);

/// trajectory.csv and summary.json.
FileSet write_report(const ScenarioConfig& config, const ConsensusOutcome& outcome,
                     const std::filesystem::path& directory);
/// trajectory.csv, broken_edges.csv (t,edge_i,edge_j, 1-based) and summary.json.
FileSet write_report(const ScenarioConfig& config, const Attack1Outcome& outcome,
                     const std::filesystem::path& directory, const ConsistencyReport* consistency = nullptr);
/// trajectory.csv (with co-state), control.csv (t,u1..un) and summary.json.
FileSet write_report(const ScenarioConfig& config, const Attack2Outcome& outcome,
                     const std::filesystem::path& directory, const BaselineReport* baseline = nullptr);

void write_broken_edges_csv(std::ostream& out, const Attack1Outcome& outcome, const NetworkTopology& topology);
void write_control_csv(std::ostream& out, const TimeGrid& grid, const StateTrace& u);

}  // namespace advcons
