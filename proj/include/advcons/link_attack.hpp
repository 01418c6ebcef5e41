#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "advcons/dynamics.hpp"
#include "advcons/topology.hpp"

namespace advcons {

/// Everything a link-breaking run needs.
struct LinkAttackProblem {
  NetworkTopology topology;
  State x0;
  TimeGrid grid;
  Kernel kernel = Kernel::constant(1.0);
  std::size_t budget = 0;  // links breakable per instant
};

/// Dissipated power w_ij = a_ij (x_j - x_i)^2 per edge, in edge (slot) order.
struct EdgePowerReport {
  std::vector<double> power;
  /// Edge positions sorted by descending power; ties by lower slot.
  std::vector<std::size_t> ranking;
};

EdgePowerReport edge_power(const State& x, const NetworkTopology& topology);

/// Breaks the `budget` edges with the highest dissipated power.
LinkControl greedy_control(const State& x, const NetworkTopology& topology, std::size_t budget);

enum class AttackClassification { kWinning, kLosing, kOngoing };

std::string_view to_string(AttackClassification c);

struct Attack1Outcome {
  Trajectory trajectory;
  LinkSchedule schedule;  // one control per grid step
  double objective = 0.0;
  AttackClassification classification = AttackClassification::kOngoing;
  bool topology_connected = true;
  std::size_t min_cut = 0;
};

/// Closed-loop greedy attack, control re-evaluated once per grid step.
Attack1Outcome simulate_attack1(const LinkAttackProblem& problem);

/// Classifies a finished run: losing if consensus within 1e-6 of the initial
/// disagreement, winning if a cut within budget keeps the final graph split.
AttackClassification classify_attack(const LinkAttackProblem& problem, const Trajectory& trajectory,
                                     const LinkControl& final_control, std::size_t min_cut);

/// Co-state integrated backward from p(T) = 0 under the same piecewise
/// constant system matrices used for the forward pass.
StateTrace costate_backward(const Trajectory& trajectory, const LinkSchedule& schedule,
                            const NetworkTopology& topology, const Kernel& kernel);

/// Switching functions f_ij = a_ij (p_j - p_i)(x_i - x_j) and the resulting
/// bang-bang control. Edges with f_ij = 0 are left intact.
struct SwitchingReport {
  std::vector<double> f;              // per edge position
  std::vector<std::size_t> order;     // nondecreasing f, ties by slot
  std::vector<std::size_t> candidates;  // f < 0 and f <= (budget+1)-th smallest
  std::vector<std::size_t> selected;    // at most `budget` smallest candidates
  LinkControl control;
};

SwitchingReport switching_functions(const State& x, const State& p, const NetworkTopology& topology,
                                    std::size_t budget, bool flip_sign = false);

struct SweepOptions {
  int max_iterations = 100;
  /// Test hook: negates every f_ij before selection.
  bool flip_switching_sign = false;
};

struct SweepResult {
  Trajectory trajectory;  // includes co-state
  LinkSchedule schedule;
  double objective = 0.0;
  bool converged = false;
  bool cycle_detected = false;
  int iterations = 0;
};

/// Forward state, backward co-state, pointwise control update, repeated until
/// the schedule stops changing. On a cycle or the iteration cap the best
/// schedule seen is returned, flagged unconverged.
SweepResult forward_backward_sweep(const LinkAttackProblem& problem, const SweepOptions& options = {});

struct ConsistencyReport {
  double schedule_agreement = 0.0;  // fraction of steps with equal broken sets
  double ordering_agreement = 0.0;  // top-w set equals the MP selection on the sweep path
  double objective_greedy = 0.0;
  double objective_sweep = 0.0;
  bool sweep_converged = false;
  bool consistent = false;
};

/// Compares the greedy rule against the maximum-principle fixed point.
/// `objective_tolerance` is relative.
ConsistencyReport verify_greedy_mp_consistency(const LinkAttackProblem& problem,
                                               const SweepOptions& options = {},
                                               double objective_tolerance = 1e-4);

struct ScaleInvarianceReport {
  double factor = 1.0;
  bool schedules_identical = false;
  bool switching_signs_match = false;
  std::size_t mismatched_steps = 0;
  std::size_t sign_mismatches = 0;
};

/// Reruns the greedy attack from c * x0. Throws ModelError for c = 0.
ScaleInvarianceReport verify_scale_invariance(const LinkAttackProblem& problem, double factor);

struct EnumerationResult {
  double best_objective = 0.0;
  std::vector<LinkControl> best_controls;  // one per interval
  std::size_t schedules = 0;
};

/// Exhaustive search over piecewise-constant schedules switching only at
/// `intervals` equally spaced instants, each piece breaking at most
/// `budget` edges. Uses the same per-step exponentials and trapezoid weights
/// as the simulation path; ties keep the first schedule in enumeration order.
EnumerationResult enumerate_piecewise_schedules(const LinkAttackProblem& problem, int intervals,
                                                std::size_t budget);

}  // namespace advcons
