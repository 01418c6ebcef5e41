#include "advcons/link_attack.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <set>
#include <string>

namespace advcons {

EdgePowerReport edge_power(const State& x, const NetworkTopology& topology) {
  EdgePowerReport report;
  report.power.reserve(topology.edge_count());
  for (const auto& e : topology.edges()) {
    const double d = x(e.j) - x(e.i);
    report.power.push_back(e.weight * d * d);
  }
  report.ranking.resize(topology.edge_count());
  std::iota(report.ranking.begin(), report.ranking.end(), std::size_t{0});
  // Edge positions follow slot order, so a stable sort breaks ties by slot.
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return report.power[a] > report.power[b]; });
  return report;
}

LinkControl greedy_control(const State& x, const NetworkTopology& topology, std::size_t budget) {
  if (budget > topology.edge_count()) {
    throw ModelError("budget " + std::to_string(budget) + " exceeds edge count " +
                     std::to_string(topology.edge_count()));
  }
  const auto report = edge_power(x, topology);
  return LinkControl::breaking(topology, std::span(report.ranking).first(budget));
}

std::string_view to_string(AttackClassification c) {
  switch (c) {
    case AttackClassification::kWinning: return "winning";
    case AttackClassification::kLosing: return "losing";
    case AttackClassification::kOngoing: return "ongoing";
  }
  return "ongoing";
}

AttackClassification classify_attack(const LinkAttackProblem& problem, const Trajectory& trajectory,
                                      const LinkControl& final_control, std::size_t min_cut) {
  const double avg = problem.x0.mean();
  const double initial = (problem.x0.array() - avg).abs().maxCoeff();
  const double final_spread = (trajectory.x.back().array() - avg).abs().maxCoeff();
  if (final_spread <= 1e-6 * initial) return AttackClassification::kLosing;
  if (min_cut <= problem.budget &&
      connected_components(problem.topology, final_control).size() > 1) {
    return AttackClassification::kWinning;
  }
  return AttackClassification::kOngoing;
}

Attack1Outcome simulate_attack1(const LinkAttackProblem& problem) {
  const auto& topo = problem.topology;
  if (problem.x0.size() != topo.node_count()) throw ModelError("initial state has the wrong length");
  StepExponentials step(topo, problem.grid.step());
  Attack1Outcome out{Trajectory{problem.grid, {}, {}}, {}, 0.0, AttackClassification::kOngoing,
                     topo.connected(), 0};
  out.trajectory.x.reserve(problem.grid.points());
  out.trajectory.x.push_back(problem.x0);
  out.schedule.reserve(static_cast<std::size_t>(problem.grid.steps()));
  const double avg = problem.x0.mean();
  Eigen::VectorXd dev = (problem.x0.array() - avg).matrix();
  for (int k = 0; k < problem.grid.steps(); ++k) {
    out.schedule.push_back(greedy_control(out.trajectory.x.back(), topo, problem.budget));
    dev = step(out.schedule.back()) * dev;
    out.trajectory.x.push_back((dev.array() + avg).matrix());
  }
  out.objective = objective(out.trajectory, problem.kernel);
  out.min_cut = topo.node_count() >= 2 ? min_cut_size(topo) : 0;
  out.classification = classify_attack(problem, out.trajectory, out.schedule.back(), out.min_cut);
  return out;
}

StateTrace costate_backward(const Trajectory& trajectory, const LinkSchedule& schedule,
                            const NetworkTopology& topology, const Kernel& kernel) {
  const auto& grid = trajectory.grid;
  if (schedule.size() != static_cast<std::size_t>(grid.steps())) {
    throw ModelError("co-state needs one control per grid step");
  }
  if (trajectory.x.size() != grid.points()) throw ModelError("trajectory length does not match its grid");
  const double avg = trajectory.x.front().mean();
  const auto k = kernel.sample(grid);
  const double h = grid.step();
  StepExponentials step(topology, h);
  const auto n = trajectory.x.front().size();
  StateTrace p(grid.points(), Eigen::VectorXd::Zero(n));
  for (std::size_t i = grid.points() - 1; i-- > 0;) {
    const auto& e = step(schedule[i]);
    const Eigen::VectorXd dev_here = (trajectory.x[i].array() - avg).matrix();
    const Eigen::VectorXd dev_next = (trajectory.x[i + 1].array() - avg).matrix();
    p[i] = e * p[i + 1] + h * (k[i] * dev_here + k[i + 1] * (e * dev_next));
  }
  return p;
}

SwitchingReport switching_functions(const State& x, const State& p, const NetworkTopology& topology,
                                    std::size_t budget, bool flip_sign) {
  SwitchingReport r;
  const auto m = topology.edge_count();
  r.f.reserve(m);
  for (const auto& e : topology.edges()) {
    double f = e.weight * (p(e.j) - p(e.i)) * (x(e.i) - x(e.j));
    r.f.push_back(flip_sign ? -f : f);
  }
  r.order.resize(m);
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::stable_sort(r.order.begin(), r.order.end(),
                   [&](std::size_t a, std::size_t b) { return r.f[a] < r.f[b]; });
  const bool has_threshold = budget < m;
  const double threshold = has_threshold ? r.f[r.order[budget]] : 0.0;
  for (auto pos : r.order) {
    if (r.f[pos] < 0.0 && (!has_threshold || r.f[pos] <= threshold)) r.candidates.push_back(pos);
  }
  const auto take = std::min(budget, r.candidates.size());
  r.selected.assign(r.candidates.begin(), r.candidates.begin() + static_cast<std::ptrdiff_t>(take));
  r.control = LinkControl::breaking(topology, r.selected);
  return r;
}

namespace {

std::string schedule_key(const LinkSchedule& schedule) {
  std::string key;
  for (const auto& c : schedule) {
    for (auto b : c.bits()) key.push_back(static_cast<char>('0' + b));
  }
  return key;
}

}  // namespace

SweepResult forward_backward_sweep(const LinkAttackProblem& problem, const SweepOptions& options) {
  const auto& topo = problem.topology;
  const auto steps = static_cast<std::size_t>(problem.grid.steps());
  LinkSchedule schedule(steps, LinkControl::none(topo));
  std::set<std::string> seen;
  SweepResult best;
  best.objective = -1.0;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    Trajectory traj = propagate(problem.x0, schedule, topo, problem.grid);
    traj.p = costate_backward(traj, schedule, topo, problem.kernel);
    const double j = objective(traj, problem.kernel);
    if (j > best.objective) {
      best.trajectory = traj;
      best.schedule = schedule;
      best.objective = j;
    }
    best.iterations = iter;
    seen.insert(schedule_key(schedule));

    LinkSchedule next;
    next.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      next.push_back(switching_functions(traj.x[k], traj.p[k], topo, problem.budget,
                                         options.flip_switching_sign)
                         .control);
    }
    if (next == schedule) {
      SweepResult done{std::move(traj), std::move(schedule), j, true, false, iter};
      return done;
    }
    if (seen.contains(schedule_key(next))) {
      best.cycle_detected = true;
      return best;
    }
    schedule = std::move(next);
  }
  return best;
}

namespace {

// Edges of a and b that differ and carry power above the threshold.
bool sets_agree(const LinkControl& a, const LinkControl& b, const NetworkTopology& topology,
                const EdgePowerReport& power, double threshold) {
  for (std::size_t pos = 0; pos < topology.edge_count(); ++pos) {
    const auto slot = topology.slot_of(pos);
    if (a.broken(slot) != b.broken(slot) && power.power[pos] > threshold) return false;
  }
  return true;
}

}  // namespace

ConsistencyReport verify_greedy_mp_consistency(const LinkAttackProblem& problem,
                                               const SweepOptions& options,
                                               double objective_tolerance) {
  const auto& topo = problem.topology;
  const auto greedy = simulate_attack1(problem);
  const auto sweep = forward_backward_sweep(problem, options);
  const auto steps = static_cast<std::size_t>(problem.grid.steps());

  double max_power = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    for (double w : edge_power(greedy.trajectory.x[k], topo).power) max_power = std::max(max_power, w);
    for (double w : edge_power(sweep.trajectory.x[k], topo).power) max_power = std::max(max_power, w);
  }
  // Edges with negligible power are indifferent for both rules.
  const double threshold = 1e-12 * max_power;

  ConsistencyReport r;
  r.objective_greedy = greedy.objective;
  r.objective_sweep = sweep.objective;
  r.sweep_converged = sweep.converged;
  const double gap = std::abs(greedy.objective - sweep.objective);
  const bool objective_close =
      gap <= objective_tolerance * std::max(std::abs(greedy.objective), 1e-300) || gap == 0.0;

  std::size_t schedule_hits = 0;
  std::size_t ordering_hits = 0;
  bool consistent = true;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto power_g = edge_power(greedy.trajectory.x[k], topo);
    const bool same_schedule = sets_agree(greedy.schedule[k], sweep.schedule[k], topo, power_g, threshold);

    const auto& xs = sweep.trajectory.x[k];
    const auto power_s = edge_power(xs, topo);
    const auto top_w = LinkControl::breaking(topo, std::span(power_s.ranking).first(problem.budget));
    const auto mp = switching_functions(xs, sweep.trajectory.p[k], topo, problem.budget,
                                        options.flip_switching_sign);
    const bool same_order = sets_agree(top_w, mp.control, topo, power_s, threshold);

    schedule_hits += same_schedule ? 1 : 0;
    ordering_hits += same_order ? 1 : 0;
    if (!same_schedule && !(objective_close && same_order)) consistent = false;
  }
  r.schedule_agreement = static_cast<double>(schedule_hits) / static_cast<double>(steps);
  r.ordering_agreement = static_cast<double>(ordering_hits) / static_cast<double>(steps);
  r.consistent = consistent;
  return r;
}

ScaleInvarianceReport verify_scale_invariance(const LinkAttackProblem& problem, double factor) {
  if (factor == 0.0 || !std::isfinite(factor)) {
    throw ModelError("scale factor must be finite and nonzero");
  }
  LinkAttackProblem scaled = problem;
  scaled.x0 = factor * problem.x0;
  const auto base = simulate_attack1(problem);
  const auto other = simulate_attack1(scaled);

  ScaleInvarianceReport r;
  r.factor = factor;
  for (std::size_t k = 0; k < base.schedule.size(); ++k) {
    if (!(base.schedule[k] == other.schedule[k])) ++r.mismatched_steps;
  }
  r.schedules_identical = r.mismatched_steps == 0;

  const auto p_base = costate_backward(base.trajectory, base.schedule, problem.topology, problem.kernel);
  const auto p_other = costate_backward(other.trajectory, other.schedule, problem.topology, problem.kernel);
  std::vector<std::vector<double>> f_base, f_other;
  double max_base = 0.0, max_other = 0.0;
  for (std::size_t k = 0; k < problem.grid.points(); ++k) {
    f_base.push_back(switching_functions(base.trajectory.x[k], p_base[k], problem.topology, problem.budget).f);
    f_other.push_back(switching_functions(other.trajectory.x[k], p_other[k], problem.topology, problem.budget).f);
    for (double f : f_base.back()) max_base = std::max(max_base, std::abs(f));
    for (double f : f_other.back()) max_other = std::max(max_other, std::abs(f));
  }
  auto sign = [](double v, double zero) { return std::abs(v) <= zero ? 0 : (v > 0 ? 1 : -1); };
  for (std::size_t k = 0; k < f_base.size(); ++k) {
    for (std::size_t e = 0; e < f_base[k].size(); ++e) {
      if (sign(f_base[k][e], 1e-12 * max_base) != sign(f_other[k][e], 1e-12 * max_other)) {
        ++r.sign_mismatches;
      }
    }
  }
  r.switching_signs_match = r.sign_mismatches == 0;
  return r;
}

namespace {

struct PieceData {
  Eigen::MatrixXd gram;        // sum_j w_j k_j (E^j)^T E^j over the piece
  Eigen::MatrixXd transition;  // E^sub
};

struct SearchState {
  double best = -1.0;
  std::vector<std::size_t> path;
};

void search(const std::vector<std::vector<PieceData>>& pieces, std::size_t depth,
            const Eigen::VectorXd& dev, double acc, std::vector<std::size_t>& path, SearchState& out) {
  if (depth == pieces.size()) {
    if (acc > out.best) {
      out.best = acc;
      out.path = path;
    }
    return;
  }
  for (std::size_t c = 0; c < pieces[depth].size(); ++c) {
    const auto& piece = pieces[depth][c];
    path.push_back(c);
    search(pieces, depth + 1, piece.transition * dev, acc + dev.dot(piece.gram * dev), path, out);
    path.pop_back();
  }
}

}  // namespace

EnumerationResult enumerate_piecewise_schedules(const LinkAttackProblem& problem, int intervals,
                                                std::size_t budget) {
  const auto& topo = problem.topology;
  if (intervals <= 0 || problem.grid.steps() % intervals != 0) {
    throw ModelError("grid steps must be a multiple of the interval count");
  }
  if (budget > topo.edge_count()) throw ModelError("budget exceeds edge count");

  // All edge subsets of size 0..budget, by size then lexicographically.
  std::vector<LinkControl> controls;
  const auto m = topo.edge_count();
  for (std::size_t size = 0; size <= budget; ++size) {
    std::vector<std::uint8_t> mask(m, 0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(size), 1);
    do {
      std::vector<std::size_t> chosen;
      for (std::size_t e = 0; e < m; ++e) {
        if (mask[e]) chosen.push_back(e);
      }
      controls.push_back(LinkControl::breaking(topo, chosen));
    } while (std::prev_permutation(mask.begin(), mask.end()));
  }

  const double h = problem.grid.step();
  const auto sub = static_cast<std::size_t>(problem.grid.steps() / intervals);
  const auto kernel = problem.kernel.sample(problem.grid);
  StepExponentials step(topo, h);
  const auto n = topo.node_count();

  std::vector<std::vector<PieceData>> pieces(static_cast<std::size_t>(intervals));
  for (std::size_t q = 0; q < pieces.size(); ++q) {
    for (const auto& control : controls) {
      const auto& e = step(control);
      PieceData d{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Identity(n, n)};
      for (std::size_t j = 0; j <= sub; ++j) {
        const double w = trapezoid_weight(j, 0, sub, h) * kernel[q * sub + j];
        d.gram.noalias() += w * d.transition.transpose() * d.transition;
        if (j < sub) d.transition = e * d.transition;
      }
      pieces[q].push_back(std::move(d));
    }
  }

  const Eigen::VectorXd dev0 = (problem.x0.array() - problem.x0.mean()).matrix();
  // Independent subtrees per first-piece choice; reduced in enumeration order.
  std::vector<std::future<SearchState>> futures;
  for (std::size_t c = 0; c < pieces[0].size(); ++c) {
    futures.push_back(std::async(std::launch::async, [&, c] {
      SearchState local;
      std::vector<std::size_t> path{c};
      const auto& piece = pieces[0][c];
      search(pieces, 1, piece.transition * dev0, dev0.dot(piece.gram * dev0), path, local);
      return local;
    }));
  }
  SearchState best;
  for (auto& f : futures) {
    auto local = f.get();
    if (local.best > best.best) best = std::move(local);
  }

  EnumerationResult r;
  r.best_objective = best.best;
  for (auto c : best.path) r.best_controls.push_back(controls[c]);
  r.schedules = 1;
  for (int q = 0; q < intervals; ++q) r.schedules *= controls.size();
  return r;
}

}  // namespace advcons
