#include "advcons/verification.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>

#include "advcons/dynamics.hpp"
#include "advcons/link_attack.hpp"
#include "advcons/noise_attack.hpp"
#include "advcons/scenario.hpp"

namespace advcons {

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int steps_of(const VerifyOptions& o) { return o.steps.value_or(kReferenceSteps); }

State k4_x0() { return Eigen::Vector4d(1.0, 2.0, 3.0, 4.0); }

LinkAttackProblem k4_link(int steps, std::size_t budget = 2) {
  return LinkAttackProblem{paper_k4_topology(), k4_x0(), TimeGrid(2.0, steps), Kernel::constant(1.0), budget};
}

NoiseAttackProblem k4_noise(int steps) {
  return NoiseAttackProblem{paper_k4_topology(), k4_x0(), TimeGrid(2.0, steps), Kernel::constant(1.0),
                            1.0, 0.9, std::nullopt};
}

NetworkTopology two_node() { return NetworkTopology(2, {{0, 1, 1.0}}); }
State two_node_x0() { return Eigen::Vector2d(0.0, 2.0); }

// Uniform double in [lo, hi) from the top 53 bits; portable across
// standard libraries, unlike std::uniform_real_distribution.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Check {
  bool passed;
  std::string detail;
};

// 1
Check edge_powers(const VerifyOptions&) {
  const auto topo = paper_k4_topology();
  const State x0 = k4_x0();
  const auto start = Clock::now();
  const auto report = edge_power(x0, topo);
  const double elapsed = seconds_since(start);
  const double w13 = report.power[1];
  const double w14 = report.power[2];
  const bool values = std::abs(w13 - 2.2101) <= 5e-4 && std::abs(w14 - 13.8979) <= 5e-4;
  const bool fast = elapsed < 1e-3;
  return {values && fast, "w13=" + num(w13) + " w14=" + num(w14) + " in " + num(elapsed * 1e3) + " ms"};
}

// 2
Check stationary_greedy(const VerifyOptions& o) {
  const auto problem = k4_link(steps_of(o));
  const auto start = Clock::now();
  const auto run = simulate_attack1(problem);
  const double elapsed = seconds_since(start);
  const std::size_t expected_positions[] = {1, 2};
  const auto expected = LinkControl::breaking(problem.topology, expected_positions);
  const auto hits = std::count(run.schedule.begin(), run.schedule.end(), expected);
  const bool all = static_cast<std::size_t>(hits) == run.schedule.size();
  return {all && elapsed < 1.0, "{(1,3),(1,4)} broken at " + std::to_string(hits) + "/" +
                                    std::to_string(run.schedule.size()) + " steps in " + num(elapsed) + " s"};
}

// 3
Check greedy_equals_mp(const VerifyOptions& o) {
  const auto problem = k4_link(steps_of(o));
  const auto greedy = simulate_attack1(problem);
  SweepOptions sweep_options;
  sweep_options.flip_switching_sign = o.flip_switching_sign;
  const auto sweep = forward_backward_sweep(problem, sweep_options);
  const bool same = sweep.schedule == greedy.schedule;
  const double rel = std::abs(sweep.objective - greedy.objective) / greedy.objective;
  const bool ok = sweep.converged && sweep.iterations <= 100 && same && rel < 1e-4;
  return {ok, std::string(sweep.converged ? "converged" : "not converged") + " in " +
                  std::to_string(sweep.iterations) + " iterations, schedules " + (same ? "equal" : "differ") +
                  ", |dJ|/J=" + num(rel)};
}

// 4
Check greedy_dominance(const VerifyOptions& o) {
  const auto start = Clock::now();
  const int steps = std::max(4, steps_of(o) / 4 * 4);
  std::mt19937_64 rng(20240611);
  std::size_t cases = 0, violations = 0;
  double worst = 0.0;
  std::string worst_case;
  for (int n : {3, 4}) {
    const EdgeIndex index(n);
    for (std::uint32_t mask = 1; mask < (1u << index.size()); ++mask) {
      std::vector<Edge> edges;
      for (std::size_t s = 0; s < index.size(); ++s) {
        if (mask & (1u << s)) {
          auto [i, j] = index.pair(s);
          edges.push_back({i, j, 1.0});
        }
      }
      if (!NetworkTopology(n, edges).connected()) continue;
      for (int wd = 0; wd < 3; ++wd) {
        for (auto& e : edges) e.weight = uniform(rng, 0.1, 2.0);
        const NetworkTopology topo(n, edges);
        for (int xd = 0; xd < 3; ++xd) {
          State x0(n);
          for (int i = 0; i < n; ++i) x0(i) = uniform(rng, 0.0, 5.0);
          for (std::size_t ell : {1, 2}) {
            if (ell > topo.edge_count()) continue;
            const LinkAttackProblem problem{topo, x0, TimeGrid(2.0, steps), Kernel::constant(1.0), ell};
            const double greedy = simulate_attack1(problem).objective;
            const double best = enumerate_piecewise_schedules(problem, 4, ell).best_objective;
            ++cases;
            const double excess = best / greedy - 1.0;
            if (best > greedy * (1.0 + 1e-3)) ++violations;
            if (excess > worst) {
              worst = excess;
              worst_case = "n=" + std::to_string(n) + " mask=" + std::to_string(mask) +
                           " ell=" + std::to_string(ell) + " J_enum=" + num(best) + " J_greedy=" + num(greedy);
            }
          }
        }
      }
    }
  }
  const double elapsed = seconds_since(start);
  std::string detail = std::to_string(violations) + "/" + std::to_string(cases) +
                       " cases exceed J_greedy(1+1e-3); worst excess " + num(worst);
  if (!worst_case.empty()) detail += " (" + worst_case + ")";
  detail += " in " + num(elapsed) + " s";
  return {violations == 0 && elapsed < 120.0, detail};
}

// 5
Check scale_invariance(const VerifyOptions& o) {
  const auto problem = k4_link(steps_of(o));
  const auto start = Clock::now();
  bool ok = true;
  std::string detail;
  for (double c : {-3.0, 0.5, 10.0}) {
    const auto r = verify_scale_invariance(problem, c);
    ok = ok && r.schedules_identical && r.switching_signs_match;
    detail += "c=" + num(c) + ": " + std::to_string(r.mismatched_steps) + " schedule / " +
              std::to_string(r.sign_mismatches) + " sign mismatches; ";
  }
  const double elapsed = seconds_since(start);
  return {ok && elapsed < 5.0, detail + num(elapsed) + " s"};
}

// 6
Check conservation(const VerifyOptions& o) {
  const int steps = steps_of(o);
  std::vector<LinkAttackProblem> runs;
  for (std::size_t ell = 0; ell <= 3; ++ell) runs.push_back(k4_link(steps, ell));
  for (double c : {-3.0, 0.5, 10.0}) {
    auto p = k4_link(steps);
    p.x0 *= c;
    runs.push_back(p);
  }
  for (std::size_t ell : {0, 1}) {
    runs.push_back({two_node(), two_node_x0(), TimeGrid(2.0, steps), Kernel::constant(1.0), ell});
  }
  runs.push_back({NetworkTopology(4, {{0, 1, 1.0}, {1, 2, 0.5}, {2, 3, 2.0}}), Eigen::Vector4d(5.0, -1.0, 0.5, 3.0),
                  TimeGrid(2.0, steps), Kernel::constant(1.0), 1});

  double worst_sum = 0.0, worst_stochastic = 0.0;
  for (const auto& problem : runs) {
    const auto run = simulate_attack1(problem);
    const double total0 = problem.x0.sum();
    for (std::size_t k = 0; k < run.trajectory.x.size(); ++k) {
      const double t = problem.grid.at(k);
      const double drift = std::abs(run.trajectory.x[k].sum() - total0);
      worst_sum = std::max(worst_sum, drift / (std::abs(total0) * (1.0 + t)));
    }
    std::vector<LinkControl> seen;
    for (const auto& control : run.schedule) {
      if (std::find(seen.begin(), seen.end(), control) != seen.end()) continue;
      seen.push_back(control);
      const auto e = matrix_exponential(build_system_matrix(problem.topology, control), problem.grid.step());
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(e.rows());
      worst_stochastic = std::max({worst_stochastic, (e * ones - ones).cwiseAbs().maxCoeff(),
                                   (e.transpose() * ones - ones).cwiseAbs().maxCoeff(),
                                   std::max(0.0, -e.minCoeff())});
    }
  }
  return {worst_sum < 1e-8 && worst_stochastic <= 1e-10,
          std::to_string(runs.size()) + " runs; max relative sum drift " + num(worst_sum) +
              ", max stochasticity defect " + num(worst_stochastic)};
}

// 7
Check baseline_bound(const VerifyOptions& o) {
  const int steps = steps_of(o);
  const double factor = grid_tolerance_factor(steps);
  const double bound = 8.0 / 3.0;
  auto problem = k4_noise(steps);
  const auto spread = baseline_constant_control(problem);
  problem.x0 = State::Constant(4, 2.5);
  const auto consensus = baseline_constant_control(problem);

  const bool dominates = spread.simulated >= bound && spread.closed_form >= bound;
  const double consensus_error = std::abs(consensus.closed_form - bound) / bound;
  const bool exact = consensus_error <= 1e-6 * factor;
  const double route_gap = std::max(std::abs(spread.closed_form_trapezoid - spread.simulated) / spread.simulated,
                                    std::abs(consensus.closed_form_trapezoid - consensus.simulated) /
                                        consensus.simulated);
  const bool routes = route_gap <= 1e-9;
  return {dominates && exact && routes, "J2(x0)=" + num(spread.simulated) + " >= 8/3: " +
                                            (dominates ? "yes" : "no") + "; consensus J2 rel error " +
                                            num(consensus_error) + "; route gap " + num(route_gap)};
}

// 8
Check contraction(const VerifyOptions& o) {
  const auto problem = k4_noise(steps_of(o));
  const auto run = simulate_attack2(problem);
  double worst_ratio = 0.0;
  for (std::size_t k = 1; k < run.residuals.size(); ++k) {
    worst_ratio = std::max(worst_ratio, run.residuals[k] / run.residuals[k - 1]);
  }
  const auto a = build_system_matrix(problem.topology, LinkControl::none(problem.topology));
  const CostateMap map(a, problem.x0, problem.kernel, run.setup, problem.grid);
  const auto& p = run.trajectory.p;
  const double fixed = sup_distance(map.apply(p), p) / sup_norm(p);
  const bool ok = run.converged && worst_ratio <= 0.95 && fixed < 1e-7;
  return {ok, std::to_string(run.iterations) + " iterations, max residual ratio " + num(worst_ratio) + " (q=" +
                  num(run.setup.contraction_factor) + "), |T(p*)-p*|/|p*|=" + num(fixed)};
}

// 9
Check noise_optimality(const VerifyOptions& o) {
  const int steps = steps_of(o);
  const double slack = 1e-6 * grid_tolerance_factor(steps);
  std::vector<std::pair<std::string, NoiseAttackProblem>> cases{
      {"paper_k4", k4_noise(steps)},
      {"two_node", NoiseAttackProblem{two_node(), two_node_x0(), TimeGrid(2.0, steps), Kernel::constant(1.0), 1.0,
                                      0.9, std::nullopt}}};
  bool ok = true;
  std::string detail;
  for (const auto& [name, problem] : cases) {
    const auto run = simulate_attack2(problem);
    const auto& p = run.trajectory.p;
    const auto& u = run.control.u;
    double largest = 0.0;
    for (const auto& v : p) largest = std::max(largest, v.norm());
    const double guard = kSingularGuard * largest;
    double power_err = 0.0, cosine_err = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      if (run.control.singular[k]) continue;
      power_err = std::max(power_err, std::abs(u[k].squaredNorm() - problem.power_budget));
      if (p[k].norm() > guard) {
        cosine_err = std::max(cosine_err, std::abs(1.0 - u[k].dot(p[k]) / (u[k].norm() * p[k].norm())));
      }
    }
    const double j0 = no_attack_objective(problem);
    const double j2 = baseline_constant_control(problem).simulated;
    const bool dominance = run.objective >= std::max(j0, j2) - slack;
    const bool case_ok = power_err <= 1e-12 && cosine_err <= 1e-10 && run.lagrange.max_multiplier <= 1e-12 &&
                         dominance && run.converged;
    ok = ok && case_ok;
    detail += name + ": |u|^2 err " + num(power_err) + ", cos err " + num(cosine_err) + ", max lambda " +
              num(run.lagrange.max_multiplier) + ", J*=" + num(run.objective) + " J0=" + num(j0) + " J2=" +
              num(j2) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// 10a
Check two_node_objective(const VerifyOptions& o) {
  const int steps = steps_of(o);
  const double horizon = 2.0;
  const auto run = simulate_consensus(two_node(), two_node_x0(), TimeGrid(horizon, steps), Kernel::constant(1.0));
  const double exact = (1.0 - std::exp(-4.0 * horizon)) / 2.0;
  const double err = std::abs(run.objective - exact);
  const double tol = 1e-8 * grid_tolerance_factor(steps);
  return {err <= tol, "J=" + format_double(run.objective) + " vs " + format_double(exact) + ", error " + num(err) +
                          " (tolerance " + num(tol) + ")"};
}

// 10b
Check two_node_exponential(const VerifyOptions&) {
  const auto a = build_system_matrix(two_node(), LinkControl::none(two_node()));
  double worst = 0.0;
  for (double t : {0.0, 0.005, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
    const double d = std::exp(-2.0 * t);
    Eigen::Matrix2d expected;
    expected << (1 + d) / 2, (1 - d) / 2, (1 - d) / 2, (1 + d) / 2;
    worst = std::max(worst, (matrix_exponential(a, t) - expected).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, "max entry error " + num(worst)};
}

// 11
Check grid_order(const VerifyOptions& o) {
  const int steps = steps_of(o);
  const double j1 = simulate_attack1(k4_link(steps)).objective;
  const double j2 = simulate_attack1(k4_link(2 * steps)).objective;
  const double j4 = simulate_attack1(k4_link(4 * steps)).objective;
  const double ratio = (j1 - j2) / (j2 - j4);
  return {ratio >= 3.0 && ratio <= 5.0, "J(h)=" + format_double(j1) + " J(h/2)=" + format_double(j2) +
                                            " J(h/4)=" + format_double(j4) + ", delta ratio " + num(ratio)};
}

struct Property {
  const char* id;
  const char* name;
  Check (*run)(const VerifyOptions&);
};

constexpr Property kProperties[] = {
    {"1", "edge powers on paper_k4", edge_powers},
    {"2", "stationary greedy control", stationary_greedy},
    {"3", "greedy-MP consistency", greedy_equals_mp},
    {"4", "greedy dominance over enumerated schedules", greedy_dominance},
    {"5", "scale invariance", scale_invariance},
    {"6", "conservation and stochasticity", conservation},
    {"7", "constant baseline bound", baseline_bound},
    {"8", "co-state contraction", contraction},
    {"9", "noise attack optimality", noise_optimality},
    {"10a", "two-node objective", two_node_objective},
    {"10b", "two-node matrix exponential", two_node_exponential},
    {"11", "second-order grid convergence", grid_order},
};

}  // namespace

double grid_tolerance_factor(int steps) {
  if (steps <= 0) throw std::invalid_argument("steps must be positive");
  const double r = static_cast<double>(kReferenceSteps) / steps;
  return std::max(1.0, r * r);
}

std::vector<std::string> property_ids() {
  std::vector<std::string> ids;
  for (const auto& p : kProperties) ids.emplace_back(p.id);
  return ids;
}

PropertyResult run_property(std::string_view id, const VerifyOptions& options) {
  if (options.steps && *options.steps <= 0) throw std::invalid_argument("steps must be positive");
  for (const auto& p : kProperties) {
    if (id != p.id) continue;
    PropertyResult r;
    r.id = p.id;
    r.name = p.name;
    const auto start = Clock::now();
    try {
      const auto check = p.run(options);
      r.passed = check.passed;
      r.detail = check.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = seconds_since(start);
    return r;
  }
  throw std::invalid_argument("unknown property '" + std::string(id) + "'");
}

std::vector<PropertyResult> run_verification_suite(const VerifyOptions& options) {
  std::vector<PropertyResult> results;
  for (const auto& id : property_ids()) results.push_back(run_property(id, options));
  return results;
}

std::string format_result(const PropertyResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + " [" + r.id + "] " + r.name + ": " + r.detail + " (" +
         num(r.seconds) + " s)";
}

}  // namespace advcons
