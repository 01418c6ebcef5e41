#include <doctest.h>

#include <cmath>

#include "advcons/noise_attack.hpp"
#include "advcons/scenario.hpp"

using namespace advcons;

namespace {

NoiseAttackProblem example(int steps = 400) {
  return {paper_k4_topology(), Eigen::Vector4d(1, 2, 3, 4), TimeGrid(2.0, steps), Kernel::constant(1.0), 1.0, 0.9,
          std::nullopt};
}

NoiseAttackProblem two_node(int steps = 400) {
  return {NetworkTopology(2, {{0, 1, 1.0}}), Eigen::Vector2d(0, 2), TimeGrid(2.0, steps), Kernel::constant(1.0),
          1.0, 0.9, std::nullopt};
}

SystemMatrix intact(const NetworkTopology& topo) { return build_system_matrix(topo, LinkControl::none(topo)); }

// p_i = sum_j w_ij 2 nu k_j exp(A (t_j - t_i)) (x_j - xbar), trapezoid on
// [t_i, T], by direct double summation.
StateTrace costate_by_summation(const SystemMatrix& a, const Trajectory& traj, double scaling) {
  const auto& grid = traj.grid;
  const double h = grid.step();
  const double avg = traj.x.front().mean();
  const auto last = grid.points() - 1;
  StateTrace p(grid.points(), Eigen::VectorXd::Zero(a.size()));
  const Eigen::MatrixXd e = matrix_exponential(a, h);
  std::vector<Eigen::MatrixXd> powers{Eigen::MatrixXd::Identity(a.size(), a.size())};
  for (std::size_t k = 1; k <= last; ++k) powers.push_back(e * powers.back());
  for (std::size_t i = 0; i < last; ++i) {
    for (std::size_t j = i; j <= last; ++j) {
      const double w = (j == i || j == last) ? 0.5 * h : h;
      p[i] += w * 2.0 * scaling * (powers[j - i] * (traj.x[j].array() - avg).matrix());
    }
  }
  return p;
}

}  // namespace

TEST_CASE("contraction setup for k = 1 on [0, 2]") {
  const auto s = contraction_setup(Kernel::constant(1.0).constants(TimeGrid(2.0, 400)), 1.0, 0.9);
  CHECK(s.scaling_limit == doctest::Approx(1.0 / 8.0).epsilon(1e-9));
  CHECK(s.scaling == doctest::Approx(0.9 / 8.0).epsilon(1e-9));
  CHECK(s.contraction_factor == doctest::Approx(0.9).epsilon(1e-9));

  const auto p4 = contraction_setup(Kernel::constant(1.0).constants(TimeGrid(2.0, 400)), 4.0, 0.5);
  CHECK(p4.scaling_limit == doctest::Approx(1.0 / 16.0).epsilon(1e-9));
  CHECK(p4.contraction_factor == doctest::Approx(0.5).epsilon(1e-9));

  const auto constants = Kernel::constant(1.0).constants(TimeGrid(2.0, 400));
  CHECK_THROWS_AS(contraction_setup(constants, 1.0, 1.0), ModelError);
  CHECK_THROWS_AS(contraction_setup(constants, 0.0, 0.9), ModelError);
  CHECK_THROWS_AS(contraction_setup_with_scaling(constants, 1.0, 0.2), ModelError);
  CHECK(contraction_setup_with_scaling(constants, 1.0, 0.1).scaling == 0.1);
}

TEST_CASE("forcing term matches the analytic two-node value") {
  const auto problem = two_node(2000);
  const double nu = 0.1;
  const auto g = g_term(intact(problem.topology), problem.x0, problem.kernel, nu, problem.grid);
  double worst = 0.0;
  for (std::size_t k = 0; k < problem.grid.points(); ++k) {
    const double t = problem.grid.at(k);
    const double s = 0.5 * nu * (std::exp(-2.0 * t) - std::exp(2.0 * t - 8.0));
    worst = std::max(worst, std::abs(g[k](0) + s) + std::abs(g[k](1) - s));
  }
  CHECK(worst < 1e-6);
  CHECK(g.back().isZero(0.0));
}

TEST_CASE("forcing term vanishes at consensus") {
  const auto problem = example();
  const auto g = g_term(intact(problem.topology), Eigen::Vector4d::Constant(2.5), problem.kernel, 0.1, problem.grid);
  CHECK(sup_norm(g) < 1e-15);
}

TEST_CASE("unit directions with the singular guard") {
  StateTrace p{Eigen::Vector2d(5, 0), Eigen::Vector2d(0, 1e-20), Eigen::Vector2d(0, -3), Eigen::Vector2d(0, 0)};
  const auto d = unit_directions(p, 1e-10);
  CHECK(d[0].isApprox(Eigen::Vector2d(1, 0)));
  CHECK(d[1].isZero(0.0));
  CHECK(d[2].isApprox(Eigen::Vector2d(0, -1)));
  CHECK(d[3].isApprox(Eigen::Vector2d(0, -1)));
}

TEST_CASE("optimal noise normalizes to full power") {
  StateTrace p{Eigen::Vector3d(5, 0, 0), Eigen::Vector3d(1, 2, 2), Eigen::Vector3d::Zero()};
  const auto c = optimal_noise(p, 4.0);
  CHECK(c.u[0].isApprox(Eigen::Vector3d(2, 0, 0)));
  CHECK(c.u[1].squaredNorm() == doctest::Approx(4.0));
  CHECK_FALSE(c.singular[0]);
  CHECK_FALSE(c.singular[2]);  // terminal sample follows the last direction
}

TEST_CASE("fixed point on the example") {
  const auto problem = example();
  const auto run = simulate_attack2(problem);
  CHECK(run.converged);
  CHECK(run.trajectory.p.back().isZero(0.0));
  for (std::size_t k = 1; k < run.residuals.size(); ++k) {
    CHECK(run.residuals[k] <= (run.setup.contraction_factor + 0.05) * run.residuals[k - 1]);
  }
  CHECK(run.lagrange.sign_ok);
  CHECK(run.lagrange.slackness_ok);
  CHECK(run.objective > no_attack_objective(problem));
  CHECK(run.objective >= baseline_constant_control(problem).simulated - 1e-6);
  CHECK(run.scaled_objective == doctest::Approx(run.setup.scaling * run.objective));
}

TEST_CASE("converged co-state agrees with direct summation along its own trajectory") {
  for (const auto& problem : {example(200), two_node(200)}) {
    const auto run = simulate_attack2(problem);
    const auto a = intact(problem.topology);
    const auto oracle = costate_by_summation(a, run.trajectory, run.setup.scaling);
    CHECK(sup_distance(oracle, run.trajectory.p) <= 1e-7 * sup_norm(run.trajectory.p));
  }
}

TEST_CASE("baseline start does at least as well as the forcing start") {
  const auto problem = example();
  const auto baseline = simulate_attack2(problem);
  FixedPointOptions forcing;
  forcing.start = CostateStart::kForcing;
  const auto from_g = simulate_attack2(problem, forcing);
  REQUIRE(baseline.converged);
  CHECK(baseline.objective >= from_g.objective - 1e-9);
}

TEST_CASE("consensus start with the forcing start stays at zero") {
  auto problem = example();
  problem.x0 = Eigen::Vector4d::Constant(2.5);
  const auto setup = contraction_setup(problem);
  const CostateMap map(intact(problem.topology), problem.x0, problem.kernel, setup, problem.grid);
  FixedPointOptions forcing;
  forcing.start = CostateStart::kForcing;
  const auto r = costate_fixed_point(map, forcing);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(sup_norm(r.costate) == 0.0);
}

TEST_CASE("consensus start with the baseline start attains the full-power bound") {
  auto problem = example();
  problem.x0 = Eigen::Vector4d::Constant(2.5);
  const auto run = simulate_attack2(problem);
  const auto baseline = baseline_constant_control(problem);
  CHECK(run.converged);
  CHECK(run.objective >= baseline.simulated - 1e-9);
  CHECK(baseline.closed_form == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("baseline routes agree and respect the bound") {
  const auto r = baseline_constant_control(example());
  CHECK(std::abs(r.closed_form_trapezoid - r.simulated) <= 1e-9 * r.simulated);
  CHECK(r.simulated >= 8.0 / 3.0);
  CHECK(r.bound == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
  // Sum grows as 1^T x0 + n sqrt(P/n) t.
  const auto& x = r.trajectory.x;
  for (std::size_t k = 0; k < x.size(); k += 50) {
    const double t = r.trajectory.grid.at(k);
    CHECK(x[k].sum() == doctest::Approx(10.0 + 4.0 * 0.5 * t).epsilon(1e-12));
  }
}

TEST_CASE("lagrange multiplier signs") {
  StateTrace p{Eigen::Vector2d(3, 4)};
  StateTrace aligned{Eigen::Vector2d(0.6, 0.8)};
  const auto good = lagrange_multiplier(aligned, p, 1.0);
  CHECK(good.multiplier[0] == doctest::Approx(-2.5));
  CHECK(good.sign_ok);
  CHECK(good.slackness_ok);
  StateTrace anti{Eigen::Vector2d(-0.6, -0.8)};
  CHECK_FALSE(lagrange_multiplier(anti, p, 1.0).sign_ok);
  StateTrace zero{Eigen::Vector2d::Zero()};
  const auto singular = lagrange_multiplier(zero, StateTrace{Eigen::Vector2d::Zero()}, 1.0);
  CHECK(singular.multiplier[0] == 0.0);
  CHECK(singular.slackness_ok);
}

TEST_CASE("noise propagation without control matches the unattacked objective") {
  const auto problem = example();
  const auto run = simulate_consensus(problem.topology, problem.x0, problem.grid, problem.kernel);
  CHECK(no_attack_objective(problem) == doctest::Approx(run.objective).epsilon(1e-13));
}

TEST_CASE("halving the step changes p*(0) at second order") {
  std::vector<double> p0;
  for (int steps : {200, 400, 800}) p0.push_back(simulate_attack2(example(steps)).trajectory.p.front().norm());
  const double ratio = (p0[0] - p0[1]) / (p0[1] - p0[2]);
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);
}
