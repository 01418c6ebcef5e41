#include "advcons/noise_attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace advcons {

namespace {

ContractionSetup make_setup(const KernelConstants& kernel, double power_budget) {
  if (!(power_budget > 0.0) || !std::isfinite(power_budget)) {
    throw ModelError("power budget must be positive");
  }
  const double spread = kernel.sup_weighted + kernel.sup_tail_moment;
  if (!(spread > 0.0)) throw ModelError("kernel constants must be positive");
  ContractionSetup s;
  s.power_budget = power_budget;
  s.kernel_sup_weighted = kernel.sup_weighted;
  s.kernel_sup_tail = kernel.sup_tail_moment;
  s.scaling_limit = 1.0 / (2.0 * std::sqrt(power_budget) * spread);
  return s;
}

void finish_setup(ContractionSetup& s, double scaling) {
  s.scaling = scaling;
  s.contraction_factor =
      2.0 * scaling * std::sqrt(s.power_budget) * (s.kernel_sup_weighted + s.kernel_sup_tail);
}

}  // namespace

ContractionSetup contraction_setup(const KernelConstants& kernel, double power_budget, double safety) {
  if (!(safety > 0.0 && safety < 1.0)) throw ModelError("safety must lie in (0, 1)");
  auto s = make_setup(kernel, power_budget);
  finish_setup(s, safety * s.scaling_limit);
  return s;
}

ContractionSetup contraction_setup_with_scaling(const KernelConstants& kernel, double power_budget,
                                                double scaling) {
  auto s = make_setup(kernel, power_budget);
  if (!(scaling > 0.0 && scaling < s.scaling_limit)) {
    throw ModelError("nu = " + format_double(scaling) + " must lie in (0, " +
                     format_double(s.scaling_limit) + ")");
  }
  finish_setup(s, scaling);
  return s;
}

ContractionSetup contraction_setup(const NoiseAttackProblem& problem) {
  const auto constants = problem.kernel.constants(problem.grid);
  if (problem.scaling) return contraction_setup_with_scaling(constants, problem.power_budget, *problem.scaling);
  return contraction_setup(constants, problem.power_budget, problem.safety);
}

CostateMap::CostateMap(const SystemMatrix& a, const State& x0, const Kernel& kernel,
                       const ContractionSetup& setup, const TimeGrid& grid)
    : grid_(grid), kernel_(kernel.sample(grid)), setup_(setup) {
  if (x0.size() != a.size()) throw ModelError("initial state has the wrong length");
  SymmetricExponential exp_a(a.matrix());
  vectors_ = exp_a.eigenvectors();
  step_decay_ = (exp_a.eigenvalues() * grid.step()).array().exp();

  const Eigen::VectorXd dev0 = vectors_.transpose() * (x0.array() - x0.mean()).matrix();
  StateTrace forcing(grid.points());
  Eigen::VectorXd decayed = dev0;
  for (std::size_t j = 0; j < grid.points(); ++j) {
    forcing[j] = kernel_[j] * decayed;
    decayed = step_decay_.cwiseProduct(decayed);
  }
  g_modal_ = accumulate_backward(forcing);
  for (auto& v : g_modal_) v *= 2.0 * setup_.scaling;
  g_ = from_modal(g_modal_);
}

StateTrace CostateMap::accumulate_forward(const StateTrace& f) const {
  // z_j = sum_{l <= j} w_jl D^{j-l} f_l, trapezoid on [0, t_j].
  const double h = grid_.step();
  StateTrace z(f.size(), Eigen::VectorXd::Zero(step_decay_.size()));
  for (std::size_t j = 1; j < f.size(); ++j) {
    z[j] = step_decay_.cwiseProduct(z[j - 1]) + 0.5 * h * (step_decay_.cwiseProduct(f[j - 1]) + f[j]);
  }
  return z;
}

StateTrace CostateMap::accumulate_backward(const StateTrace& f) const {
  // y_i = sum_{j >= i} w_ij D^{j-i} f_j, trapezoid on [t_i, T].
  const double h = grid_.step();
  StateTrace y(f.size(), Eigen::VectorXd::Zero(step_decay_.size()));
  for (std::size_t i = f.size() - 1; i-- > 0;) {
    y[i] = step_decay_.cwiseProduct(y[i + 1]) + 0.5 * h * (f[i] + step_decay_.cwiseProduct(f[i + 1]));
  }
  return y;
}

StateTrace CostateMap::to_modal(const StateTrace& v) const {
  StateTrace out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(vectors_.transpose() * s);
  return out;
}

StateTrace CostateMap::from_modal(const StateTrace& v) const {
  StateTrace out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(vectors_ * s);
  return out;
}

StateTrace CostateMap::costate_for_control(const StateTrace& u) const {
  if (u.size() != grid_.points()) throw ModelError("control trace does not match the grid");
  auto z = accumulate_forward(to_modal(u));
  for (std::size_t j = 0; j < z.size(); ++j) z[j] *= kernel_[j];
  auto y = accumulate_backward(z);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = g_modal_[i] + 2.0 * setup_.scaling * y[i];
  return from_modal(y);
}

StateTrace CostateMap::apply(const StateTrace& p) const {
  if (p.size() != grid_.points()) throw ModelError("co-state trace does not match the grid");
  double largest = 0.0;
  for (const auto& v : p) largest = std::max(largest, v.norm());
  auto directions = unit_directions(p, kSingularGuard * largest);
  for (auto& d : directions) d *= std::sqrt(setup_.power_budget);
  return costate_for_control(directions);
}

StateTrace g_term(const SystemMatrix& a, const State& x0, const Kernel& kernel, double scaling,
                  const TimeGrid& grid) {
  ContractionSetup setup;
  setup.power_budget = 1.0;
  setup.scaling = scaling;
  return CostateMap(a, x0, kernel, setup, grid).forcing();
}

StateTrace unit_directions(const StateTrace& p, double guard) {
  StateTrace out;
  out.reserve(p.size());
  for (const auto& v : p) {
    const double norm = v.norm();
    out.push_back(norm > guard && norm > 0.0 ? Eigen::VectorXd(v / norm)
                                             : Eigen::VectorXd::Zero(v.size()));
  }
  if (out.size() >= 2) {
    const auto& last = p.back();
    const auto& before = p[p.size() - 2];
    if (!(last.norm() > guard) && before.norm() > guard && before.norm() > 0.0) {
      out.back() = out[out.size() - 2];
    }
  }
  return out;
}

double sup_norm(const StateTrace& v) {
  double m = 0.0;
  for (const auto& s : v) {
    if (s.size() > 0) m = std::max(m, s.cwiseAbs().maxCoeff());
  }
  return m;
}

double sup_distance(const StateTrace& a, const StateTrace& b) {
  if (a.size() != b.size()) throw ModelError("traces differ in length");
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() > 0) m = std::max(m, (a[k] - b[k]).cwiseAbs().maxCoeff());
  }
  return m;
}

FixedPointResult costate_fixed_point(const CostateMap& map, const FixedPointOptions& options) {
  FixedPointResult r;
  const auto points = map.grid().points();
  if (options.start == CostateStart::kForcing) {
    r.costate = map.forcing();
  } else {
    // apply() normalizes its argument, so a constant trace yields the
    // co-state of the baseline control u = sqrt(P/n) 1.
    const auto n = map.forcing().front().size();
    r.costate = map.apply(StateTrace(points, Eigen::VectorXd::Ones(n)));
  }
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    auto next = map.apply(r.costate);
    const double step = sup_distance(next, r.costate);
    const double scale = sup_norm(r.costate);
    r.residuals.push_back(step);
    r.iterations = iter;
    r.costate = std::move(next);
    if (step <= options.tolerance * scale) {
      r.converged = true;
      break;
    }
  }
  return r;
}

NoiseControl optimal_noise(const StateTrace& costate, double power_budget) {
  if (!(power_budget > 0.0)) throw ModelError("power budget must be positive");
  double largest = 0.0;
  for (const auto& v : costate) largest = std::max(largest, v.norm());
  NoiseControl c;
  c.power_budget = power_budget;
  c.u = unit_directions(costate, kSingularGuard * largest);
  c.singular.reserve(c.u.size());
  for (auto& u : c.u) {
    c.singular.push_back(u.isZero(0.0));
    u *= std::sqrt(power_budget);
  }
  return c;
}

Trajectory propagate_with_noise(const SystemMatrix& a, const State& x0, const StateTrace& u,
                                const TimeGrid& grid) {
  if (u.size() != grid.points()) throw ModelError("control trace does not match the grid");
  if (x0.size() != a.size()) throw ModelError("initial state has the wrong length");
  const double h = grid.step();
  const Eigen::MatrixXd e = matrix_exponential(a, h);
  Trajectory traj{grid, {}, {}};
  traj.x.reserve(grid.points());
  traj.x.push_back(x0);
  const double avg = x0.mean();
  Eigen::VectorXd dev = (x0.array() - avg).matrix();
  for (std::size_t k = 0; k + 1 < grid.points(); ++k) {
    dev = e * dev + 0.5 * h * (e * u[k] + u[k + 1]);
    traj.x.push_back((dev.array() + avg).matrix());
  }
  return traj;
}

LagrangeDiagnostics lagrange_multiplier(const StateTrace& u, const StateTrace& p, double power_budget) {
  if (u.size() != p.size()) throw ModelError("control and co-state traces differ in length");
  LagrangeDiagnostics d;
  d.max_multiplier = -std::numeric_limits<double>::infinity();
  d.multiplier.reserve(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double lambda = -u[k].dot(p[k]) / (2.0 * power_budget);
    d.multiplier.push_back(lambda);
    d.max_multiplier = std::max(d.max_multiplier, lambda);
    d.max_slackness = std::max(d.max_slackness, std::abs(lambda * (u[k].squaredNorm() - power_budget)));
  }
  if (u.empty()) d.max_multiplier = 0.0;
  d.sign_ok = d.max_multiplier <= 1e-12;
  d.slackness_ok = d.max_slackness <= 1e-8;
  return d;
}

Attack2Outcome simulate_attack2(const NoiseAttackProblem& problem, const FixedPointOptions& options) {
  const auto a = build_system_matrix(problem.topology, LinkControl::none(problem.topology));
  Attack2Outcome out;
  out.setup = contraction_setup(problem);
  CostateMap map(a, problem.x0, problem.kernel, out.setup, problem.grid);
  auto fixed = costate_fixed_point(map, options);
  out.control = optimal_noise(fixed.costate, problem.power_budget);
  out.trajectory = propagate_with_noise(a, problem.x0, out.control.u, problem.grid);
  out.trajectory.p = std::move(fixed.costate);
  out.objective = objective(out.trajectory, problem.kernel);
  out.scaled_objective = out.setup.scaling * out.objective;
  out.iterations = fixed.iterations;
  out.converged = fixed.converged;
  out.residuals = std::move(fixed.residuals);
  out.lagrange = lagrange_multiplier(out.control.u, out.trajectory.p, problem.power_budget);
  return out;
}

double no_attack_objective(const NoiseAttackProblem& problem) {
  const auto a = build_system_matrix(problem.topology, LinkControl::none(problem.topology));
  StateTrace zero(problem.grid.points(), Eigen::VectorXd::Zero(problem.x0.size()));
  return objective(propagate_with_noise(a, problem.x0, zero, problem.grid), problem.kernel);
}

BaselineReport baseline_constant_control(const NoiseAttackProblem& problem) {
  const auto a = build_system_matrix(problem.topology, LinkControl::none(problem.topology));
  const auto n = problem.x0.size();
  const double level = std::sqrt(problem.power_budget / static_cast<double>(n));
  StateTrace u(problem.grid.points(), Eigen::VectorXd::Constant(n, level));

  BaselineReport r;
  r.trajectory = propagate_with_noise(a, problem.x0, u, problem.grid);
  r.simulated = objective(r.trajectory, problem.kernel);

  SymmetricExponential exp_a(a.matrix());
  const Eigen::VectorXd dev0 = (problem.x0.array() - problem.x0.mean()).matrix();
  const auto k = problem.kernel.sample(problem.grid);
  std::vector<double> integrand(problem.grid.points());
  std::vector<double> moment(problem.grid.points());
  for (std::size_t i = 0; i < integrand.size(); ++i) {
    const double t = problem.grid.at(i);
    // x0^T P(2t)(I - M) x0 = (x0 - xbar)^T P(2t) (x0 - xbar).
    const double decay = dev0.dot(exp_a.at(2.0 * t) * dev0);
    integrand[i] = k[i] * (decay + problem.power_budget * t * t);
    moment[i] = problem.power_budget * k[i] * t * t;
  }
  const double h = problem.grid.step();
  r.closed_form = simpson(integrand, h);
  const std::size_t last = integrand.size() - 1;
  for (std::size_t i = 0; i <= last; ++i) r.closed_form_trapezoid += trapezoid_weight(i, 0, last, h) * integrand[i];
  r.bound = simpson(moment, h);
  return r;
}

}  // namespace advcons
