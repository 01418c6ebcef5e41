#pragma once

#include <optional>
#include <vector>

#include "advcons/dynamics.hpp"
#include "advcons/topology.hpp"

namespace advcons {

/// Everything a noise-injection run needs. The topology is never altered.
struct NoiseAttackProblem {
  NetworkTopology topology;
  State x0;
  TimeGrid grid;
  Kernel kernel = Kernel::constant(1.0);
  double power_budget = 1.0;          // P_max
  double safety = 0.9;                // nu = safety * nu_max
  std::optional<double> scaling;      // explicit nu, overrides safety
};

/// Objective scaling nu and the contraction factor of the co-state map it
/// induces, q = 2 nu sqrt(P_max) (k_check + k_hat).
struct ContractionSetup {
  double power_budget = 0.0;
  double kernel_sup_weighted = 0.0;    // sup t k(t)
  double kernel_sup_tail = 0.0;        // sup int_t^T tau k(tau) dtau
  double scaling_limit = 0.0;          // nu_max
  double scaling = 0.0;                // nu
  double contraction_factor = 0.0;     // q
};

ContractionSetup contraction_setup(const KernelConstants& kernel, double power_budget,
                                   double safety = 0.9);
/// Explicit nu; throws ModelError unless 0 < nu < nu_max.
ContractionSetup contraction_setup_with_scaling(const KernelConstants& kernel, double power_budget,
                                                double scaling);
ContractionSetup contraction_setup(const NoiseAttackProblem& problem);

/// Forcing term g(t) = 2 nu int_t^T P(tau - t) k(tau) (P(tau) x0 - xbar) dtau.
StateTrace g_term(const SystemMatrix& a, const State& x0, const Kernel& kernel, double scaling,
                  const TimeGrid& grid);

/// Unit directions p/|p| with the singular-arc guard: points with
/// |p| <= guard map to zero. The terminal point, where p(T) = 0 by
/// construction, takes the direction of the preceding sample.
StateTrace unit_directions(const StateTrace& p, double guard);

/// Relative singular-arc guard factor: guard = 1e-10 * max_k |p(t_k)|.
inline constexpr double kSingularGuard = 1e-10;

/// The co-state map
///   T(p)(t) = g(t) + 2 nu sqrt(P_max) int_t^T int_0^tau k(tau) P(2 tau - t - s) pbar(s) ds dtau
/// on the grid, composite trapezoid in both variables. Evaluated in the
/// eigenbasis of A with running recursions, O(steps * n) per application.
class CostateMap {
 public:
  CostateMap(const SystemMatrix& a, const State& x0, const Kernel& kernel,
             const ContractionSetup& setup, const TimeGrid& grid);

  StateTrace apply(const StateTrace& p) const;
  const StateTrace& forcing() const { return g_; }
  /// Co-state of a fixed control trace u (not normalized): g plus the
  /// response 2 nu int_t^T k P(tau - t) int_0^tau P(tau - s) u(s) ds dtau.
  StateTrace costate_for_control(const StateTrace& u) const;
  const TimeGrid& grid() const { return grid_; }

 private:
  // Modal-coordinate helpers; traces are in the eigenbasis.
  StateTrace accumulate_forward(const StateTrace& f) const;
  StateTrace accumulate_backward(const StateTrace& f) const;
  StateTrace to_modal(const StateTrace& v) const;
  StateTrace from_modal(const StateTrace& v) const;

  TimeGrid grid_;
  Eigen::MatrixXd vectors_;
  Eigen::VectorXd step_decay_;  // exp(lambda h) per mode
  std::vector<double> kernel_;
  ContractionSetup setup_;
  StateTrace g_;
  StateTrace g_modal_;
};

enum class CostateStart {
  /// p0 = co-state of the constant full-power baseline u = sqrt(P/n) 1.
  kBaseline,
  /// p0 = g.
  kForcing,
};

struct FixedPointOptions {
  double tolerance = 1e-8;  // on ||p_{k+1} - p_k||_inf / ||p_k||_inf
  int max_iterations = 200;
  CostateStart start = CostateStart::kBaseline;
};

struct FixedPointResult {
  StateTrace costate;
  std::vector<double> residuals;  // sup-norm step sizes, one per application
  int iterations = 0;
  bool converged = false;
};

FixedPointResult costate_fixed_point(const CostateMap& map, const FixedPointOptions& options = {});

/// Sup norm over every sample and component.
double sup_norm(const StateTrace& v);
double sup_distance(const StateTrace& a, const StateTrace& b);

struct NoiseControl {
  StateTrace u;
  double power_budget = 0.0;
  std::vector<bool> singular;  // true where the guard zeroed u
};

/// u = sqrt(P_max) p / |p| off the singular arc, zero on it.
NoiseControl optimal_noise(const StateTrace& costate, double power_budget);

/// x_{k+1} = exp(A h) x_k + (h/2)(exp(A h) u_k + u_{k+1}).
Trajectory propagate_with_noise(const SystemMatrix& a, const State& x0, const StateTrace& u,
                                const TimeGrid& grid);

struct LagrangeDiagnostics {
  std::vector<double> multiplier;
  double max_multiplier = 0.0;
  double max_slackness = 0.0;  // max |lambda (|u|^2 - P_max)|
  bool sign_ok = false;        // lambda <= 1e-12 everywhere
  bool slackness_ok = false;   // complementary slackness within 1e-8
};

/// lambda = -u^T p / (2 P_max).
LagrangeDiagnostics lagrange_multiplier(const StateTrace& u, const StateTrace& p, double power_budget);

struct Attack2Outcome {
  Trajectory trajectory;  // x and the converged co-state p*
  NoiseControl control;
  ContractionSetup setup;
  double objective = 0.0;         // unscaled J
  double scaled_objective = 0.0;  // nu J
  int iterations = 0;
  bool converged = false;
  std::vector<double> residuals;
  LagrangeDiagnostics lagrange;
};

Attack2Outcome simulate_attack2(const NoiseAttackProblem& problem, const FixedPointOptions& options = {});

/// Unattacked objective J(0) for the same network and grid.
double no_attack_objective(const NoiseAttackProblem& problem);

struct BaselineReport {
  /// int k [x0^T P(2t)(I - M) x0 + P_max t^2] dt by composite Simpson.
  double closed_form = 0.0;
  /// Same integrand, composite trapezoid.
  double closed_form_trapezoid = 0.0;
  /// Objective of the simulated trajectory under u = sqrt(P_max/n) 1.
  double simulated = 0.0;
  /// P_max int k(t) t^2 dt (P_max T^3 / 3 for k = 1), composite Simpson.
  double bound = 0.0;
  Trajectory trajectory;
};

/// Constant full-power baseline control u2 = sqrt(P_max / n) 1.
BaselineReport baseline_constant_control(const NoiseAttackProblem& problem);

}  // namespace advcons
