#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "advcons/topology.hpp"

namespace advcons {

using State = Eigen::VectorXd;
using StateTrace = std::vector<Eigen::VectorXd>;

/// Uniform grid t_k = k * horizon / steps, k = 0..steps.
class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  std::size_t points() const { return static_cast<std::size_t>(steps_) + 1; }
  double step() const { return horizon_ / steps_; }
  double at(std::size_t k) const;

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double horizon_;
  int steps_;
};

/// sup_t t k(t) and sup_t int_t^T tau k(tau) dtau, evaluated on a grid.
struct KernelConstants {
  double sup_weighted = 0.0;  // sup t k(t)
  double sup_tail_moment = 0.0;  // sup int_t^T tau k(tau) dtau
};

/// Positive weighting kernel k(t) of the disagreement objective.
class Kernel {
 public:
  enum class Kind { kConstant, kTable };

  static Kernel constant(double value = 1.0);
  /// Breakpoints (t, k) with strictly increasing t; linear in between,
  /// held constant outside the table.
  static Kernel table(std::vector<std::pair<double, double>> points);

  Kind kind() const { return kind_; }
  double constant_value() const { return constant_; }
  const std::vector<std::pair<double, double>>& points() const { return points_; }

  double at(double t) const;
  std::vector<double> sample(const TimeGrid& grid) const;
  KernelConstants constants(const TimeGrid& grid) const;

  friend bool operator==(const Kernel&, const Kernel&) = default;

 private:
  Kind kind_ = Kind::kConstant;
  double constant_ = 1.0;
  std::vector<std::pair<double, double>> points_;
};

/// Sampled state and, optionally, co-state on a time grid.
struct Trajectory {
  TimeGrid grid{1.0, 1};
  StateTrace x;
  StateTrace p;  // empty when no co-state was computed

  bool has_costate() const { return !p.empty(); }
};

/// exp(A t) for symmetric A through one eigendecomposition.
class SymmetricExponential {
 public:
  explicit SymmetricExponential(const Eigen::MatrixXd& a);

  Eigen::MatrixXd at(double t) const;
  const Eigen::VectorXd& eigenvalues() const { return values_; }
  const Eigen::MatrixXd& eigenvectors() const { return vectors_; }

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
};

/// Doubly stochastic, symmetric exp(A t). Throws ModelError for t < 0.
Eigen::MatrixXd matrix_exponential(const SystemMatrix& a, double t);

/// Per-step transition matrices exp(A(u) h), memoized by control.
class StepExponentials {
 public:
  StepExponentials(const NetworkTopology& topology, double step);

  const Eigen::MatrixXd& operator()(const LinkControl& control);
  std::size_t cached() const { return cache_.size(); }

 private:
  const NetworkTopology* topology_;
  double step_;
  std::map<std::vector<std::uint8_t>, Eigen::MatrixXd> cache_;
};

/// x(t_{k+1}) = exp(A_k h) x(t_k) with A_k built from schedule[k].
Trajectory propagate(const State& x0, const LinkSchedule& schedule,
                     const NetworkTopology& topology, const TimeGrid& grid);

/// Composite trapezoid of k(t)|x(t) - xbar|^2, xbar from the initial state.
double objective(const Trajectory& trajectory, const Kernel& kernel);

struct ConsensusOutcome {
  Trajectory trajectory;
  double objective = 0.0;
  double final_spread = 0.0;  // max_i |x_i(T) - xbar|
};

/// Unattacked run: every link intact for the whole horizon.
ConsensusOutcome simulate_consensus(const NetworkTopology& topology, const State& x0,
                                    const TimeGrid& grid, const Kernel& kernel);

struct AverageSplit {
  double average = 0.0;
  Eigen::VectorXd disagreement;
};

AverageSplit average_and_disagreement(const State& x);

/// Composite trapezoid weight of grid point k on [t_first, t_last].
double trapezoid_weight(std::size_t k, std::size_t first, std::size_t last, double step);

/// Composite Simpson on a uniform grid (3/8 rule on the final three panels
/// when the panel count is odd; plain trapezoid for a single panel).
double simpson(std::span<const double> values, double step);

/// CSV with header t,x1..xn[,p1..pn]; 17 significant digits.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// Locale-independent shortest-exact formatting with 17 significant digits.
std::string format_double(double value);

}  // namespace advcons
