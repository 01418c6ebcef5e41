#include "advcons/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

namespace advcons {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ModelError("horizon must be positive");
  if (steps <= 0) throw ModelError("step count must be positive");
}

double TimeGrid::at(std::size_t k) const {
  if (k == static_cast<std::size_t>(steps_)) return horizon_;
  return static_cast<double>(k) * horizon_ / steps_;
}

Kernel Kernel::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ModelError("kernel must be positive");
  Kernel k;
  k.kind_ = Kind::kConstant;
  k.constant_ = value;
  return k;
}

Kernel Kernel::table(std::vector<std::pair<double, double>> points) {
  if (points.empty()) throw ModelError("kernel table is empty");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i].second > 0.0) || !std::isfinite(points[i].second)) {
      throw ModelError("kernel table value at t = " + format_double(points[i].first) +
                       " must be positive");
    }
    if (i > 0 && !(points[i].first > points[i - 1].first)) {
      throw ModelError("kernel table times must be strictly increasing");
    }
  }
  Kernel k;
  k.kind_ = Kind::kTable;
  k.constant_ = 0.0;
  k.points_ = std::move(points);
  return k;
}

double Kernel::at(double t) const {
  if (kind_ == Kind::kConstant) return constant_;
  if (t <= points_.front().first) return points_.front().second;
  if (t >= points_.back().first) return points_.back().second;
  auto hi = std::upper_bound(points_.begin(), points_.end(), t,
                             [](double v, const auto& p) { return v < p.first; });
  auto lo = hi - 1;
  const double w = (t - lo->first) / (hi->first - lo->first);
  return (1.0 - w) * lo->second + w * hi->second;
}

std::vector<double> Kernel::sample(const TimeGrid& grid) const {
  std::vector<double> out(grid.points());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(grid.at(k));
  return out;
}

KernelConstants Kernel::constants(const TimeGrid& grid) const {
  const auto values = sample(grid);
  const std::size_t last = grid.points() - 1;
  const double h = grid.step();
  KernelConstants c;
  for (std::size_t k = 0; k <= last; ++k) c.sup_weighted = std::max(c.sup_weighted, grid.at(k) * values[k]);
  // Tail moments accumulated backward; the tail integral from t_k is the
  // running trapezoid sum of tau k(tau) over [t_k, T].
  double tail = 0.0;
  c.sup_tail_moment = 0.0;
  for (std::size_t k = last; k-- > 0;) {
    tail += 0.5 * h * (grid.at(k) * values[k] + grid.at(k + 1) * values[k + 1]);
    c.sup_tail_moment = std::max(c.sup_tail_moment, tail);
  }
  return c;
}

SymmetricExponential::SymmetricExponential(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw ModelError("eigendecomposition failed");
  values_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

Eigen::MatrixXd SymmetricExponential::at(double t) const {
  const Eigen::VectorXd scale = (values_ * t).array().exp();
  return vectors_ * scale.asDiagonal() * vectors_.transpose();
}

Eigen::MatrixXd matrix_exponential(const SystemMatrix& a, double t) {
  if (t < 0.0) throw ModelError("matrix exponential requires t >= 0");
  if (a.matrix().isZero(0.0)) return Eigen::MatrixXd::Identity(a.size(), a.size());
  Eigen::MatrixXd p = SymmetricExponential(a.matrix()).at(t);
  // Symmetrize to remove the O(eps) skew left by V diag V^T.
  return 0.5 * (p + p.transpose());
}

StepExponentials::StepExponentials(const NetworkTopology& topology, double step)
    : topology_(&topology), step_(step) {}

const Eigen::MatrixXd& StepExponentials::operator()(const LinkControl& control) {
  auto it = cache_.find(control.bits());
  if (it != cache_.end()) return it->second;
  auto a = build_system_matrix(*topology_, control);
  return cache_.emplace(control.bits(), matrix_exponential(a, step_)).first->second;
}

Trajectory propagate(const State& x0, const LinkSchedule& schedule,
                     const NetworkTopology& topology, const TimeGrid& grid) {
  if (x0.size() != topology.node_count()) throw ModelError("initial state has the wrong length");
  if (schedule.size() != static_cast<std::size_t>(grid.steps())) {
    throw ModelError("schedule has " + std::to_string(schedule.size()) + " controls for " +
                     std::to_string(grid.steps()) + " steps");
  }
  StepExponentials step(topology, grid.step());
  Trajectory traj{grid, {}, {}};
  traj.x.reserve(grid.points());
  traj.x.push_back(x0);
  // Stepping the deviation keeps an exact consensus start exact.
  const double avg = x0.mean();
  Eigen::VectorXd dev = (x0.array() - avg).matrix();
  for (const auto& control : schedule) {
    dev = step(control) * dev;
    traj.x.push_back((dev.array() + avg).matrix());
  }
  return traj;
}

double trapezoid_weight(std::size_t k, std::size_t first, std::size_t last, double step) {
  if (first == last) return 0.0;
  return (k == first || k == last) ? 0.5 * step : step;
}

double objective(const Trajectory& trajectory, const Kernel& kernel) {
  if (trajectory.x.size() != trajectory.grid.points()) {
    throw ModelError("trajectory length does not match its grid");
  }
  const double avg = trajectory.x.front().mean();
  const auto k = kernel.sample(trajectory.grid);
  const std::size_t last = trajectory.grid.points() - 1;
  const double h = trajectory.grid.step();
  double total = 0.0;
  for (std::size_t i = 0; i <= last; ++i) {
    const double dev = (trajectory.x[i].array() - avg).matrix().squaredNorm();
    total += trapezoid_weight(i, 0, last, h) * k[i] * dev;
  }
  return total;
}

ConsensusOutcome simulate_consensus(const NetworkTopology& topology, const State& x0,
                                    const TimeGrid& grid, const Kernel& kernel) {
  const LinkSchedule intact(static_cast<std::size_t>(grid.steps()), LinkControl::none(topology));
  ConsensusOutcome out{propagate(x0, intact, topology, grid)};
  out.objective = objective(out.trajectory, kernel);
  out.final_spread = average_and_disagreement(out.trajectory.x.back()).disagreement.lpNorm<Eigen::Infinity>();
  return out;
}

AverageSplit average_and_disagreement(const State& x) {
  AverageSplit s;
  s.average = x.size() > 0 ? x.mean() : 0.0;
  s.disagreement = (x.array() - s.average).matrix();
  return s;
}

double simpson(std::span<const double> values, double step) {
  const std::size_t panels = values.empty() ? 0 : values.size() - 1;
  if (panels == 0) return 0.0;
  if (panels == 1) return 0.5 * step * (values[0] + values[1]);
  std::size_t even = panels % 2 == 0 ? panels : panels - 3;
  double total = 0.0;
  for (std::size_t k = 0; k + 2 <= even; k += 2) {
    total += step / 3.0 * (values[k] + 4.0 * values[k + 1] + values[k + 2]);
  }
  if (even != panels) {
    const std::size_t k = even;
    total += 3.0 * step / 8.0 * (values[k] + 3.0 * values[k + 1] + 3.0 * values[k + 2] + values[k + 3]);
  }
  return total;
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const auto n = trajectory.x.empty() ? 0 : trajectory.x.front().size();
  out << 't';
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  if (trajectory.has_costate()) {
    for (Eigen::Index i = 1; i <= n; ++i) out << ",p" << i;
  }
  out << '\n';
  for (std::size_t k = 0; k < trajectory.x.size(); ++k) {
    out << format_double(trajectory.grid.at(k));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(trajectory.x[k](i));
    if (trajectory.has_costate()) {
      for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(trajectory.p[k](i));
    }
    out << '\n';
  }
}

}  // namespace advcons
