#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace advcons {

struct PropertyResult {
  std::string id;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  /// Grid override; grid-sensitive tolerances scale by grid_tolerance_factor.
  std::optional<int> steps;
  /// Fault injection: negates every switching function in the sweep.
  bool flip_switching_sign = false;
};

inline constexpr int kReferenceSteps = 400;

/// max(1, (400 / steps)^2): trapezoid error grows with h^2.
double grid_tolerance_factor(int steps);

/// Property ids in report order: 1 .. 9, 10a, 10b, 11.
std::vector<std::string> property_ids();

/// Throws std::invalid_argument for an unknown id.
PropertyResult run_property(std::string_view id, const VerifyOptions& options = {});
std::vector<PropertyResult> run_verification_suite(const VerifyOptions& options = {});

/// "PASS [id] name: detail (seconds)".
std::string format_result(const PropertyResult& result);

}  // namespace advcons
