// Acceptance criteria runner. With no arguments every property runs; with
// ids only those. Options: --steps N.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "advcons/verification.hpp"

int main(int argc, char** argv) {
  advcons::VerifyOptions options;
  std::vector<std::string> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--steps" && i + 1 < argc) {
      options.steps = std::atoi(argv[++i]);
    } else {
      ids.push_back(arg);
    }
  }
  if (ids.empty()) ids = advcons::property_ids();

  int failures = 0;
  for (const auto& id : ids) {
    try {
      const auto r = advcons::run_property(id, options);
      std::cout << advcons::format_result(r) << std::endl;
      if (!r.passed) ++failures;
    } catch (const std::exception& e) {
      std::cout << "FAIL [" << id << "] " << e.what() << std::endl;
      ++failures;
    }
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
