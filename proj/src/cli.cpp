#include "advcons/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "advcons/report.hpp"
#include "advcons/scenario.hpp"
#include "advcons/verification.hpp"

namespace advcons {

namespace {

namespace fs = std::filesystem;

struct CommonFlags {
  std::string scenario;
  std::string out;
  std::optional<int> steps;
  bool quiet = false;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const CommonFlags& flags) {
  if (!flags.out.empty()) return flags.out;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return "advcons-out";
}

ScenarioConfig load(const CommonFlags& flags) {
  if (flags.scenario.empty()) throw ConfigError("--scenario is required");
  if (!fs::exists(flags.scenario)) throw ConfigError("scenario file not found: " + flags.scenario);
  auto config = load_scenario(flags.scenario);
  if (flags.steps) config.steps = *flags.steps;
  return config;
}

void print_files(std::ostream& out, const FileSet& files) {
  for (const auto& f : files) out << f.string() << '\n';
}

int run_simulate(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto config = load(flags);
  if (!std::holds_alternative<NoAttack>(config.attack)) {
    err << "warning: simulate ignores the scenario's attack block\n";
  }
  if (!flags.quiet) err << "simulating " << config.name << " (" << config.steps << " steps)\n";
  const auto outcome = simulate_consensus(config.topology, config.x0, config.grid(), config.kernel);
  print_files(out, write_report(config, outcome, output_dir(flags)));
  if (!flags.quiet) {
    err << "J = " << format_double(outcome.objective) << ", max |x_i(T) - avg| = "
        << format_double(outcome.final_spread) << '\n';
  }
  return kExitOk;
}

int run_attack1(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto config = load(flags);
  if (!std::holds_alternative<LinkAttackSpec>(config.attack)) {
    throw ConfigError("attack1 needs a scenario with a link attack block");
  }
  if (!flags.quiet) err << "greedy link attack on " << config.name << '\n';
  const auto problem = config.link_problem();
  const auto outcome = simulate_attack1(problem);
  if (!flags.quiet) err << "checking against the maximum-principle sweep\n";
  const auto consistency = verify_greedy_mp_consistency(problem);
  print_files(out, write_report(config, outcome, output_dir(flags), &consistency));
  if (!flags.quiet) {
    err << "J = " << format_double(outcome.objective) << ", " << to_string(outcome.classification)
        << ", schedule agreement " << format_double(consistency.schedule_agreement) << '\n';
  }
  return kExitOk;
}

int run_attack2(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  const auto config = load(flags);
  if (!std::holds_alternative<NoiseAttackSpec>(config.attack)) {
    throw ConfigError("attack2 needs a scenario with a noise attack block");
  }
  if (!flags.quiet) err << "noise attack on " << config.name << '\n';
  const auto problem = config.noise_problem();
  const auto outcome = simulate_attack2(problem);
  const auto baseline = baseline_constant_control(problem);
  print_files(out, write_report(config, outcome, output_dir(flags), &baseline));
  if (!flags.quiet) {
    err << "J = " << format_double(outcome.objective) << " after " << outcome.iterations << " iterations"
        << (outcome.converged ? "" : " (not converged)") << '\n';
  }
  return outcome.converged ? kExitOk : kExitFailure;
}

int run_verify(const CommonFlags& flags, const std::string& fault, std::ostream& out, std::ostream& err) {
  VerifyOptions options;
  options.steps = flags.steps;
  if (!fault.empty()) {
    if (fault != "f-sign") throw ConfigError("unknown fault '" + fault + "'");
    options.flip_switching_sign = true;
  }
  std::vector<std::string> failing;
  for (const auto& id : property_ids()) {
    if (!flags.quiet) err << "checking property " << id << '\n';
    const auto r = run_property(id, options);
    out << format_result(r) << std::endl;
    if (!r.passed) failing.push_back(r.id + " (" + r.name + ")");
  }
  if (failing.empty()) {
    out << "all properties passed\n";
    return kExitOk;
  }
  out << "failing properties: ";
  for (std::size_t i = 0; i < failing.size(); ++i) out << (i ? ", " : "") << failing[i];
  out << '\n';
  return kExitFailure;
}

struct CheckRow {
  std::string check;
  std::string expected;
  std::string observed;
  bool passed;
};

int run_reproduce(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  auto config = paper_k4_scenario();
  if (flags.steps) config.steps = *flags.steps;
  const fs::path dir = output_dir(flags);

  if (!flags.quiet) err << "paper_k4 without attack\n";
  auto plain = config;
  plain.attack = NoAttack{};
  const auto consensus = simulate_consensus(plain.topology, plain.x0, plain.grid(), plain.kernel);
  print_files(out, write_report(plain, consensus, dir / "no_attack"));

  if (!flags.quiet) err << "paper_k4 with the link attack\n";
  const auto problem = config.link_problem();
  const auto attack1 = simulate_attack1(problem);
  const auto consistency = verify_greedy_mp_consistency(problem);
  print_files(out, write_report(config, attack1, dir / "attack1", &consistency));

  if (!flags.quiet) err << "paper_k4 with the noise attack (P_max = 1, safety = 0.9)\n";
  auto noisy = config;
  noisy.name = "paper_k4_noise";
  noisy.attack = NoiseAttackSpec{1.0, 0.9, std::nullopt};
  const auto noise_problem = noisy.noise_problem();
  const auto attack2 = simulate_attack2(noise_problem);
  const auto baseline = baseline_constant_control(noise_problem);
  print_files(out, write_report(noisy, attack2, dir / "attack2", &baseline));

  const auto power = edge_power(config.x0, config.topology);
  const std::size_t expected_positions[] = {1, 2};
  const auto expected = LinkControl::breaking(config.topology, expected_positions);
  const auto stationary = std::count(attack1.schedule.begin(), attack1.schedule.end(), expected);
  const double spread = consensus.final_spread;

  const std::vector<CheckRow> rows{
      {"w13(0)", "2.2101 +- 5e-4", format_double(power.power[1]), std::abs(power.power[1] - 2.2101) <= 5e-4},
      {"w14(0)", "13.8979 +- 5e-4", format_double(power.power[2]), std::abs(power.power[2] - 13.8979) <= 5e-4},
      {"stationary {(1,3),(1,4)}", "100% of steps",
       format_double(100.0 * static_cast<double>(stationary) / static_cast<double>(attack1.schedule.size())) + "%",
       static_cast<std::size_t>(stationary) == attack1.schedule.size()},
      {"J(attack1) > J(no attack)", "true",
       format_double(attack1.objective) + " > " + format_double(consensus.objective),
       attack1.objective > consensus.objective},
      {"max |x_i(2) - 2.5| without attack", "< 0.05", format_double(spread), spread < 0.05},
      {"J(attack2) >= J(baseline)", "true",
       format_double(attack2.objective) + " >= " + format_double(baseline.simulated),
       attack2.objective >= baseline.simulated - 1e-6 && attack2.converged},
  };

  fs::create_directories(dir);
  std::ofstream table(dir / "check_table.csv", std::ios::binary);
  table << "check,expected,observed,pass\n";
  bool all = true;
  for (const auto& r : rows) {
    table << '"' << r.check << "\",\"" << r.expected << "\",\"" << r.observed << "\"," << (r.passed ? "true" : "false")
          << '\n';
    out << (r.passed ? "PASS " : "FAIL ") << r.check << ": expected " << r.expected << ", observed " << r.observed
        << '\n';
    all = all && r.passed;
  }
  if (!table) throw std::runtime_error("cannot write " + (dir / "check_table.csv").string());
  return all ? kExitOk : kExitFailure;
}

void add_common(CLI::App& cmd, CommonFlags& flags, bool scenario) {
  if (scenario) cmd.add_option("--scenario", flags.scenario, "Scenario file")->required();
  cmd.add_option("--out", flags.out, std::string("Output directory (default: $") + kOutDirEnv + " or ./advcons-out)");
  cmd.add_option("--steps", flags.steps, "Override the grid step count")->check(CLI::PositiveNumber);
  cmd.add_flag("--quiet", flags.quiet, "Suppress progress output");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consensus averaging under optimal link-breaking and noise-injection attacks", "advcons"};
  app.require_subcommand(1, 1);
  app.footer(std::string("Environment:\n  ") + kOutDirEnv +
             "  default output directory when --out is not given\n"
             "Exit codes: 0 success, 1 runtime or check failure, 2 usage or configuration error");

  CommonFlags flags;
  std::string fault;
  auto* simulate = app.add_subcommand("simulate", "Run the scenario without any attack");
  add_common(*simulate, flags, true);
  auto* attack1 = app.add_subcommand("attack1", "Run the greedy link-breaking attack");
  add_common(*attack1, flags, true);
  auto* attack2 = app.add_subcommand("attack2", "Run the optimal noise-injection attack");
  add_common(*attack2, flags, true);
  auto* verify = app.add_subcommand("verify", "Run the built-in property suite");
  add_common(*verify, flags, false);
  verify->add_option("--inject-fault", fault, "Test hook")->group("");
  auto* reproduce = app.add_subcommand("reproduce-paper", "Reproduce the four-node example with both attacks");
  add_common(*reproduce, flags, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return run_simulate(flags, out, err);
    if (attack1->parsed()) return run_attack1(flags, out, err);
    if (attack2->parsed()) return run_attack2(flags, out, err);
    if (verify->parsed()) return run_verify(flags, fault, out, err);
    return run_reproduce(flags, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace advcons
