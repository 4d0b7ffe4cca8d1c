// pathhedge_cli COMMAND --config FILE [--out DIR] [--threads N]
//               [--seed-override U64] [--level N]
// Exit codes: 0 all checks pass, 1 numerical check failed, 2 parse or usage
// error, 3 validation error, 4 I/O error.

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "commands.hpp"

namespace {

using pathhedge::cli::Config;
using pathhedge::cli::Overrides;
using pathhedge::cli::Report;
using Command = std::function<void(const Config&, const Overrides&, Report&)>;

const std::map<std::string, std::pair<Command, const char*>>& commands() {
  using namespace pathhedge::cli;
  static const std::map<std::string, std::pair<Command, const char*>> table{
      {"qv", {command_qv, "quadratic covariation curves of generated paths"}},
      {"integrate", {command_integrate, "Foellmer integrals and the discrete Ito identity"}},
      {"solve", {command_solve, "single terminal-value problem on a grid"}},
      {"price", {command_price, "recursive scheme value and Delta at the spot"}},
      {"hedge", {command_hedge, "pathwise Delta hedging simulation"}},
      {"robust", {command_robust, "hedging under scaled covariation (kappa sweep)"}},
      {"noarb", {command_noarb, "no-arbitrage probe suite"}},
      {"ftvp", {command_ftvp, "path-dependent PDE residuals of an augmented functional"}},
  };
  return table;
}

std::string usage() {
  std::string text =
      "usage: pathhedge_cli COMMAND --config FILE [--out DIR] [--threads N] [--seed-override U64] [--level N]\n"
      "commands:\n";
  for (const auto& [name, entry] : commands()) text += "  " + name + std::string(11 - name.size(), ' ') + entry.second + "\n";
  return text;
}

int exit_code_of(const std::exception_ptr& error, std::string& message) {
  try {
    std::rethrow_exception(error);
  } catch (const pathhedge::ParseError& e) {
    message = e.what();
    return 2;
  } catch (const pathhedge::IoError& e) {
    message = e.what();
    return 4;
  } catch (const pathhedge::ValidationError& e) {
    message = e.what();
    return 3;
  } catch (const pathhedge::DomainError& e) {
    message = e.what();
    return 3;
  } catch (const pathhedge::BudgetError& e) {
    message = e.what();
    return 3;
  } catch (const std::exception& e) {
    message = e.what();
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pathwise Delta hedging experiments"};
  app.set_help_flag("-h,--help", "print help");
  std::string command, config_path, out_dir = "out";
  Overrides overrides;
  std::uint64_t seed = 0;
  int level = 0;
  app.add_option("command", command, "command to run");
  app.add_option("--config", config_path, "INI experiment file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", overrides.threads, "worker threads")->check(CLI::Range(1, 256));
  auto* seed_option = app.add_option("--seed-override", seed, "replace paths.seed");
  auto* level_option = app.add_option("--level", level, "rebalancing / integration level")->check(CLI::Range(1, 30));
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << usage();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << usage();
    return 2;
  }
  const auto found = commands().find(command);
  if (found == commands().end()) {
    std::cerr << (command.empty() ? "missing command" : "unknown command '" + command + "'") << "\n" << usage();
    return 2;
  }
  if (config_path.empty()) {
    std::cerr << "--config is required\n" << usage();
    return 2;
  }
  if (*seed_option) overrides.seed = seed;
  if (*level_option) overrides.level = level;

  std::optional<Config> config;
  std::optional<Report> report;
  try {
    config = Config::load(config_path);
    report.emplace(command, *config, overrides, out_dir);
    found->second.first(*config, overrides, *report);
  } catch (...) {
    std::string message;
    const int code = exit_code_of(std::current_exception(), message);
    std::cerr << "error: " << message << "\n";
    if (report) {
      try {
        report->write_manifest(code, message);
      } catch (const std::exception&) {
      }
    }
    return code;
  }
  const int code = report->passed() ? 0 : 1;
  try {
    report->write_manifest(code);
  } catch (const pathhedge::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  for (const auto& c : report->checks())
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << c.value << " " << c.relation << " " << c.limit
              << "\n";
  return code;
}
