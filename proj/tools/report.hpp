#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "config.hpp"

namespace pathhedge::cli {

/// Shortest decimal form that round-trips (17 significant digits).
std::string csv_number(double value);

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // <=, <, >=, >, ==
  double limit = 0.0;
  bool passed = false;
};

/// Output directory, declared checks and the run manifest.
class Report {
 public:
  Report(std::string command, const Config& config, const Overrides& overrides, std::filesystem::path out);

  /// Opens out/name for writing and lists it in the manifest.
  std::ofstream open(const std::string& name);
  void close(std::ofstream& stream, const std::string& name);

  void check(const std::string& name, double value, const std::string& relation, double limit);
  void result(const std::string& name, nlohmann::json value);
  void seed(const std::string& name, std::uint64_t value);

  bool passed() const;
  const std::vector<Check>& checks() const { return checks_; }
  void write_manifest(int exit_code, const std::string& error = "");

 private:
  std::string command_;
  const Config& config_;
  Overrides overrides_;
  std::filesystem::path out_;
  std::vector<Check> checks_;
  std::vector<std::string> outputs_;
  nlohmann::json results_ = nlohmann::json::object();
  nlohmann::json seeds_ = nlohmann::json::object();
};

}  // namespace pathhedge::cli
