#pragma once

// INI experiment configuration for the command-line driver. Grammar in
// docs/config.md.

#include <boost/property_tree/ptree.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pathhedge/functional.hpp"
#include "pathhedge/local_vol.hpp"
#include "pathhedge/paths.hpp"
#include "pathhedge/payoff.hpp"
#include "pathhedge/scheme.hpp"

namespace pathhedge::cli {

class Config {
 public:
  /// Throws IoError if the file cannot be read, ParseError if it is not INI.
  static Config load(const std::filesystem::path& file);
  static Config parse(const std::string& text, std::filesystem::path base_dir = ".");

  const boost::property_tree::ptree& tree() const { return tree_; }
  const std::filesystem::path& base_dir() const { return base_dir_; }

  bool has(const std::string& key) const;
  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  /// Keys and values of a section in file order (empty if absent).
  std::vector<std::pair<std::string, std::string>> section(const std::string& name) const;

 private:
  boost::property_tree::ptree tree_;
  std::filesystem::path base_dir_;
};

/// Values after the command-line overrides.
struct Overrides {
  int threads = 1;
  std::optional<std::uint64_t> seed;
  std::optional<int> level;
};

LocalVolModel read_model(const Config& config);
Eigen::VectorXd read_spot(const Config& config, int dimension);
/// [paths] plus the seed override; the generation level is raised to the
/// --level override when that is finer.
PathGeneratorSpec read_paths(const Config& config, const LocalVolModel& model, const Overrides& overrides);
/// Hedging / integration level n: --level, else `key`, else the path level.
int read_level(const Config& config, const std::string& key, const PathGeneratorSpec& paths,
               const Overrides& overrides);
FixingSchedule read_schedule(const Config& config, const PathGeneratorSpec& paths);
PayoffSpec read_payoff(const std::string& text, const Config& config, int dimension, int last_fixing);
SchemeConfig read_scheme_config(const Config& config, const LocalVolModel& model, const Eigen::VectorXd& spot,
                                double horizon, int threads);
/// Grid for a single TVP over [t_start, t_end].
GridSpec read_grid(const Config& config, const LocalVolModel& model, const Eigen::VectorXd& spot, double duration);

}  // namespace pathhedge::cli
