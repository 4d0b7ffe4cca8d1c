#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace pathhedge::cli {

namespace pt = boost::property_tree;

Config Config::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read config file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), file.parent_path().empty() ? std::filesystem::path(".") : file.parent_path());
}

Config Config::parse(const std::string& text, std::filesystem::path base_dir) {
  Config config;
  config.base_dir_ = std::move(base_dir);
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, config.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  return config;
}

bool Config::has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

std::string Config::text(const std::string& key) const {
  const auto value = tree_.get_optional<std::string>(key);
  if (!value) throw ParseError("config key '" + key + "' is required");
  return *value;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return tree_.get<std::string>(key, fallback);
}

namespace {

double to_number(const std::string& key, const std::string& word) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(word, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != word.size()) throw ParseError("config key '" + key + "': '" + word + "' is not a number");
  return value;
}

std::vector<std::string> words(const std::string& text) {
  std::string spaced = text;
  for (char& c : spaced)
    if (c == ',' || c == ';' || c == '\t') c = ' ';
  std::istringstream in(spaced);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

double Config::number(const std::string& key) const {
  const auto list = words(text(key));
  if (list.size() != 1) throw ParseError("config key '" + key + "' must hold one number");
  return to_number(key, list[0]);
}

double Config::number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

long Config::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 9e15) throw ParseError("config key '" + key + "' must be an integer");
  return static_cast<long>(v);
}

std::uint64_t Config::unsigned_integer(const std::string& key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string word = text(key);
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    if (!word.empty() && word[0] == '-') throw std::invalid_argument("negative");
    value = std::stoull(word, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != word.size()) throw ParseError("config key '" + key + "' must be an unsigned integer");
  return value;
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = text(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("config key '" + key + "' must be true or false");
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  for (const auto& w : words(text(key))) out.push_back(to_number(key, w));
  if (out.empty()) throw ParseError("config key '" + key + "' is empty");
  return out;
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? numbers(key) : fallback;
}

std::vector<std::pair<std::string, std::string>> Config::section(const std::string& name) const {
  std::vector<std::pair<std::string, std::string>> out;
  const auto child = tree_.get_child_optional(name);
  if (!child) return out;
  for (const auto& [key, node] : *child) out.emplace_back(key, node.data());
  return out;
}

namespace {

Flavor read_flavor(const Config& config) {
  const std::string f = config.text("model.flavor", "positive");
  if (f == "positive") return Flavor::positive;
  if (f == "whole_space") return Flavor::whole_space;
  throw ParseError("model.flavor must be positive or whole_space, got '" + f + "'");
}

Eigen::MatrixXd square(const std::string& key, const std::vector<double>& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
  if (d < 1 || d * d != static_cast<Eigen::Index>(v.size()))
    throw ParseError("config key '" + key + "' must list d*d entries");
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = v[static_cast<std::size_t>(i * d + j)];
  return m;
}

VolTable read_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read volatility table " + file.string());
  std::string line;
  std::vector<std::vector<double>> rows;
  std::vector<double> spaces;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = words(line);
    if (header) {
      header = false;
      for (std::size_t i = 1; i < cells.size(); ++i) spaces.push_back(to_number(file.string(), cells[i]));
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(to_number(file.string(), c));
    if (row.size() != spaces.size() + 1) throw ParseError("volatility table row has the wrong number of cells");
    rows.push_back(std::move(row));
  }
  if (rows.empty() || spaces.empty()) throw ParseError("volatility table " + file.string() + " is empty");
  VolTable table;
  table.times.resize(static_cast<Eigen::Index>(rows.size()));
  table.spaces = Eigen::Map<Eigen::VectorXd>(spaces.data(), static_cast<Eigen::Index>(spaces.size()));
  table.sigma.resize(table.times.size(), table.spaces.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    table.times(static_cast<Eigen::Index>(r)) = rows[r][0];
    for (std::size_t c = 0; c < spaces.size(); ++c)
      table.sigma(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c + 1];
  }
  return table;
}

}  // namespace

LocalVolModel read_model(const Config& config) {
  const Flavor flavor = read_flavor(config);
  const std::string family = config.text("model.family", "constant");
  if (family == "constant") {
    const auto cov = square("model.covariance", config.numbers("model.covariance"));
    return LocalVolModel::constant(flavor, cov, config.number("model.bound", -1.0),
                                   config.number("model.eigen_floor", -1.0));
  }
  if (family == "tabulated") {
    const auto rho = square("model.correlation", config.numbers("model.correlation", {1.0}));
    std::vector<VolTable> tables;
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
      const std::string key = "model.table" + std::to_string(i + 1);
      tables.push_back(read_table(config.base_dir() / config.text(key)));
    }
    return LocalVolModel::tabulated(flavor, std::move(tables), rho, config.number("model.bound"),
                                    config.number("model.eigen_floor"));
  }
  throw ParseError("model.family must be constant or tabulated, got '" + family + "'");
}

Eigen::VectorXd read_spot(const Config& config, int dimension) {
  const auto v = config.numbers("paths.spot");
  if (static_cast<int>(v.size()) != dimension)
    throw ValidationError("paths.spot lists " + std::to_string(v.size()) + " values for a " +
                          std::to_string(dimension) + "-dimensional model");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), dimension);
}

PathGeneratorSpec read_paths(const Config& config, const LocalVolModel& model, const Overrides& overrides) {
  int level = static_cast<int>(config.integer("paths.level", 14));
  if (overrides.level) level = std::max(level, *overrides.level);
  const long count = config.integer("paths.count", 1);
  if (count < 1) throw ValidationError("paths.count must be at least 1");
  PathGeneratorSpec spec{model,
                         level,
                         config.number("paths.horizon", 1.0),
                         overrides.seed ? *overrides.seed : config.unsigned_integer("paths.seed", 42),
                         static_cast<std::uint64_t>(count),
                         config.number("paths.kappa", 1.0),
                         read_spot(config, model.dimension())};
  PartitionHierarchy(spec.horizon, spec.level);  // validates horizon and level
  return spec;
}

int read_level(const Config& config, const std::string& key, const PathGeneratorSpec& paths,
               const Overrides& overrides) {
  const int level = overrides.level ? *overrides.level : static_cast<int>(config.integer(key, paths.level));
  if (level < 1 || level > paths.level)
    throw ValidationError("level " + std::to_string(level) + " must lie in [1, " + std::to_string(paths.level) + "]");
  return level;
}

FixingSchedule read_schedule(const Config& config, const PathGeneratorSpec& paths) {
  const auto times = config.numbers("scheme.fixings", {0.0, paths.horizon});
  return FixingSchedule(times, PartitionHierarchy(paths.horizon, paths.level));
}

PayoffSpec read_payoff(const std::string& text, const Config& config, int dimension, int last_fixing) {
  auto payoff = PayoffSpec::parse(text, dimension, last_fixing);
  payoff.lipschitz_exponent = config.number("scheme.lipschitz_exponent", 0.0);
  payoff.lipschitz_constant = config.number("scheme.lipschitz_constant", 1.0);
  return payoff;
}

SchemeConfig read_scheme_config(const Config& config, const LocalVolModel& model, const Eigen::VectorXd& spot,
                                double horizon, int threads) {
  auto scheme = default_scheme_config(model, spot, horizon, static_cast<int>(config.integer("grid.nodes", 401)),
                                      static_cast<int>(config.integer("grid.time_steps", 200)));
  scheme.grid.rannacher = config.flag("grid.rannacher", true);
  scheme.grid.substeps = static_cast<int>(config.integer("grid.substeps", 0));
  scheme.fixing_nodes = static_cast<int>(config.integer("scheme.fixing_nodes", scheme.fixing_nodes));
  scheme.budget = config.number("scheme.budget", 1e5);
  scheme.memoize = config.flag("scheme.memoize", true);
  scheme.threads = threads;
  return scheme;
}

GridSpec read_grid(const Config& config, const LocalVolModel& model, const Eigen::VectorXd& spot, double duration) {
  const int nodes = static_cast<int>(config.integer("grid.nodes", 401));
  const int steps = static_cast<int>(config.integer("grid.time_steps", 200));
  GridSpec grid = centered_grid(model, spot, duration, nodes, steps, config.number("grid.width_sd", 6.0));
  if (config.has("grid.lower") || config.has("grid.upper")) {
    const auto lower = config.numbers("grid.lower");
    const auto upper = config.numbers("grid.upper");
    if (static_cast<int>(lower.size()) != model.dimension() || static_cast<int>(upper.size()) != model.dimension())
      throw ValidationError("grid.lower and grid.upper need one value per dimension");
    for (int i = 0; i < model.dimension(); ++i) {
      double lo = lower[i], hi = upper[i];
      if (model.flavor() == Flavor::positive) {
        if (!(lo > 0.0)) throw ValidationError("positive model grid bounds must be > 0");
        lo = std::log(lo);
        hi = std::log(hi);
      }
      grid.axes[i] = Axis{lo, hi, nodes};
    }
  }
  grid.rannacher = config.flag("grid.rannacher", true);
  grid.substeps = static_cast<int>(config.integer("grid.substeps", 0));
  auto boundary = [&](const std::string& key) {
    const std::string kind = config.text(key, "extrapolate");
    if (kind == "extrapolate") return Boundary{BoundaryKind::extrapolate, {}};
    if (kind == "zero_slope") return Boundary{BoundaryKind::zero_slope, {}};
    throw ParseError("config key '" + key + "' must be extrapolate or zero_slope");
  };
  grid.lower = boundary("grid.lower_boundary");
  grid.upper = boundary("grid.upper_boundary");
  return grid;
}

}  // namespace pathhedge::cli
