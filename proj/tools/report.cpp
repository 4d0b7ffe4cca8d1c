#include "report.hpp"

#include <cmath>
#include <cstdio>

namespace pathhedge::cli {

std::string csv_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

Report::Report(std::string command, const Config& config, const Overrides& overrides, std::filesystem::path out)
    : command_(std::move(command)), config_(config), overrides_(overrides), out_(std::move(out)) {
  std::error_code ec;
  std::filesystem::create_directories(out_, ec);
  if (ec) throw IoError("cannot create output directory " + out_.string() + ": " + ec.message());
}

std::ofstream Report::open(const std::string& name) {
  std::ofstream stream(out_ / name, std::ios::binary);
  if (!stream) throw IoError("cannot write " + (out_ / name).string());
  outputs_.push_back(name);
  return stream;
}

void Report::close(std::ofstream& stream, const std::string& name) {
  stream.close();
  if (!stream) throw IoError("failed writing " + (out_ / name).string());
}

void Report::check(const std::string& name, double value, const std::string& relation, double limit) {
  bool ok = false;
  if (relation == "<=") ok = value <= limit;
  else if (relation == "<") ok = value < limit;
  else if (relation == ">=") ok = value >= limit;
  else if (relation == ">") ok = value > limit;
  else if (relation == "==") ok = value == limit;
  checks_.push_back(Check{name, value, relation, limit, ok});
}

void Report::result(const std::string& name, nlohmann::json value) { results_[name] = std::move(value); }

void Report::seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }

bool Report::passed() const {
  for (const auto& c : checks_)
    if (!c.passed) return false;
  return true;
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void Report::write_manifest(int exit_code, const std::string& error) {
  nlohmann::json m;
  m["command"] = command_;
  nlohmann::json echo = nlohmann::json::object();
  for (const auto& [section, node] : config_.tree()) {
    if (node.empty()) {
      echo[section] = node.data();
      continue;
    }
    nlohmann::json keys = nlohmann::json::object();
    for (const auto& [key, value] : node) keys[key] = value.data();
    echo[section] = keys;
  }
  m["config"] = echo;
  m["overrides"] = {{"threads", overrides_.threads},
                    {"seed_override", overrides_.seed ? nlohmann::json(*overrides_.seed) : nlohmann::json(nullptr)},
                    {"level", overrides_.level ? nlohmann::json(*overrides_.level) : nlohmann::json(nullptr)}};
  m["seeds"] = seeds_;
  nlohmann::json checks = nlohmann::json::array();
  nlohmann::json tolerances = nlohmann::json::object();
  for (const auto& c : checks_) {
    checks.push_back({{"name", c.name},
                      {"value", finite_or_null(c.value)},
                      {"relation", c.relation},
                      {"limit", finite_or_null(c.limit)},
                      {"passed", c.passed}});
    tolerances[c.name] = finite_or_null(c.limit);
  }
  m["tolerances"] = tolerances;
  m["checks"] = checks;
  m["results"] = results_;
  m["outputs"] = outputs_;
  m["passed"] = error.empty() && passed();
  m["exit_code"] = exit_code;
  if (!error.empty()) m["error"] = error;
  std::ofstream out(out_ / "manifest.json", std::ios::binary);
  out << m.dump(2) << '\n';
  if (!out) throw IoError("cannot write " + (out_ / "manifest.json").string());
}

}  // namespace pathhedge::cli
