#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pathhedge/pathcalc.hpp"

namespace pathhedge {

void write_path_csv(std::ostream& out, const SampledPath& path) {
  out << 't';
  for (int i = 0; i < path.dimension(); ++i) out << ",S" << (i + 1);
  out << '\n';
  const auto& hierarchy = path.hierarchy();
  char buffer[32];
  for (Eigen::Index k = 0; k < path.values().rows(); ++k) {
    std::snprintf(buffer, sizeof buffer, "%.17g", hierarchy.time(path.level(), k));
    out << buffer;
    for (int i = 0; i < path.dimension(); ++i) {
      std::snprintf(buffer, sizeof buffer, "%.17g", path.values()(k, i));
      out << ',' << buffer;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing path CSV");
}

SampledPath read_path_csv(std::istream& in, Flavor flavor) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("path CSV is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "t") throw ParseError("path CSV header must be t,S1,...,Sd");
  for (std::size_t i = 1; i < header.size(); ++i)
    if (header[i] != "S" + std::to_string(i)) throw ParseError("path CSV header must be t,S1,...,Sd");
  const auto d = static_cast<Eigen::Index>(header.size() - 1);

  std::vector<double> times;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError("path CSV: malformed number '" + cell + "'");
      }
    }
    if (static_cast<Eigen::Index>(row.size()) != d + 1) throw ParseError("path CSV: wrong column count");
    times.push_back(row[0]);
    values.insert(values.end(), row.begin() + 1, row.end());
  }
  const auto rows = static_cast<std::int64_t>(times.size());
  int level = 0;
  while ((std::int64_t{1} << level) + 1 < rows) ++level;
  if ((std::int64_t{1} << level) + 1 != rows || level < 1)
    throw ParseError("path CSV must have 2^L + 1 rows for some L >= 1");
  if (times.front() != 0.0) throw ParseError("path CSV must start at t = 0");
  const PartitionHierarchy hierarchy(times.back(), level);
  for (std::int64_t k = 0; k < rows; ++k)
    if (std::abs(times[k] - hierarchy.time(level, k)) > 1e-12 * hierarchy.horizon())
      throw ParseError("path CSV times are not the uniform dyadic grid");
  Eigen::MatrixXd m = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      values.data(), rows, d);
  return SampledPath(hierarchy, std::move(m), flavor);
}

}  // namespace pathhedge
