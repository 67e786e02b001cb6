#include "idm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "idm/errors.hpp"

namespace idm {

void write_points_csv(const std::filesystem::path& path, const PointMatrix& points) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  for (Eigen::Index k = 0; k < points.cols(); ++k) out << (k ? ",x" : "x") << k;
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index k = 0; k < points.cols(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", points(i, k));
      if (k) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

PointMatrix read_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigurationError("empty CSV: " + path.string());
  const auto cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);

  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    Eigen::Index count = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw ConfigurationError("malformed number in " + path.string());
      values.push_back(v);
      ++count;
      p = next;
      if (p < end && *p == ',') ++p;
      else break;
    }
    if (count != cols) {
      throw ConfigurationError("row " + std::to_string(rows + 1) + " of " + path.string() + " has " +
                               std::to_string(count) + " columns, expected " + std::to_string(cols));
    }
    ++rows;
  }
  PointMatrix points(rows, cols);
  std::copy(values.begin(), values.end(), points.data());
  return points;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(path.string() + ": " + e.what());
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

}  // namespace idm
