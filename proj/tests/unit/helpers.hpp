#pragma once

#include <filesystem>
#include <string>

#include "idm/rng.hpp"
#include "idm/types.hpp"

namespace testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("idm_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline idm::PointMatrix gaussian_points(Eigen::Index n, Eigen::Index dim, std::uint64_t seed, double scale = 1.0) {
  idm::PointMatrix x(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    idm::RandomStream rng(seed, static_cast<std::uint64_t>(i));
    for (Eigen::Index k = 0; k < dim; ++k) x(i, k) = scale * rng.normal();
  }
  return x;
}

inline idm::Vector gaussian_vector(Eigen::Index dim, std::uint64_t seed, std::uint64_t stream, double scale = 1.0) {
  idm::RandomStream rng(seed, stream);
  idm::Vector v(dim);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

}  // namespace testing
