#pragma once

#include <filesystem>

#include <json.hpp>

#include "idm/types.hpp"

namespace idm {

/// Writes one point per row with header "x0,...,x{D-1}" and 17 significant
/// digits, so a reload reproduces every double exactly.
void write_points_csv(const std::filesystem::path& path, const PointMatrix& points);
PointMatrix read_points_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

/// "<dir>/<stem>.json" next to a CSV file.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

}  // namespace idm
