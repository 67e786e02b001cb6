#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "idm/types.hpp"

namespace idm {

enum class ManifoldKind { Circle, Sphere, SpecialOrthogonal };

std::string to_string(ManifoldKind kind);
ManifoldKind manifold_kind_from_string(const std::string& name);

/// A known compact manifold in its native coordinates (R^2, R^{d+1} or
/// R^{m x m}) together with an isometric linear embedding into R^D.
///
/// Native SO(m) points are flattened row-major: Q(r, c) sits at r * m + c.
struct ManifoldSpec {
  ManifoldKind kind = ManifoldKind::Circle;
  int param = 1;          ///< d for Circle/Sphere, m for SO(m)
  int intrinsic_dim = 1;  ///< d
  int native_dim = 2;
  int ambient_dim = 2;    ///< D
  Matrix embedding;       ///< D x native_dim, orthonormal columns
  std::uint64_t embed_seed = 0;

  /// Builds and validates a spec; the embedding is drawn from `embed_seed`.
  static ManifoldSpec make(ManifoldKind kind, int param, int ambient_dim, std::uint64_t embed_seed);
  static ManifoldSpec circle(int ambient_dim, std::uint64_t embed_seed = 0);
  static ManifoldSpec sphere(int d, int ambient_dim, std::uint64_t embed_seed = 0);
  static ManifoldSpec special_orthogonal(int m, int ambient_dim, std::uint64_t embed_seed = 0);

  /// Throws ConfigurationError when any invariant is broken.
  void validate() const;

  /// Upper bound on the ambient diameter (2 for spheres, 2 sqrt(m) for SO(m)).
  double diameter() const;

  Vector embed(const VectorRef& native) const { return embedding * native; }
  Vector pull_back(const VectorRef& x) const { return embedding.transpose() * x; }
};

void to_json(nlohmann::json& j, const ManifoldSpec& spec);
void from_json(const nlohmann::json& j, ManifoldSpec& spec);

/// n points in R^D sampled from a manifold.
struct DataSet {
  PointMatrix points;
  std::optional<ManifoldSpec> spec;  ///< absent for data loaded without a sidecar
  std::uint64_t data_seed = 0;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }

  /// Checks every pulled-back row against the native manifold (tolerance 1e-10).
  void validate() const;
};

struct TangentDecomposition {
  Vector base_point;
  Vector tangent_part;
  Vector normal_part;
};

/// Random D x k matrix with orthonormal columns (Gaussian QR with the
/// signs of diag(R) absorbed into Q).
Matrix make_embedding(int native_dim, int ambient_dim, std::uint64_t seed);

/// One Haar-distributed element of SO(m), drawn from `stream_id` of `seed`.
Matrix haar_special_orthogonal(int m, std::uint64_t seed, std::uint64_t stream_id);

/// n i.i.d. uniform (Haar) points. Point i depends only on (seed, i), so
/// prefixes of larger samples coincide with smaller samples.
DataSet sample_manifold(const ManifoldSpec& spec, Eigen::Index n, std::uint64_t seed);

/// Nearest point of the manifold (native-coordinate projection after
/// dropping the component orthogonal to the embedding).
Vector project_to_manifold(const VectorRef& x, const ManifoldSpec& spec);
double distance_to_manifold(const VectorRef& x, const ManifoldSpec& spec);

/// Orthogonal projection of an ambient vector onto T_base M (embedded).
Vector tangent_projection(const VectorRef& base, const VectorRef& v, const ManifoldSpec& spec);

Vector exp_map(const VectorRef& base, const VectorRef& tangent, const ManifoldSpec& spec);

/// Intrinsic (geodesic) distance between two manifold points.
double geodesic_distance(const VectorRef& a, const VectorRef& b, const ManifoldSpec& spec);

/// Draws xi ~ N(0, I_D) from `seed` and splits it along T_base M and its complement.
TangentDecomposition split_gaussian_noise(const VectorRef& base, const ManifoldSpec& spec,
                                          std::uint64_t seed);

// CSV persistence: header "x0,...,x{D-1}", one point per row, plus a JSON
// sidecar (same path, extension .json) with the spec and seed. Loading
// tolerates a missing sidecar.
void save_dataset(const DataSet& data, const std::filesystem::path& csv_path);
DataSet load_dataset(const std::filesystem::path& csv_path);

}  // namespace idm
