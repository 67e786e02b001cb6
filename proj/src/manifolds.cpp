#include "idm/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "idm/errors.hpp"
#include "idm/io.hpp"
#include "idm/rng.hpp"

namespace idm {
namespace {

constexpr double kOnManifoldTol = 1e-10;

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng) {
  Matrix g(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) g(r, c) = rng.normal();
  return g;
}

/// Thin Q of a QR factorization with diag(R) made positive.
Matrix orthonormal_factor(const Matrix& g) {
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(g.rows(), g.cols());
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < g.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

Matrix as_square(const VectorRef& flat, int m) {
  Matrix q(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) q(r, c) = flat(r * m + c);
  return q;
}

Vector flatten(const Matrix& q) {
  const auto m = q.rows();
  Vector flat(m * m);
  for (Eigen::Index r = 0; r < m; ++r)
    for (Eigen::Index c = 0; c < m; ++c) flat(r * m + c) = q(r, c);
  return flat;
}

Matrix skew_part(const Matrix& a) { return 0.5 * (a - a.transpose()); }

/// Nearest native manifold point to native coordinates u.
Vector project_native(const Vector& u, const ManifoldSpec& spec) {
  const double norm = u.norm();
  if (!(norm >= 1e-12)) throw DegenerateProjectionError("projection of a point at the origin is undefined");
  if (spec.kind != ManifoldKind::SpecialOrthogonal) return u / norm;

  const int m = spec.param;
  const Matrix a = as_square(u, m);
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix u_mat = svd.matrixU();
  const Matrix& v_mat = svd.matrixV();
  const Vector& s = svd.singularValues();
  const bool flip = (u_mat * v_mat.transpose()).determinant() < 0.0;
  if (m >= 2 && (flip || s(m - 1) <= 1e-12 * s(0)) && s(m - 2) - s(m - 1) <= 1e-12 * s(0)) {
    throw DegenerateProjectionError("nearest rotation is not unique (repeated smallest singular value)");
  }
  if (flip) u_mat.col(m - 1) *= -1.0;
  return flatten(u_mat * v_mat.transpose());
}

Vector tangent_projection_native(const Vector& b, const Vector& v, const ManifoldSpec& spec) {
  if (spec.kind != ManifoldKind::SpecialOrthogonal) return v - b.dot(v) * b;
  const Matrix q = as_square(b, spec.param);
  return flatten(q * skew_part(q.transpose() * as_square(v, spec.param)));
}

int native_dim_of(ManifoldKind kind, int param) {
  switch (kind) {
    case ManifoldKind::Circle: return 2;
    case ManifoldKind::Sphere: return param + 1;
    case ManifoldKind::SpecialOrthogonal: return param * param;
  }
  return 0;
}

int intrinsic_dim_of(ManifoldKind kind, int param) {
  switch (kind) {
    case ManifoldKind::Circle: return 1;
    case ManifoldKind::Sphere: return param;
    case ManifoldKind::SpecialOrthogonal: return param * (param - 1) / 2;
  }
  return 0;
}

}  // namespace

std::string to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::Circle: return "circle";
    case ManifoldKind::Sphere: return "sphere";
    case ManifoldKind::SpecialOrthogonal: return "special_orthogonal";
  }
  return "unknown";
}

ManifoldKind manifold_kind_from_string(const std::string& name) {
  if (name == "circle") return ManifoldKind::Circle;
  if (name == "sphere") return ManifoldKind::Sphere;
  if (name == "special_orthogonal" || name == "so") return ManifoldKind::SpecialOrthogonal;
  throw ConfigurationError("unknown manifold kind '" + name + "'");
}

ManifoldSpec ManifoldSpec::make(ManifoldKind kind, int param, int ambient_dim, std::uint64_t embed_seed) {
  if (kind == ManifoldKind::Circle && param != 1)
    throw ConfigurationError("circle has intrinsic dimension 1, got " + std::to_string(param));
  if (param < 1) throw ConfigurationError("manifold parameter must be positive");
  ManifoldSpec spec;
  spec.kind = kind;
  spec.param = param;
  spec.intrinsic_dim = intrinsic_dim_of(kind, param);
  spec.native_dim = native_dim_of(kind, param);
  spec.ambient_dim = ambient_dim;
  spec.embed_seed = embed_seed;
  if (ambient_dim < spec.native_dim) {
    throw ConfigurationError("ambient dimension " + std::to_string(ambient_dim) + " below native dimension " +
                             std::to_string(spec.native_dim));
  }
  spec.embedding = make_embedding(spec.native_dim, ambient_dim, embed_seed);
  spec.validate();
  return spec;
}

ManifoldSpec ManifoldSpec::circle(int ambient_dim, std::uint64_t embed_seed) {
  return make(ManifoldKind::Circle, 1, ambient_dim, embed_seed);
}

ManifoldSpec ManifoldSpec::sphere(int d, int ambient_dim, std::uint64_t embed_seed) {
  return make(ManifoldKind::Sphere, d, ambient_dim, embed_seed);
}

ManifoldSpec ManifoldSpec::special_orthogonal(int m, int ambient_dim, std::uint64_t embed_seed) {
  return make(ManifoldKind::SpecialOrthogonal, m, ambient_dim, embed_seed);
}

void ManifoldSpec::validate() const {
  if (param < 1) throw ConfigurationError("manifold parameter must be positive");
  if (intrinsic_dim != intrinsic_dim_of(kind, param))
    throw ConfigurationError("intrinsic dimension does not match the manifold kind");
  if (native_dim != native_dim_of(kind, param))
    throw ConfigurationError("native dimension does not match the manifold kind");
  if (ambient_dim < native_dim) throw ConfigurationError("ambient dimension below native dimension");
  if (embedding.rows() != ambient_dim || embedding.cols() != native_dim)
    throw ConfigurationError("embedding has the wrong shape");
  const Matrix gram = embedding.transpose() * embedding;
  if ((gram - Matrix::Identity(native_dim, native_dim)).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigurationError("embedding columns are not orthonormal");
}

double ManifoldSpec::diameter() const {
  return kind == ManifoldKind::SpecialOrthogonal ? 2.0 * std::sqrt(static_cast<double>(param)) : 2.0;
}

void to_json(nlohmann::json& j, const ManifoldSpec& spec) {
  j = nlohmann::json{{"kind", to_string(spec.kind)},
                     {"m_or_d", spec.param},
                     {"D", spec.ambient_dim},
                     {"embed_seed", spec.embed_seed}};
}

void from_json(const nlohmann::json& j, ManifoldSpec& spec) {
  try {
    spec = ManifoldSpec::make(manifold_kind_from_string(j.at("kind").get<std::string>()), j.at("m_or_d").get<int>(),
                              j.at("D").get<int>(), j.value<std::uint64_t>("embed_seed", 0));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigurationError(std::string("manifold spec: ") + e.what());
  }
}

void DataSet::validate() const {
  if (!spec) return;
  if (points.cols() != spec->ambient_dim) throw ConfigurationError("data dimension does not match the spec");
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Vector x = points.row(i).transpose();
    const Vector u = spec->pull_back(x);
    double err = (x - spec->embed(u)).norm();
    if (spec->kind == ManifoldKind::SpecialOrthogonal) {
      const Matrix q = as_square(u, spec->param);
      err = std::max(err, (q.transpose() * q - Matrix::Identity(spec->param, spec->param)).cwiseAbs().maxCoeff());
      err = std::max(err, std::abs(q.determinant() - 1.0));
    } else {
      err = std::max(err, std::abs(u.norm() - 1.0));
    }
    if (err > kOnManifoldTol) throw ConfigurationError("data row " + std::to_string(i) + " is off the manifold");
  }
}

Matrix make_embedding(int native_dim, int ambient_dim, std::uint64_t seed) {
  if (native_dim < 1) throw ConfigurationError("native dimension must be positive");
  if (ambient_dim < native_dim) throw ConfigurationError("ambient dimension below native dimension");
  RandomStream rng(derive_seed(seed, "embedding"), 0);
  return orthonormal_factor(gaussian_matrix(ambient_dim, native_dim, rng));
}

Matrix haar_special_orthogonal(int m, std::uint64_t seed, std::uint64_t stream_id) {
  RandomStream rng(seed, stream_id);
  Matrix q = orthonormal_factor(gaussian_matrix(m, m, rng));
  if (q.determinant() < 0.0) q.col(0) *= -1.0;
  return q;
}

DataSet sample_manifold(const ManifoldSpec& spec, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw ConfigurationError("sample count must be at least 1");
  spec.validate();
  DataSet data;
  data.spec = spec;
  data.data_seed = seed;
  data.points.resize(n, spec.ambient_dim);
  Vector u(spec.native_dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (spec.kind == ManifoldKind::SpecialOrthogonal) {
      u = flatten(haar_special_orthogonal(spec.param, seed, static_cast<std::uint64_t>(i)));
    } else {
      RandomStream rng(seed, static_cast<std::uint64_t>(i));
      double norm = 0.0;
      do {
        for (int k = 0; k < spec.native_dim; ++k) u(k) = rng.normal();
        norm = u.norm();
      } while (norm == 0.0);
      u /= norm;
    }
    data.points.row(i) = (spec.embedding * u).transpose();
  }
  return data;
}

Vector project_to_manifold(const VectorRef& x, const ManifoldSpec& spec) {
  return spec.embed(project_native(spec.pull_back(x), spec));
}

double distance_to_manifold(const VectorRef& x, const ManifoldSpec& spec) {
  const Vector u = spec.pull_back(x);
  const Vector p = project_native(u, spec);
  const double off_subspace = (x - spec.embed(u)).squaredNorm();
  return std::sqrt(off_subspace + (u - p).squaredNorm());
}

Vector tangent_projection(const VectorRef& base, const VectorRef& v, const ManifoldSpec& spec) {
  return spec.embed(tangent_projection_native(spec.pull_back(base), spec.pull_back(v), spec));
}

Vector exp_map(const VectorRef& base, const VectorRef& tangent, const ManifoldSpec& spec) {
  const Vector b = spec.pull_back(base);
  const Vector v = spec.pull_back(tangent);
  const double off = (tangent - spec.embed(v)).squaredNorm() + (v - tangent_projection_native(b, v, spec)).squaredNorm();
  const double tol = 1e-8 * std::max(1.0, tangent.norm());
  if (std::sqrt(off) > tol) throw InvalidTangentError("vector is not tangent to the manifold at the base point");

  if (spec.kind == ManifoldKind::SpecialOrthogonal) {
    const int m = spec.param;
    const Matrix q = as_square(b, m);
    const Matrix omega = skew_part(q.transpose() * as_square(v, m));
    return spec.embed(flatten(q * omega.exp()));
  }
  const double len = v.norm();
  if (len == 0.0) return spec.embed(b);
  return spec.embed(std::cos(len) * b + (std::sin(len) / len) * v);
}

double geodesic_distance(const VectorRef& a, const VectorRef& b, const ManifoldSpec& spec) {
  const Vector ua = spec.pull_back(a);
  const Vector ub = spec.pull_back(b);
  if (spec.kind == ManifoldKind::SpecialOrthogonal) {
    const int m = spec.param;
    const Matrix rel = as_square(ua, m).transpose() * as_square(ub, m);
    return skew_part(rel.log()).norm();
  }
  const double c = ua.dot(ub);
  return std::atan2((ub - c * ua).norm(), c);
}

TangentDecomposition split_gaussian_noise(const VectorRef& base, const ManifoldSpec& spec, std::uint64_t seed) {
  if (distance_to_manifold(base, spec) > 1e-8) throw ConfigurationError("base point is not on the manifold");
  RandomStream rng(seed, 0);
  Vector xi(spec.ambient_dim);
  for (auto& v : xi) v = rng.normal();
  TangentDecomposition out;
  out.base_point = base;
  out.tangent_part = tangent_projection(base, xi, spec);
  out.normal_part = xi - out.tangent_part;
  return out;
}

void save_dataset(const DataSet& data, const std::filesystem::path& csv_path) {
  write_points_csv(csv_path, data.points);
  nlohmann::json side{{"n", data.size()}, {"D", data.dim()}, {"data_seed", data.data_seed}};
  if (data.spec) side["spec"] = *data.spec;
  write_json(sidecar_path(csv_path), side);
}

DataSet load_dataset(const std::filesystem::path& csv_path) {
  DataSet data;
  data.points = read_points_csv(csv_path);
  const auto side = sidecar_path(csv_path);
  if (std::filesystem::exists(side)) {
    const auto j = read_json(side);
    data.data_seed = j.value<std::uint64_t>("data_seed", 0);
    if (j.contains("spec")) data.spec = j.at("spec").get<ManifoldSpec>();
    data.validate();
  }
  return data;
}

}  // namespace idm
