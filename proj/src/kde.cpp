#include <algorithm>
#include <cmath>
#include <numbers>

#include "idm/errors.hpp"
#include "idm/metrics.hpp"
#include "idm/rng.hpp"

namespace idm {
namespace {

std::int64_t next_pow2(double x) {
  std::int64_t p = 1;
  while (static_cast<double>(p) < x) p <<= 1;
  return p;
}

/// Quadrature nodes (embedded) and volume weights on the manifold.
struct Grid {
  PointMatrix nodes;
  Vector weights;
};

Grid manifold_grid(const ManifoldSpec& spec, double sigma) {
  Grid grid;
  if (spec.kind == ManifoldKind::Circle) {
    // Trapezoid in the angle; resolve the kernel with >= 16 nodes per sigma.
    const std::int64_t n = next_pow2(std::max(1024.0, 16.0 * 2.0 * std::numbers::pi / sigma));
    grid.nodes.resize(n, spec.ambient_dim);
    grid.weights = Vector::Constant(n, 2.0 * std::numbers::pi / static_cast<double>(n));
    for (std::int64_t k = 0; k < n; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      grid.nodes.row(k) = (spec.embedding * Eigen::Vector2d(std::cos(theta), std::sin(theta))).transpose();
    }
    return grid;
  }
  if (spec.kind == ManifoldKind::Sphere && spec.param == 2) {
    // Area element dz dphi: midpoint rule in z = cos(theta), trapezoid in phi.
    const auto nz = static_cast<std::int64_t>(std::ceil(std::max(64.0, 16.0 / sigma)));
    const std::int64_t nphi = 2 * nz;
    grid.nodes.resize(nz * nphi, spec.ambient_dim);
    grid.weights = Vector::Constant(nz * nphi, (2.0 / nz) * (2.0 * std::numbers::pi / nphi));
    for (std::int64_t i = 0; i < nz; ++i) {
      const double z = -1.0 + (static_cast<double>(i) + 0.5) * 2.0 / static_cast<double>(nz);
      const double r = std::sqrt(1.0 - z * z);
      for (std::int64_t k = 0; k < nphi; ++k) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nphi);
        grid.nodes.row(i * nphi + k) =
            (spec.embedding * Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), z)).transpose();
      }
    }
    return grid;
  }
  throw UnsupportedError("no quadrature grid for " + to_string(spec.kind) + " of parameter " +
                         std::to_string(spec.param));
}

}  // namespace

void KdeSpec::validate() const {
  if (!(sigma > 0.0)) throw ConfigurationError("KDE bandwidth must be positive");
  if (intrinsic_dim < 1) throw ConfigurationError("KDE intrinsic dimension must be at least 1");
}

double kde_density(const VectorRef& x, const PointsRef& data, const KdeSpec& spec) {
  spec.validate();
  if (data.rows() < 1) throw ConfigurationError("KDE of an empty data set");
  if (x.size() != data.cols()) throw ConfigurationError("query dimension does not match the data");
  Vector logits(data.rows());
  const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);
  for (Eigen::Index i = 0; i < data.rows(); ++i) logits(i) = -(data.row(i).transpose() - x).squaredNorm() * inv;
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  const double log_norm = -0.5 * spec.intrinsic_dim * std::log(2.0 * std::numbers::pi * spec.sigma * spec.sigma);
  return std::exp(log_norm + lse - std::log(static_cast<double>(data.rows())));
}

KdeSamplerComparison kde_vs_exp_sampler_check(const DataSet& data, const KdeSpec& spec,
                                              const std::function<double(const Vector&)>& f, Eigen::Index count,
                                              std::uint64_t seed) {
  spec.validate();
  if (!data.spec) throw ConfigurationError("KDE/sampler comparison needs the data's manifold");
  if (count < 2) throw ConfigurationError("Monte-Carlo side needs at least two draws");
  const ManifoldSpec& manifold = *data.spec;
  const Grid grid = manifold_grid(manifold, spec.sigma);

  KdeSamplerComparison out;
  for (Eigen::Index k = 0; k < grid.nodes.rows(); ++k) {
    const Vector node = grid.nodes.row(k).transpose();
    out.kde_integral += grid.weights(k) * kde_density(node, data.points, spec) * f(node);
  }

  double sum = 0.0;
  double sum_sq = 0.0;
  Vector g(manifold.native_dim);
  for (Eigen::Index j = 0; j < count; ++j) {
    RandomStream rng(seed, static_cast<std::uint64_t>(j));
    const auto u = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(data.size())));
    for (auto& v : g) v = rng.normal();
    const Vector base = data.points.row(u).transpose();
    const Vector tangent = tangent_projection(base, manifold.embed(g), manifold);
    const double value = f(exp_map(base, spec.sigma * tangent, manifold));
    sum += value;
    sum_sq += value * value;
  }
  const double n = static_cast<double>(count);
  out.sampler_mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * out.sampler_mean * out.sampler_mean) / (n - 1.0));
  out.sampler_std_error = std::sqrt(var / n);
  return out;
}

}  // namespace idm
