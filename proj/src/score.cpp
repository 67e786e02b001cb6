#include "idm/score.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "idm/errors.hpp"

namespace idm {
namespace {

Vector squared_distances(const VectorRef& z, const PointsRef& points, double scale = 1.0) {
  if (z.size() != points.cols()) throw ConfigurationError("query dimension does not match the data");
  Vector d2(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    d2(i) = (scale * points.row(i).transpose() - z).squaredNorm();
  return d2;
}

WeightVector weights_from_logits(Vector logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  WeightVector w;
  w.log_weights = logits.array() - lse;
  w.weights = w.log_weights.array().exp();
  return w;
}

}  // namespace

SchedulePoint schedule_at(double t) {
  if (!(t >= 0.0)) throw DomainError("diffusion time must be nonnegative");
  SchedulePoint s;
  s.t = t;
  s.alpha = std::exp(-t);
  if (t < 1e-8) {
    s.sigma = std::sqrt(2.0 * t) * (1.0 - 0.5 * t);
    s.sigma2 = 2.0 * t * (1.0 - t);
  } else {
    s.sigma2 = -std::expm1(-2.0 * t);
    s.sigma = std::sqrt(s.sigma2);
  }
  return s;
}

WeightVector softmax_weights(const VectorRef& z, double sigma, const PointsRef& centers) {
  if (!(sigma > 0.0)) throw DomainError("bandwidth must be positive");
  if (centers.rows() < 1) throw ConfigurationError("softmax over an empty set of centers");
  return weights_from_logits(-squared_distances(z, centers) / (2.0 * sigma * sigma));
}

double log_density_hat(const VectorRef& x, double t, const PointsRef& data) {
  if (data.rows() < 1) throw ConfigurationError("empty data set");
  const SchedulePoint s = schedule_at(t);
  if (t == 0.0) {
    const bool atom = squared_distances(x, data).minCoeff() == 0.0;
    return atom ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }
  const Vector logits = -squared_distances(x, data, s.alpha) / (2.0 * s.sigma2);
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  const double dim = static_cast<double>(data.cols());
  return -0.5 * dim * std::log(2.0 * std::numbers::pi * s.sigma2) + lse - std::log(static_cast<double>(data.rows()));
}

Vector empirical_score(const VectorRef& x, double t, const PointsRef& data) {
  if (!(t > 0.0)) throw DomainError("empirical score needs t > 0");
  if (data.rows() < 1) throw ConfigurationError("empty data set");
  const SchedulePoint s = schedule_at(t);
  const WeightVector w = weights_from_logits(-squared_distances(x, data, s.alpha) / (2.0 * s.sigma2));
  const Vector mean = data.transpose() * w.weights;
  return (s.alpha * mean - x) / s.sigma2;
}

Vector nw_estimate(const VectorRef& z, double sigma, const PointsRef& data) {
  return data.transpose() * softmax_weights(z, sigma, data).weights;
}

BandwidthPlan bandwidth_plan(double c0, int intrinsic_dim, long long n) {
  if (!(c0 > 0.0)) throw ConfigurationError("C0 must be positive");
  if (intrinsic_dim < 1) throw ConfigurationError("intrinsic dimension must be at least 1");
  if (n < 2) throw ConfigurationError("bandwidth plan needs n >= 2");
  BandwidthPlan plan;
  plan.c0 = c0;
  plan.intrinsic_dim = intrinsic_dim;
  plan.n = n;
  plan.sigma_prime = c0 * std::pow(static_cast<double>(n), -1.0 / (intrinsic_dim + 4));
  plan.h2 = 0.5 * std::log1p(plan.sigma_prime * plan.sigma_prime);
  plan.h = std::sqrt(plan.h2);
  plan.large_bandwidth = plan.sigma_prime >= 1.0;
  return plan;
}

Vector population_score_circle(const VectorRef& x, double t, int quad_points) {
  if (quad_points < 64) throw ConfigurationError("population score quadrature needs at least 64 nodes");
  if (x.size() != 2) throw ConfigurationError("population score on the circle lives in R^2");
  if (!(t > 0.0)) throw DomainError("population score needs t > 0");
  const SchedulePoint s = schedule_at(t);

  // Trapezoid nodes carry equal weight, so the quadrature of the Gaussian
  // mixture and its gradient reduces to a softmax over the nodes.
  Vector logits(quad_points);
  PointMatrix nodes(quad_points, 2);
  for (int k = 0; k < quad_points; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / quad_points;
    nodes(k, 0) = s.alpha * std::cos(theta);
    nodes(k, 1) = s.alpha * std::sin(theta);
    logits(k) = -((nodes.row(k).transpose() - x).squaredNorm()) / (2.0 * s.sigma2);
  }
  const double m = logits.maxCoeff();
  const Vector w = (logits.array() - m).exp();
  Vector grad = Vector::Zero(2);
  for (int k = 0; k < quad_points; ++k) grad += w(k) * (nodes.row(k).transpose() - x);
  return grad / (w.sum() * s.sigma2);
}

}  // namespace idm
