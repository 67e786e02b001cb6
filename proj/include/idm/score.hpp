#pragma once

#include "idm/manifolds.hpp"
#include "idm/types.hpp"

namespace idm {

/// OU forward-process coefficients at time t: x_t = alpha x_0 + sigma xi.
struct SchedulePoint {
  double t = 0.0;
  double alpha = 1.0;   ///< e^{-t}
  double sigma = 0.0;   ///< sqrt(1 - e^{-2t})
  double sigma2 = 0.0;  ///< 1 - e^{-2t}, without cancellation
};

SchedulePoint schedule_at(double t);

struct WeightVector {
  Vector log_weights;
  Vector weights;
};

/// Gaussian softmax weights w_i ∝ exp(-|z - c_i|^2 / (2 sigma^2)), normalized
/// with a max-shifted log-sum-exp.
WeightVector softmax_weights(const VectorRef& z, double sigma, const PointsRef& centers);

/// log of the empirical noised density p̂_t at x (log-sum-exp form).
/// At t == 0 the density is atomic: returns +inf on a data point, -inf elsewhere.
double log_density_hat(const VectorRef& x, double t, const PointsRef& data);

/// ∇ log p̂_t(x) = -(x - alpha_t Σ w_i X_i) / sigma_t^2.
Vector empirical_score(const VectorRef& x, double t, const PointsRef& data);

/// Nadaraya–Watson estimate Σ w_i X_i with weights from softmax_weights(z, sigma, X).
Vector nw_estimate(const VectorRef& z, double sigma, const PointsRef& data);

/// Bandwidth chosen so that sigma_{h^2} / alpha_{h^2} = C0 n^{-1/(d+4)}.
struct BandwidthPlan {
  double c0 = 0.8;
  int intrinsic_dim = 1;
  long long n = 2;
  double sigma_prime = 0.0;  ///< C0 n^{-1/(d+4)}
  double h2 = 0.0;           ///< 1/2 log(1 + sigma_prime^2)
  double h = 0.0;
  /// Set when sigma_prime >= 1, i.e. n is small for this C0.
  bool large_bandwidth = false;
};

BandwidthPlan bandwidth_plan(double c0, int intrinsic_dim, long long n);

/// ∇ log p_t(x) for the uniform law on the unit circle in R^2, by trapezoidal
/// quadrature over the angle with closed-form Gaussian gradients per node.
/// Test oracle; refuses fewer than 64 nodes.
Vector population_score_circle(const VectorRef& x, double t, int quad_points);

}  // namespace idm
