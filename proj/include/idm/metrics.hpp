#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "idm/manifolds.hpp"
#include "idm/types.hpp"

namespace idm {

enum class CostKind { Euclidean };

struct SinkhornConfig {
  double epsilon = 1e-3;
  double scaling = 0.9;  ///< epsilon annealing factor
  int max_iters = 10000;
  double tol = 1e-6;     ///< L-inf marginal violation at the final epsilon
  CostKind cost = CostKind::Euclidean;
  int workers = 1;

  void validate() const;
};

struct SinkhornReport {
  double divergence = 0.0;  ///< OT(a,b) - OT(a,a)/2 - OT(b,b)/2, clamped at 0
  // entropic dual objectives at cfg.epsilon
  double ot_ab = 0.0;
  double ot_aa = 0.0;
  double ot_bb = 0.0;
  int iterations = 0;        ///< largest iteration count over the three problems
  double marginal_violation = 0.0;
  bool clamped = false;      ///< raw value was a (float-noise) negative
};

/// Debiased Sinkhorn divergence between the uniform empirical measures on the
/// rows of `a` and `b`, with cost |x - y| (a W1 proxy). Log-domain symmetric
/// Sinkhorn with epsilon-scaling from the largest pairwise cost down to
/// cfg.epsilon, then iterations at cfg.epsilon until the marginal violation
/// drops below cfg.tol. Repeated rows are merged into weighted atoms, which
/// leaves the value unchanged.
double sinkhorn_divergence(const PointsRef& a, const PointsRef& b, const SinkhornConfig& cfg = {});

/// `ot_bb`, when given, is reused instead of solving the b-b problem again
/// (see entropic_self_cost); a truth sample shared by several methods.
SinkhornReport sinkhorn_divergence_report(const PointsRef& a, const PointsRef& b, const SinkhornConfig& cfg = {},
                                          std::optional<double> ot_bb = std::nullopt);

/// OT_eps(b, b), the self term of the divergence.
double entropic_self_cost(const PointsRef& b, const SinkhornConfig& cfg = {});

/// Exact W1 between two equal-size uniform point sets (size <= 512) through
/// the linear assignment problem on the Euclidean cost.
double exact_w1_small(const PointsRef& a, const PointsRef& b);

/// Minimum-cost perfect matching; returns the column assigned to each row.
std::vector<int> solve_assignment(const Matrix& cost);

struct KdeSpec {
  double sigma = 0.1;
  int intrinsic_dim = 1;  ///< kernel normalizer uses d, distances are ambient

  void validate() const;
};

/// (1/n) Σ (2π σ^2)^{-d/2} exp(-|x - X_i|^2 / (2σ^2)).
double kde_density(const VectorRef& x, const PointsRef& data, const KdeSpec& spec);

struct KdeSamplerComparison {
  double kde_integral = 0.0;       ///< ∫ p̂_KDE f dV by quadrature on the manifold
  double sampler_mean = 0.0;       ///< mean of f(exp_{X_U}(σ ξ_T))
  double sampler_std_error = 0.0;
};

/// Compares the manifold integral of p̂_KDE f with the exponential-map sampler.
/// Quadrature grids exist for the circle and the 2-sphere only.
KdeSamplerComparison kde_vs_exp_sampler_check(const DataSet& data, const KdeSpec& spec,
                                              const std::function<double(const Vector&)>& f, Eigen::Index count,
                                              std::uint64_t seed);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// OLS of log y on log x.
LogLogFit fit_loglog_slope(std::span<const std::pair<double, double>> pairs);

}  // namespace idm
