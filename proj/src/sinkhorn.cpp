#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "idm/errors.hpp"
#include "idm/metrics.hpp"
#include "idm/parallel.hpp"
#include "ot/kernels.hpp"

namespace idm {
namespace {

using ArrayXd = Eigen::ArrayXd;
template <typename S>
using ArrayX = Eigen::Array<S, Eigen::Dynamic, 1>;

constexpr Eigen::Index kBlockRows = 64;
constexpr Eigen::Index kColumnGroups = 16;
constexpr std::size_t kAndersonDepth = 8;
// Up to this many cost entries the solver runs in double precision. In float
// the exponent (h_j - C_ij) / eps carries ~1e-4 absolute error at eps = 1e-3,
// which is a marginal floor above the default tolerance for small sets.
constexpr Eigen::Index kDoubleEntries = Eigen::Index{1} << 24;

struct Atoms {
  PointMatrix points;
  Vector weights;
};

/// Merges identical rows into weighted atoms, in lexicographic order.
Atoms merge_duplicates(const PointsRef& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index dim = x.cols();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto row_less = [&](Eigen::Index i, Eigen::Index j) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (x(i, k) < x(j, k)) return true;
      if (x(j, k) < x(i, k)) return false;
    }
    return false;
  };
  std::stable_sort(order.begin(), order.end(), row_less);

  std::vector<Eigen::Index> first;
  std::vector<double> count;
  for (Eigen::Index r = 0; r < n; ++r) {
    if (r > 0 && !row_less(order[r - 1], order[r])) {
      count.back() += 1.0;
    } else {
      first.push_back(order[r]);
      count.push_back(1.0);
    }
  }
  Atoms atoms;
  atoms.points.resize(static_cast<Eigen::Index>(first.size()), dim);
  atoms.weights.resize(static_cast<Eigen::Index>(first.size()));
  for (std::size_t a = 0; a < first.size(); ++a) {
    atoms.points.row(static_cast<Eigen::Index>(a)) = x.row(first[a]);
    atoms.weights(static_cast<Eigen::Index>(a)) = count[a] / static_cast<double>(n);
  }
  return atoms;
}

bool same_atoms(const Atoms& x, const Atoms& y) {
  return x.points.rows() == y.points.rows() && x.points == y.points && x.weights == y.weights;
}

/// Some fixed total order on atom sets, used to make the divergence exactly
/// symmetric in its arguments.
bool atoms_before(const Atoms& x, const Atoms& y) {
  if (x.points.rows() != y.points.rows()) return x.points.rows() < y.points.rows();
  const auto px = std::span(x.points.data(), static_cast<std::size_t>(x.points.size()));
  const auto py = std::span(y.points.data(), static_cast<std::size_t>(y.points.size()));
  if (!std::ranges::equal(px, py))
    return std::ranges::lexicographical_compare(px, py);
  const auto wx = std::span(x.weights.data(), static_cast<std::size_t>(x.weights.size()));
  const auto wy = std::span(y.weights.data(), static_cast<std::size_t>(y.weights.size()));
  return std::ranges::lexicographical_compare(wx, wy);
}

using ot::CostMatrix;

std::vector<double> epsilon_schedule(double max_cost, const SinkhornConfig& cfg) {
  std::vector<double> eps;
  for (double e = max_cost; e > cfg.epsilon; e *= cfg.scaling) eps.push_back(e);
  eps.push_back(cfg.epsilon);
  return eps;
}

/// Log row and column masses of the plan pi_ij = exp((F_i + G_j - C_ij) / eps),
/// where F = f + eps log a and G = g + eps log b.
struct Masses {
  Vector log_rows;
  Vector log_cols;  ///< empty for self problems
  double total = 0.0;
};

template <typename S>
struct Limits;
template <>
struct Limits<float> {
  static constexpr double lo = 1e-25;  // clamped terms (~1.6e-38 each) stay negligible
  static constexpr double hi = 1e30;   // one clamped term is ~6e37
};
template <>
struct Limits<double> {
  static constexpr double lo = 1e-280;
  static constexpr double hi = 1e300;
};

template <typename S>
bool in_range(double mass) {
  return std::isfinite(mass) && mass > Limits<S>::lo && mass < Limits<S>::hi;
}

/// One pass over the cost matrix; both marginals come from the same
/// exponentials. Row groups are fixed so sums do not depend on `workers`.
/// Sums outside the exponent range are recomputed with a max shift.
template <typename S>
Masses sweep(const CostMatrix<S>& c, const Vector& F, const Vector& G, double eps, bool columns, int workers) {
  const ArrayX<S> fs = F.cast<S>().array();
  const ArrayX<S> gs = G.cast<S>().array();
  const S inv = static_cast<S>(1.0 / eps);
  Vector rows(c.rows);
  ArrayXd cols;

  if (!columns) {
    parallel_for(c.rows, workers, [&](std::int64_t i) {
      rows(i) = ot::row_mass(c.row(i), fs(i), gs.data(), c.cols, inv);
    }, 64);
  } else {
    const Eigen::Index blocks = (c.rows + kBlockRows - 1) / kBlockRows;
    const Eigen::Index groups = std::min(kColumnGroups, blocks);
    std::vector<ArrayXd> partial(groups);
    parallel_for(groups, workers, [&](std::int64_t grp) {
      ArrayXd& acc = partial[grp];
      acc = ArrayXd::Zero(c.cols);
      ArrayX<S> block(c.cols);
      for (Eigen::Index b = grp * blocks / groups; b < (grp + 1) * blocks / groups; ++b) {
        block.setZero();
        const Eigen::Index r1 = std::min(c.rows, (b + 1) * kBlockRows);
        for (Eigen::Index i = b * kBlockRows; i < r1; ++i)
          rows(i) = ot::fused_row(c.row(i), fs(i), gs.data(), c.cols, inv, block.data());
        acc += block.template cast<double>();
      }
    }, 1);
    cols = partial[0];
    for (Eigen::Index grp = 1; grp < groups; ++grp) cols += partial[grp];
  }

  Masses out;
  out.log_rows.resize(c.rows);
  for (Eigen::Index i = 0; i < c.rows; ++i) {
    if (in_range<S>(rows(i))) {
      out.log_rows(i) = std::log(rows(i));
    } else {
      double m = 0.0;
      double s = 0.0;
      ot::row_logsumexp(c.row(i), gs.data(), c.cols, inv, m, s);
      out.log_rows(i) = F(i) / eps + m + std::log(s);
    }
  }
  if (columns) {
    out.log_cols.resize(c.cols);
    for (Eigen::Index j = 0; j < c.cols; ++j) {
      if (in_range<S>(cols(j))) {
        out.log_cols(j) = std::log(cols(j));
        continue;
      }
      double m = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < c.rows; ++i) m = std::max(m, (F(i) - double(c.row(i)[j])) / eps);
      double s = 0.0;
      for (Eigen::Index i = 0; i < c.rows; ++i) s += std::exp((F(i) - double(c.row(i)[j])) / eps - m);
      out.log_cols(j) = G(j) / eps + m + std::log(s);
    }
  }
  out.total = out.log_rows.array().exp().sum();
  return out;
}

/// max_i |exp(log_mass_i) - w_i|.
double marginal_violation(const Vector& log_mass, const Vector& weights) {
  const double v = (log_mass.array().exp() - weights.array()).abs().maxCoeff();
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

struct DualSolution {
  Vector f;  ///< potential on the row measure
  Vector g;  ///< potential on the column measure (== f when symmetric)
  double value = 0.0;  ///< dual objective <a,f> + <b,g> - eps (mass - 1)
  int iterations = 0;
  double violation = 0.0;
};

/// Entropic OT between weights a (rows of c) and b (columns). With
/// `symmetric`, c is a self-cost and a == b; only one potential is kept.
template <typename S>
DualSolution solve_entropic_ot(const CostMatrix<S>& c, const Vector& a, const Vector& b, bool symmetric,
                               const SinkhornConfig& cfg) {
  const Vector log_a = a.array().log();
  const Vector log_b = b.array().log();
  const std::vector<double> schedule = epsilon_schedule(c.max_cost, cfg);

  DualSolution sol;
  sol.f = Vector::Zero(c.rows);
  sol.g = Vector::Zero(c.cols);
  auto measure = [&](double eps) {
    const Vector F = sol.f + eps * log_a;
    const Vector G = symmetric ? F : Vector(sol.g + eps * log_b);
    return sweep(c, F, G, eps, !symmetric, cfg.workers);
  };
  // f <- f - theta eps log(r / a): theta = 1 is the Sinkhorn response
  // T(g), theta = 1/2 its average with the current potential.
  auto step = [&](const Masses& m, double eps, double theta) {
    sol.f -= theta * eps * (m.log_rows - log_a);
    if (symmetric) {
      sol.g = sol.f;
    } else {
      sol.g -= theta * eps * (m.log_cols - log_b);
    }
  };

  // Annealing: one simultaneous update per epsilon, averaged after the first.
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    step(measure(schedule[k]), schedule[k], k == 0 ? 1.0 : 0.5);
    ++sol.iterations;
  }

  // Final epsilon: full responses with the total-mass mode halved (it would
  // flip sign otherwise), Anderson-mixed over the last few iterates for the
  // two-sided problem. Self problems converge fast with the averaged step.
  const double eps = cfg.epsilon;
  const Eigen::Index nr = c.rows;
  const Eigen::Index dim = c.rows + c.cols;
  std::vector<Vector> hist_x;
  std::vector<Vector> hist_r;
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    const Masses m = measure(eps);
    sol.violation = marginal_violation(m.log_rows, a);
    if (!symmetric) sol.violation = std::max(sol.violation, marginal_violation(m.log_cols, b));
    if (sol.violation <= cfg.tol) {
      sol.value = a.dot(sol.f) + b.dot(sol.g) - eps * (m.total - 1.0);
      return sol;
    }
    if (sol.iterations >= cfg.max_iters) throw ConvergenceError("Sinkhorn did not converge", sol.violation);
    ++sol.iterations;
    if (symmetric) {
      step(m, eps, 0.5);
      continue;
    }

    const double half_log_mass = 0.5 * std::log(m.total);
    Vector x(dim);
    Vector res(dim);
    x << sol.f, sol.g;
    res << -eps * ((m.log_rows - log_a).array() - half_log_mass).matrix(),
        -eps * ((m.log_cols - log_b).array() - half_log_mass).matrix();
    if (sol.violation > 10.0 * best) {
      hist_x.clear();
      hist_r.clear();
    }
    best = std::min(best, sol.violation);
    hist_x.push_back(x);
    hist_r.push_back(res);
    if (hist_x.size() > kAndersonDepth + 1) {
      hist_x.erase(hist_x.begin());
      hist_r.erase(hist_r.begin());
    }
    Vector next = x + res;
    const auto k = static_cast<Eigen::Index>(hist_x.size()) - 1;
    if (k > 0) {
      Matrix dr(dim, k);
      Matrix dx(dim, k);
      for (Eigen::Index q = 0; q < k; ++q) {
        dr.col(q) = hist_r[q + 1] - hist_r[q];
        dx.col(q) = hist_x[q + 1] - hist_x[q];
      }
      const Vector gamma = dr.colPivHouseholderQr().solve(res);
      next -= (dx + dr) * gamma;
    }
    sol.f = next.head(nr);
    sol.g = next.tail(c.cols);
  }
}

template <typename S>
DualSolution solve_points(const Atoms& x, const Atoms& y, bool symmetric, const SinkhornConfig& cfg) {
  const CostMatrix<S> c = ot::euclidean_cost<S>(x.points, y.points, cfg.workers);
  return solve_entropic_ot(c, x.weights, y.weights, symmetric, cfg);
}

DualSolution solve_points(const Atoms& x, const Atoms& y, bool symmetric, const SinkhornConfig& cfg) {
  if (x.points.rows() * y.points.rows() <= kDoubleEntries) return solve_points<double>(x, y, symmetric, cfg);
  return solve_points<float>(x, y, symmetric, cfg);
}

}  // namespace

void SinkhornConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigurationError("Sinkhorn epsilon must be positive");
  if (!(scaling > 0.0 && scaling < 1.0)) throw ConfigurationError("Sinkhorn scaling must lie in (0, 1)");
  if (max_iters < 1) throw ConfigurationError("Sinkhorn max_iters must be positive");
  if (!(tol > 0.0)) throw ConfigurationError("Sinkhorn tolerance must be positive");
}

double entropic_self_cost(const PointsRef& b, const SinkhornConfig& cfg) {
  cfg.validate();
  if (b.rows() < 1) throw ConfigurationError("Sinkhorn divergence needs nonempty point sets");
  const Atoms atoms = merge_duplicates(b);
  return solve_points(atoms, atoms, true, cfg).value;
}

SinkhornReport sinkhorn_divergence_report(const PointsRef& a, const PointsRef& b, const SinkhornConfig& cfg,
                                          std::optional<double> ot_bb) {
  cfg.validate();
  if (a.rows() < 1 || b.rows() < 1) throw ConfigurationError("Sinkhorn divergence needs nonempty point sets");
  if (a.cols() != b.cols()) throw ConfigurationError("point sets live in different dimensions");

  Atoms atoms_a = merge_duplicates(a);
  Atoms atoms_b = merge_duplicates(b);
  const bool swapped = !ot_bb && atoms_before(atoms_b, atoms_a);
  if (swapped) std::swap(atoms_a, atoms_b);

  SinkhornReport report;
  const DualSolution aa = solve_points(atoms_a, atoms_a, true, cfg);
  // Coinciding measures: the cross problem is the self problem.
  const DualSolution ab = same_atoms(atoms_a, atoms_b) ? aa : solve_points(atoms_a, atoms_b, false, cfg);
  report.ot_ab = ab.value;
  report.ot_aa = aa.value;
  report.iterations = std::max(ab.iterations, aa.iterations);
  report.marginal_violation = std::max(ab.violation, aa.violation);
  if (ot_bb) {
    report.ot_bb = *ot_bb;
  } else {
    const DualSolution bb = same_atoms(atoms_a, atoms_b) ? aa : solve_points(atoms_b, atoms_b, true, cfg);
    report.ot_bb = bb.value;
    report.iterations = std::max(report.iterations, bb.iterations);
    report.marginal_violation = std::max(report.marginal_violation, bb.violation);
  }
  if (swapped) std::swap(report.ot_aa, report.ot_bb);

  const double raw = report.ot_ab - 0.5 * (report.ot_aa + report.ot_bb);
  report.clamped = raw < 0.0;
  report.divergence = std::max(0.0, raw);
  return report;
}

double sinkhorn_divergence(const PointsRef& a, const PointsRef& b, const SinkhornConfig& cfg) {
  return sinkhorn_divergence_report(a, b, cfg).divergence;
}

}  // namespace idm
