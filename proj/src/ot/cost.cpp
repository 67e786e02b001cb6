// Compiled with -ffp-contract=off: c(x, y) and c(y, x) must be bit-identical
// whether a lane runs vectorized or in a scalar tail, so no fused multiply-add.

#include <algorithm>

#include "idm/parallel.hpp"
#include "ot/kernels.hpp"

namespace idm::ot {

template <typename S>
CostMatrix<S> euclidean_cost(const PointMatrix& x, const PointMatrix& y, int workers) {
  CostMatrix<S> c;
  c.rows = x.rows();
  c.cols = y.rows();
  c.data.resize(static_cast<std::size_t>(c.rows * c.cols));
  // Coordinates of y laid out k-major so the inner loop runs over y's points.
  const PointMatrix yt = y.transpose();
  const Eigen::Index dim = x.cols();
  parallel_for(c.rows, workers, [&](std::int64_t i) {
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(c.cols);
    for (Eigen::Index k = 0; k < dim; ++k) {
      const double xik = x(i, k);
      double* a = acc.data();
      const double* yk = yt.row(k).data();
      for (Eigen::Index j = 0; j < c.cols; ++j) {
        const double d = xik - yk[j];
        a[j] += d * d;
      }
    }
    S* out = c.data.data() + i * c.cols;
    for (Eigen::Index j = 0; j < c.cols; ++j) out[j] = static_cast<S>(std::sqrt(acc[j]));
  }, 8);
  if (!c.data.empty()) c.max_cost = static_cast<double>(*std::max_element(c.data.begin(), c.data.end()));
  return c;
}

template CostMatrix<float> euclidean_cost<float>(const PointMatrix&, const PointMatrix&, int);
template CostMatrix<double> euclidean_cost<double>(const PointMatrix&, const PointMatrix&, int);

}  // namespace idm::ot
