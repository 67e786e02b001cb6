#pragma once

#include <Eigen/Dense>

namespace idm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// One point per row; rows are contiguous so a point is a cheap view.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorRef = Eigen::Ref<const Vector>;
using PointsRef = Eigen::Ref<const PointMatrix>;

}  // namespace idm
