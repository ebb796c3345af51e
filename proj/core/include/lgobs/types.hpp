#pragma once

#include <Eigen/Core>

namespace lgobs {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Vec18 = Eigen::Matrix<double, 18, 1>;
using Vec36 = Eigen::Matrix<double, 36, 1>;

}  // namespace lgobs
