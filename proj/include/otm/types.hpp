#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace otm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

using NodeIndex = std::uint32_t;

} // namespace otm
