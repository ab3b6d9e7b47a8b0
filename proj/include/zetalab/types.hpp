#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <cstdint>

namespace zetalab {

using cplx = std::complex<double>;

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using IVec2 = Eigen::Matrix<std::int64_t, 2, 1>;
using IMat2 = Eigen::Matrix<std::int64_t, 2, 2>;

using Frequency = std::array<int, 2>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace zetalab
