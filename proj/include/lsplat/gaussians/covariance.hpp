#pragma once

#include "lsplat/core/math.hpp"

namespace lsplat {

/// Sigma = R S S^T R^T from a unit quaternion and activated (positive)
/// scales. Throws if the quaternion norm is off unit by more than 1e-6.
Mat3 covariance(const Vec4& unit_quat, const Vec3& scale);

/// Covariance from an explicit rotation factor and log-scales.
Mat3 covariance_from_rotation(const Mat3& rot, const Vec3& log_scale);

/// Pullback: dL/dSigma -> dL/dR and dL/dlog_scale.
void covariance_backward(const Mat3& rot, const Vec3& log_scale, const Mat3& g_cov,
                         Mat3& g_rot, Vec3& g_log_scale);

}  // namespace lsplat
