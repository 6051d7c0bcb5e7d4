#include "lsplat/gaussians/covariance.hpp"

#include <stdexcept>

namespace lsplat {

Mat3 covariance(const Vec4& q, const Vec3& scale) {
    if (std::abs(q.norm() - 1.0) > 1e-6)
        throw std::invalid_argument("covariance: quaternion not unit length");
    if (scale.minCoeff() <= 0.0)
        throw std::invalid_argument("covariance: scales must be positive");
    const Mat3 r = quat_to_rot(q);
    return r * scale.array().square().matrix().asDiagonal() * r.transpose();
}

Mat3 covariance_from_rotation(const Mat3& rot, const Vec3& log_scale) {
    const Vec3 s2 = (2.0 * log_scale).array().exp();
    return rot * s2.asDiagonal() * rot.transpose();
}

void covariance_backward(const Mat3& rot, const Vec3& log_scale, const Mat3& g_cov,
                         Mat3& g_rot, Vec3& g_log_scale) {
    const Vec3 s2 = (2.0 * log_scale).array().exp();
    const Mat3 g_sym = 0.5 * (g_cov + g_cov.transpose());
    g_rot = 2.0 * g_sym * rot * s2.asDiagonal();
    const Vec3 g_diag = (rot.transpose() * g_sym * rot).diagonal();
    g_log_scale = 2.0 * g_diag.cwiseProduct(s2);
}

}  // namespace lsplat
