#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace lsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using MatX = Eigen::MatrixXd;
using VecX = Eigen::VectorXd;

inline Mat3 skew(const Vec3& a) {
    Mat3 m;
    m << 0, -a.z(), a.y(),
         a.z(), 0, -a.x(),
        -a.y(), a.x(), 0;
    return m;
}

inline Vec3 vex(const Mat3& a) {
    // inverse of skew() for (near-)antisymmetric input
    return Vec3(0.5 * (a(2, 1) - a(1, 2)),
                0.5 * (a(0, 2) - a(2, 0)),
                0.5 * (a(1, 0) - a(0, 1)));
}

/// Rotation matrix from a (not necessarily unit) quaternion, order (w,x,y,z).
Mat3 quat_to_rot(const Vec4& q);

/// Pullback of quat_to_rot: given dL/dR, returns dL/dq including the
/// normalization inside quat_to_rot.
Vec4 quat_rot_backward(const Vec4& q, const Mat3& g_rot);

/// Axis-angle (Rodrigues) to rotation matrix; stable near zero angle.
Mat3 rodrigues(const Vec3& axis_angle);

/// Rotation factor of the polar decomposition t = p * h (h symmetric PSD).
/// Requires det(t) > 0. Optionally returns h.
Mat3 polar_rotation(const Mat3& t, Mat3* h_out = nullptr);

/// Directional derivative of the polar rotation factor: given p, h from
/// polar_rotation(t) and a perturbation dt, returns dp.
Mat3 polar_rotation_jvp(const Mat3& p, const Mat3& h, const Mat3& dt);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double y) { return std::log(y / (1.0 - y)); }

}  // namespace lsplat
