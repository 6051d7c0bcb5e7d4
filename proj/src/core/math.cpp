#include "lsplat/core/math.hpp"

#include <stdexcept>

namespace lsplat {

static Mat3 rot_from_unit_quat(double w, double x, double y, double z) {
    Mat3 r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
         2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

Mat3 quat_to_rot(const Vec4& q) {
    const double n = q.norm();
    if (!(n > 0.0)) throw std::invalid_argument("quat_to_rot: zero quaternion");
    const Vec4 u = q / n;
    return rot_from_unit_quat(u[0], u[1], u[2], u[3]);
}

Vec4 quat_rot_backward(const Vec4& q, const Mat3& g) {
    const double n = q.norm();
    const Vec4 u = q / n;
    const double w = u[0], x = u[1], y = u[2], z = u[3];

    // dR/du_a contracted with g, for unit-quaternion components.
    Vec4 gu;
    gu[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) -
                 y * g(2, 0) + x * g(2, 1));
    gu[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) -
                 w * g(1, 2) + z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
    gu[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) +
                 z * g(1, 2) - w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
    gu[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) -
                 2 * z * g(1, 1) + y * g(1, 2) + x * g(2, 0) + y * g(2, 1));

    // chain through q -> q/|q|
    return (gu - u * u.dot(gu)) / n;
}

Mat3 rodrigues(const Vec3& aa) {
    const double theta = aa.norm();
    const Mat3 k = skew(aa);
    if (theta < 1e-8) {
        // second-order Taylor keeps this C1 around zero
        return Mat3::Identity() + k + 0.5 * k * k;
    }
    const Mat3 kn = k / theta;
    return Mat3::Identity() + std::sin(theta) * kn +
           (1.0 - std::cos(theta)) * kn * kn;
}

Mat3 polar_rotation(const Mat3& t, Mat3* h_out) {
    Eigen::JacobiSVD<Mat3> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 u = svd.matrixU();
    Mat3 v = svd.matrixV();
    Vec3 s = svd.singularValues();
    if ((u * v.transpose()).determinant() < 0) {
        u.col(2) *= -1;
        s[2] *= -1;
    }
    const Mat3 p = u * v.transpose();
    if (h_out) *h_out = v * s.asDiagonal() * v.transpose();
    return p;
}

Mat3 polar_rotation_jvp(const Mat3& p, const Mat3& h, const Mat3& dt) {
    // dp = p * skew(x) with (tr(h) I - h) x = vex(p^T dt - dt^T p)
    const Mat3 a = p.transpose() * dt - dt.transpose() * p;
    const Mat3 lhs = h.trace() * Mat3::Identity() - h;
    const Vec3 x = lhs.ldlt().solve(vex(a));
    return p * skew(x);
}

}  // namespace lsplat
