#include "lsplat/gaussians/sh.hpp"

#include <stdexcept>

namespace lsplat {

namespace {
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                          -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                          0.3731763325901154, -0.4570457994644658, 1.445305721320277,
                          -0.5900435899266435};
}  // namespace

void sh_basis(int degree, const Vec3& d, double* out) {
    if (degree < 0 || degree > kMaxShDegree)
        throw std::invalid_argument("sh_basis: degree out of range");
    const double x = d.x(), y = d.y(), z = d.z();
    out[0] = kC0;
    if (degree < 1) return;
    out[1] = -kC1 * y;
    out[2] = kC1 * z;
    out[3] = -kC1 * x;
    if (degree < 2) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    out[4] = kC2[0] * x * y;
    out[5] = kC2[1] * y * z;
    out[6] = kC2[2] * (2 * zz - xx - yy);
    out[7] = kC2[3] * x * z;
    out[8] = kC2[4] * (xx - yy);
    if (degree < 3) return;
    out[9] = kC3[0] * y * (3 * xx - yy);
    out[10] = kC3[1] * x * y * z;
    out[11] = kC3[2] * y * (4 * zz - xx - yy);
    out[12] = kC3[3] * z * (2 * zz - 3 * xx - 3 * yy);
    out[13] = kC3[4] * x * (4 * zz - xx - yy);
    out[14] = kC3[5] * z * (xx - yy);
    out[15] = kC3[6] * x * (xx - 3 * yy);
}

void sh_basis_with_grad(int degree, const Vec3& d, double* out, Vec3* grad) {
    sh_basis(degree, d, out);
    const double x = d.x(), y = d.y(), z = d.z();
    grad[0] = Vec3::Zero();
    if (degree < 1) return;
    grad[1] = Vec3(0, -kC1, 0);
    grad[2] = Vec3(0, 0, kC1);
    grad[3] = Vec3(-kC1, 0, 0);
    if (degree < 2) return;
    grad[4] = kC2[0] * Vec3(y, x, 0);
    grad[5] = kC2[1] * Vec3(0, z, y);
    grad[6] = kC2[2] * Vec3(-2 * x, -2 * y, 4 * z);
    grad[7] = kC2[3] * Vec3(z, 0, x);
    grad[8] = kC2[4] * Vec3(2 * x, -2 * y, 0);
    if (degree < 3) return;
    const double xx = x * x, yy = y * y, zz = z * z;
    grad[9] = kC3[0] * Vec3(6 * x * y, 3 * xx - 3 * yy, 0);
    grad[10] = kC3[1] * Vec3(y * z, x * z, x * y);
    grad[11] = kC3[2] * Vec3(-2 * x * y, 4 * zz - xx - 3 * yy, 8 * y * z);
    grad[12] = kC3[3] * Vec3(-6 * x * z, -6 * y * z, 6 * zz - 3 * xx - 3 * yy);
    grad[13] = kC3[4] * Vec3(4 * zz - 3 * xx - yy, -2 * x * y, 8 * x * z);
    grad[14] = kC3[5] * Vec3(2 * x * z, -2 * y * z, xx - yy);
    grad[15] = kC3[6] * Vec3(3 * xx - 3 * yy, -6 * x * y, 0);
}

Vec3 radiance(const double* coeffs, int degree, const Vec3& d, const Mat3& rot_radiance) {
    const Vec3 local = rot_radiance.transpose() * d;
    double basis[sh_basis_size(kMaxShDegree)];
    sh_basis(degree, local, basis);
    const int nb = sh_basis_size(degree);
    Vec3 rgb;
    for (int ch = 0; ch < 3; ++ch) {
        double v = 0.5;
        for (int b = 0; b < nb; ++b) v += coeffs[ch * nb + b] * basis[b];
        rgb[ch] = std::max(0.0, v);
    }
    return rgb;
}

}  // namespace lsplat
