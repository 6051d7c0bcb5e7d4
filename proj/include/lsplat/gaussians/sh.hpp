#pragma once

#include "lsplat/core/math.hpp"

namespace lsplat {

constexpr int kMaxShDegree = 3;

constexpr int sh_basis_size(int degree) { return (degree + 1) * (degree + 1); }

/// Real spherical-harmonic basis values at a unit direction, 3DGS ordering.
void sh_basis(int degree, const Vec3& dir, double* out);

/// Basis values plus their derivative w.r.t. the direction components
/// (polynomial extension off the sphere); grad is basis-major, 3 per entry.
void sh_basis_with_grad(int degree, const Vec3& dir, double* out, Vec3* grad);

/// Radiance of one Gaussian: evaluates the basis at R'^T d, dots with the
/// per-channel coefficients, adds the 0.5 offset and clamps at zero.
/// coeffs layout: [channel][basis]. d must be unit.
Vec3 radiance(const double* coeffs, int degree, const Vec3& d, const Mat3& rot_radiance);

}  // namespace lsplat
