#pragma once

#include <string>
#include <vector>

#include "lsplat/core/math.hpp"

namespace lsplat {

/// Canonical-space Gaussian attributes, one entry per Gaussian.
/// Rotations are stored as (w,x,y,z) quaternions, scales in log-meters and
/// opacity as a logit; activations happen where the values are consumed.
/// Radiance coefficients are real spherical harmonics, laid out
/// [gaussian][channel][basis].
struct GaussianSet {
    std::string entity = "entity0";
    std::vector<Vec3> position;
    std::vector<Vec4> rotation;
    std::vector<Vec3> log_scale;
    std::vector<double> opacity_logit;
    int sh_degree = 1;
    std::vector<double> sh;

    int size() const { return static_cast<int>(position.size()); }
    int sh_basis_size() const { return (sh_degree + 1) * (sh_degree + 1); }

    double* sh_at(int i) { return sh.data() + static_cast<size_t>(i) * 3 * sh_basis_size(); }
    const double* sh_at(int i) const {
        return sh.data() + static_cast<size_t>(i) * 3 * sh_basis_size();
    }

    Vec3 scale(int i) const { return log_scale[i].array().exp(); }
    double opacity(int i) const { return sigmoid(opacity_logit[i]); }

    void resize(int n) {
        position.resize(n, Vec3::Zero());
        rotation.resize(n, Vec4(1, 0, 0, 0));
        log_scale.resize(n, Vec3::Zero());
        opacity_logit.resize(n, 0.0);
        sh.resize(static_cast<size_t>(n) * 3 * sh_basis_size(), 0.0);
    }

    /// Renormalizes stored quaternions to unit length (optimizer post-step).
    void renormalize_rotations() {
        for (auto& q : rotation) q /= q.norm();
    }

    void check_consistent() const;
};

bool bitwise_equal(const GaussianSet& a, const GaussianSet& b);

}  // namespace lsplat
