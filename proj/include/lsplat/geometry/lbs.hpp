#pragma once

#include <vector>

#include "lsplat/gaussians/gaussian_set.hpp"
#include "lsplat/geometry/skeleton.hpp"

namespace lsplat {

/// Base skinning weights plus learnable per-Gaussian corrections.
/// Both matrices are joint-major: n_joints rows, one column per Gaussian.
struct SkinningWeights {
    MatX base;
    MatX delta;

    static SkinningWeights zero_delta(MatX base_weights) {
        SkinningWeights w;
        w.delta = MatX::Zero(base_weights.rows(), base_weights.cols());
        w.base = std::move(base_weights);
        return w;
    }

    int joint_count() const { return static_cast<int>(base.rows()); }
    int gaussian_count() const { return static_cast<int>(base.cols()); }

    /// Effective weights base + delta for one Gaussian; no renormalization.
    VecX effective(int gaussian_index) const;

    /// Base columns non-negative and summing to 1 (initialization contract).
    void validate_base() const;
};

/// Observation-space view of a GaussianSet after LBS. Scale, opacity and
/// radiance coefficients are unchanged by deformation and stay with the
/// canonical source set. rot_radiance is the raw blend T_rot * R used for
/// view-direction rotation; rot_cov composes the polar-decomposed rotation
/// of T_rot with R so that covariances remain PSD.
struct DeformedGaussians {
    const GaussianSet* source = nullptr;
    std::vector<Vec3> position;
    std::vector<Mat3> rot_radiance;
    std::vector<Mat3> rot_cov;

    int size() const { return static_cast<int>(position.size()); }

    /// Identity-deformation view of a canonical set.
    static DeformedGaussians observe(const GaussianSet& set);
};

/// Per-Gaussian forward state retained for deform_backward.
struct DeformCache {
    std::vector<Mat3> t_rot;
    std::vector<Vec3> t_trans;
    std::vector<Mat3> polar;
    std::vector<Mat3> polar_h;
};

DeformedGaussians deform_gaussians(const GaussianSet& set,
                                   const SkinningWeights& weights,
                                   const BoneTransforms& bones,
                                   DeformCache* cache = nullptr);

struct DeformGrads {
    std::vector<Vec3> position;   // d/d canonical mu
    std::vector<Vec4> rotation;   // d/d stored quaternion
    MatX delta;                   // d/d skinning delta, joint-major
};

DeformGrads deform_backward(const GaussianSet& set,
                            const SkinningWeights& weights,
                            const BoneTransforms& bones,
                            const DeformCache& cache,
                            const std::vector<Vec3>& g_position,
                            const std::vector<Mat3>& g_rot_radiance,
                            const std::vector<Mat3>& g_rot_cov);

}  // namespace lsplat
