#include "lsplat/geometry/lbs.hpp"

#include <stdexcept>
#include <string>

namespace lsplat {

VecX SkinningWeights::effective(int i) const {
    if (i < 0 || i >= gaussian_count())
        throw std::out_of_range("SkinningWeights::effective: index out of range");
    return base.col(i) + delta.col(i);
}

void SkinningWeights::validate_base() const {
    for (int i = 0; i < gaussian_count(); ++i) {
        if (base.col(i).minCoeff() < 0.0 || std::abs(base.col(i).sum() - 1.0) > 1e-9)
            throw std::invalid_argument(
                "skinning base weights must be a partition of unity (column " +
                std::to_string(i) + ")");
    }
}

DeformedGaussians DeformedGaussians::observe(const GaussianSet& set) {
    DeformedGaussians d;
    d.source = &set;
    d.position = set.position;
    d.rot_radiance.resize(set.size());
    d.rot_cov.resize(set.size());
    for (int i = 0; i < set.size(); ++i) {
        d.rot_radiance[i] = quat_to_rot(set.rotation[i]);
        d.rot_cov[i] = d.rot_radiance[i];
    }
    return d;
}

DeformedGaussians deform_gaussians(const GaussianSet& set,
                                   const SkinningWeights& weights,
                                   const BoneTransforms& bones,
                                   DeformCache* cache) {
    const int n = set.size();
    const int nj = weights.joint_count();
    if (weights.gaussian_count() != n)
        throw std::invalid_argument("deform_gaussians: weight matrix width != set size");
    if (bones.size() != nj)
        throw std::invalid_argument("deform_gaussians: bone/weight joint count mismatch");

    DeformedGaussians out;
    out.source = &set;
    out.position.resize(n);
    out.rot_radiance.resize(n);
    out.rot_cov.resize(n);
    if (cache) {
        cache->t_rot.resize(n);
        cache->t_trans.resize(n);
        cache->polar.resize(n);
        cache->polar_h.resize(n);
    }

    for (int i = 0; i < n; ++i) {
        Mat3 t_rot = Mat3::Zero();
        Vec3 t_trans = Vec3::Zero();
        for (int k = 0; k < nj; ++k) {
            const double w = weights.base(k, i) + weights.delta(k, i);
            if (w == 0.0) continue;
            t_rot.noalias() += w * bones.rot[k];
            t_trans.noalias() += w * bones.trans[k];
        }
        if (!t_rot.allFinite() || !t_trans.allFinite())
            throw std::runtime_error("deform_gaussians: non-finite blended transform at Gaussian " +
                                     std::to_string(i));
        const Mat3 r_can = quat_to_rot(set.rotation[i]);
        Mat3 h;
        const Mat3 p = polar_rotation(t_rot, &h);
        out.position[i] = t_rot * set.position[i] + t_trans;
        out.rot_radiance[i] = t_rot * r_can;
        out.rot_cov[i] = p * r_can;
        if (cache) {
            cache->t_rot[i] = t_rot;
            cache->t_trans[i] = t_trans;
            cache->polar[i] = p;
            cache->polar_h[i] = h;
        }
    }
    return out;
}

DeformGrads deform_backward(const GaussianSet& set,
                            const SkinningWeights& weights,
                            const BoneTransforms& bones,
                            const DeformCache& cache,
                            const std::vector<Vec3>& g_position,
                            const std::vector<Mat3>& g_rot_radiance,
                            const std::vector<Mat3>& g_rot_cov) {
    const int n = set.size();
    const int nj = weights.joint_count();
    if (static_cast<int>(cache.t_rot.size()) != n)
        throw std::logic_error("deform_backward: forward cache missing or stale");

    DeformGrads g;
    g.position.assign(n, Vec3::Zero());
    g.rotation.assign(n, Vec4::Zero());
    g.delta = MatX::Zero(nj, n);

    for (int i = 0; i < n; ++i) {
        const Mat3& t_rot = cache.t_rot[i];
        const Mat3& p = cache.polar[i];
        const Mat3& h = cache.polar_h[i];
        const Mat3 r_can = quat_to_rot(set.rotation[i]);

        g.position[i] = t_rot.transpose() * g_position[i];

        const Mat3 g_rcan = t_rot.transpose() * g_rot_radiance[i] +
                            p.transpose() * g_rot_cov[i];
        g.rotation[i] = quat_rot_backward(set.rotation[i], g_rcan);

        // Delta-weight gradients: T is linear in the weights, so perturb one
        // bone at a time and push the polar factor through its JVP.
        const Mat3 g_rad_rt = g_rot_radiance[i] * r_can.transpose();
        const Mat3 g_cov_rt = g_rot_cov[i] * r_can.transpose();
        for (int k = 0; k < nj; ++k) {
            const Mat3& br = bones.rot[k];
            double gk = g_position[i].dot(br * set.position[i] + bones.trans[k]);
            gk += g_rad_rt.cwiseProduct(br).sum();
            const Mat3 dp = polar_rotation_jvp(p, h, br);
            gk += g_cov_rt.cwiseProduct(dp).sum();
            g.delta(k, i) = gk;
        }
    }
    return g;
}

}  // namespace lsplat
