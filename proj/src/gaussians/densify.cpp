#include "lsplat/gaussians/densify.hpp"

#include <random>
#include <stdexcept>

namespace lsplat {

DensifyResult densify_and_prune(const GaussianSet& set, const SkinningWeights& weights,
                                const GradAccumulator& acc, const DensifyConfig& cfg) {
    const int n = set.size();
    if (static_cast<int>(acc.norm_sum.size()) != n)
        throw std::invalid_argument("densify_and_prune: accumulator size mismatch");
    if (weights.gaussian_count() != n)
        throw std::invalid_argument("densify_and_prune: weight matrix size mismatch");

    const int nj = weights.joint_count();
    const int stride = 3 * set.sh_basis_size();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    DensifyResult out;
    out.set.entity = set.entity;
    out.set.sh_degree = set.sh_degree;
    std::vector<VecX> base_cols, delta_cols;

    auto append = [&](int parent, bool fresh, const Vec3& pos, const Vec3& log_scale) {
        out.set.position.push_back(pos);
        out.set.rotation.push_back(set.rotation[parent]);
        out.set.log_scale.push_back(log_scale);
        out.set.opacity_logit.push_back(set.opacity_logit[parent]);
        const double* f = set.sh.data() + static_cast<size_t>(parent) * stride;
        out.set.sh.insert(out.set.sh.end(), f, f + stride);
        base_cols.push_back(weights.base.col(parent));
        delta_cols.push_back(weights.delta.col(parent));
        out.source_index.push_back(parent);
        out.is_new.push_back(fresh ? 1 : 0);
    };

    for (int i = 0; i < n; ++i) {
        const Vec3 s = set.scale(i);
        // prune: invisible, or degenerately large (free in a solo render but
        // an opaque curtain in the composite)
        if (set.opacity(i) < cfg.opacity_threshold || s.maxCoeff() > cfg.max_scale) continue;
        const bool dense = acc.mean(i) > cfg.grad_threshold;
        if (!dense) {
            append(i, false, set.position[i], set.log_scale[i]);
        } else if (s.maxCoeff() <= cfg.size_threshold) {
            // clone: keep the original plus a duplicate
            append(i, false, set.position[i], set.log_scale[i]);
            append(i, true, set.position[i], set.log_scale[i]);
        } else {
            // split: two children sampled from the parent distribution
            const Mat3 r = quat_to_rot(set.rotation[i]);
            const Vec3 child_ls = set.log_scale[i].array() - std::log(cfg.split_factor);
            for (int c = 0; c < 2; ++c) {
                Vec3 z(normal(rng), normal(rng), normal(rng));
                const double zn = z.norm();
                if (zn > 3.0) z *= 3.0 / zn;  // stay inside 3 sigma
                append(i, true, set.position[i] + r * s.cwiseProduct(z), child_ls);
            }
        }
    }

    if (out.set.size() == 0)
        throw std::runtime_error("densify_and_prune: all Gaussians pruned");

    out.weights.base.resize(nj, out.set.size());
    out.weights.delta.resize(nj, out.set.size());
    for (int i = 0; i < out.set.size(); ++i) {
        out.weights.base.col(i) = base_cols[i];
        out.weights.delta.col(i) = delta_cols[i];
    }
    return out;
}

}  // namespace lsplat
