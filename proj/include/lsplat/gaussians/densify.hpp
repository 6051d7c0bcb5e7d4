#pragma once

#include <cstdint>
#include <vector>

#include "lsplat/gaussians/gaussian_set.hpp"
#include "lsplat/geometry/lbs.hpp"

namespace lsplat {

struct DensifyConfig {
    double grad_threshold = 2e-4;      // mean 2D positional gradient norm
    double opacity_threshold = 0.005;  // activated opacity prune cutoff
    double split_factor = 1.6;         // child scale divisor
    double size_threshold = 0.01;      // max activated scale: clone below, split above
    double max_scale = 10.0;           // prune Gaussians larger than this (world units)
    std::uint64_t seed = 0;
};

/// Running mean of per-Gaussian screen-space positional gradient norms over
/// one densify interval.
struct GradAccumulator {
    std::vector<double> norm_sum;
    std::vector<int> count;

    void resize(int n) {
        norm_sum.assign(n, 0.0);
        count.assign(n, 0);
    }
    void add(int i, double norm) {
        norm_sum[i] += norm;
        ++count[i];
    }
    double mean(int i) const { return count[i] > 0 ? norm_sum[i] / count[i] : 0.0; }
};

struct DensifyResult {
    GaussianSet set;
    SkinningWeights weights;
    std::vector<int> source_index;   // parent index in the input set
    std::vector<std::uint8_t> is_new;  // cloned/split children (zeroed moments)
};

/// 3DGS-style adaptive control: prunes low-opacity Gaussians, clones small
/// high-gradient ones and splits large ones into two children with scale
/// s / split_factor sampled inside the parent ellipsoid (seeded, clamped to
/// 3 sigma). Skinning weight columns are inherited from the parent.
/// Throws if every Gaussian would be pruned.
DensifyResult densify_and_prune(const GaussianSet& set, const SkinningWeights& weights,
                                const GradAccumulator& acc, const DensifyConfig& cfg);

}  // namespace lsplat
