#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace lsplat {

/// First/second-moment buffers for one parameter array. The step counter is
/// per-array so bias correction survives densification remapping.
struct AdamState {
    std::vector<double> m, v;
    std::int64_t t = 0;

    void resize(size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
    }
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

/// One bias-corrected Adam update in place; params and grads must match the
/// state size.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const AdamConfig& cfg);

/// Rebuilds moment buffers after densification: surviving and cloned/split
/// Gaussians inherit the parent moments, newly created ones start at zero.
/// `stride` is the number of scalars per Gaussian in this array.
void adam_remap(AdamState& state, const std::vector<int>& source_index,
                const std::vector<std::uint8_t>& is_new, int stride);

}  // namespace lsplat
