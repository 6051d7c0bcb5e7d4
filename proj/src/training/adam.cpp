#include "lsplat/training/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace lsplat {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr, const AdamConfig& cfg) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size()) {
        throw std::invalid_argument("adam_step: size mismatch");
    }
    ++state.t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

void adam_remap(AdamState& state, const std::vector<int>& source_index,
                const std::vector<std::uint8_t>& is_new, int stride) {
    if (source_index.size() != is_new.size()) {
        throw std::invalid_argument("adam_remap: mapping size mismatch");
    }
    const size_t n = source_index.size();
    std::vector<double> m(n * stride, 0.0), v(n * stride, 0.0);
    for (size_t i = 0; i < n; ++i) {
        if (is_new[i]) continue;
        const size_t src = static_cast<size_t>(source_index[i]) * stride;
        if (src + stride > state.m.size()) {
            throw std::invalid_argument("adam_remap: source index out of range");
        }
        for (int c = 0; c < stride; ++c) {
            m[i * stride + c] = state.m[src + c];
            v[i * stride + c] = state.v[src + c];
        }
    }
    state.m = std::move(m);
    state.v = std::move(v);
}

}  // namespace lsplat
