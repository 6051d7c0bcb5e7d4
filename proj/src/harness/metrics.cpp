#include "lsplat/harness/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lsplat {

double psnr(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw std::invalid_argument("psnr: size mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

double mask_iou(const std::vector<double>& alpha, const std::vector<double>& mask,
                double threshold) {
    if (alpha.size() != mask.size() || alpha.empty()) {
        throw std::invalid_argument("mask_iou: size mismatch");
    }
    long inter = 0, uni = 0;
    for (size_t i = 0; i < alpha.size(); ++i) {
        const bool p = alpha[i] >= threshold;
        const bool g = mask[i] >= 0.5;
        inter += p && g;
        uni += p || g;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace lsplat
