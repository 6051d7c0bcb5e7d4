#pragma once

#include <vector>

namespace lsplat {

/// Peak signal-to-noise ratio in dB over [0,1] images; +inf for identical
/// inputs.
double psnr(const std::vector<double>& a, const std::vector<double>& b);

/// Intersection-over-union of a thresholded alpha map against a binary mask;
/// two empty masks count as 1.
double mask_iou(const std::vector<double>& alpha, const std::vector<double>& mask,
                double threshold = 0.5);

}  // namespace lsplat
