#pragma once

#include <vector>

#include "lsplat/core/math.hpp"

namespace lsplat {

/// Brute-force k-nearest-neighbor graph over a point set. Distance ties are
/// broken by index for determinism. k is clamped to the available points.
std::vector<std::vector<int>> knn_graph(const std::vector<Vec3>& points, int k,
                                        bool include_self);

}  // namespace lsplat
