#include "lsplat/losses/knn.hpp"

#include <algorithm>
#include <stdexcept>

namespace lsplat {

std::vector<std::vector<int>> knn_graph(const std::vector<Vec3>& points, int k,
                                        bool include_self) {
    if (k < 1) throw std::invalid_argument("knn_graph: k must be >= 1");
    const int n = static_cast<int>(points.size());
    std::vector<std::vector<int>> graph(n);
    std::vector<std::pair<double, int>> dist;
    for (int i = 0; i < n; ++i) {
        dist.clear();
        for (int j = 0; j < n; ++j) {
            if (!include_self && j == i) continue;
            dist.emplace_back((points[i] - points[j]).squaredNorm(), j);
        }
        const int kk = std::min<int>(k, static_cast<int>(dist.size()));
        std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
        graph[i].reserve(kk);
        for (int m = 0; m < kk; ++m) graph[i].push_back(dist[m].second);
    }
    return graph;
}

}  // namespace lsplat
