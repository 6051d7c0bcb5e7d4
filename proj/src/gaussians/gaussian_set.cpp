#include "lsplat/gaussians/gaussian_set.hpp"

#include <cstring>
#include <stdexcept>

namespace lsplat {

void GaussianSet::check_consistent() const {
    const size_t n = position.size();
    if (rotation.size() != n || log_scale.size() != n || opacity_logit.size() != n ||
        sh.size() != n * 3 * sh_basis_size())
        throw std::logic_error("GaussianSet: attribute arrays out of lockstep");
}

bool bitwise_equal(const GaussianSet& a, const GaussianSet& b) {
    if (a.entity != b.entity || a.size() != b.size() || a.sh_degree != b.sh_degree)
        return false;
    auto eq = [](const void* x, const void* y, size_t bytes) {
        return std::memcmp(x, y, bytes) == 0;
    };
    const size_t n = a.position.size();
    if (n == 0) return true;
    return eq(a.position.data(), b.position.data(), n * sizeof(Vec3)) &&
           eq(a.rotation.data(), b.rotation.data(), n * sizeof(Vec4)) &&
           eq(a.log_scale.data(), b.log_scale.data(), n * sizeof(Vec3)) &&
           eq(a.opacity_logit.data(), b.opacity_logit.data(), n * sizeof(double)) &&
           eq(a.sh.data(), b.sh.data(), a.sh.size() * sizeof(double));
}

}  // namespace lsplat
