#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "lsplat/gaussians/sh.hpp"
#include "lsplat/geometry/lbs.hpp"
#include "lsplat/splatting/camera.hpp"
#include "lsplat/splatting/render.hpp"

namespace lsplat::testing {

/// Central finite difference of a scalar functional at x.
inline double fd(const std::function<double(double)>& f, double x, double h = 1e-4) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// Relative error with an absolute floor for near-zero references.
inline double rel_err(double got, double want, double floor = 1e-7) {
    return std::abs(got - want) / std::max(std::abs(want), floor);
}

/// All-pixels-all-Gaussians compositing, written independently of the tile
/// renderer: global depth sort, front-to-back, same alpha clamps.
inline std::vector<double> oracle_render(const std::vector<const DeformedGaussians*>& sets,
                                         const Camera& cam, const Vec3& background,
                                         const RenderSettings& st) {
    struct OSplat {
        double depth;
        Vec2 uv;
        Mat2 conic;
        Vec3 color;
        double opacity;
    };
    std::vector<OSplat> splats;
    for (const auto* dgp : sets) {
        const auto& dg = *dgp;
        const auto& src = *dg.source;
        for (int i = 0; i < dg.size(); ++i) {
            const Projection pr = project(dg.position[i], cam);
            if (!pr.visible) continue;
            Mat3 cov3d;
            {
                const Vec3 s = src.log_scale[i].array().exp();
                const Mat3 r = dg.rot_cov[i];
                cov3d = r * s.asDiagonal() * s.asDiagonal() * r.transpose();
            }
            const Mat2 cov2d = project_covariance(cov3d, dg.position[i], cam, st.cov2d_blur);
            const double det = cov2d.determinant();
            if (!(det > 0.0)) continue;
            OSplat o;
            o.depth = pr.depth;
            o.uv = pr.uv;
            o.conic << cov2d(1, 1) / det, -cov2d(0, 1) / det, -cov2d(1, 0) / det,
                cov2d(0, 0) / det;
            const Vec3 dir = (dg.position[i] - cam.center()).normalized();
            o.color = radiance(src.sh_at(i), src.sh_degree, dir, dg.rot_radiance[i]);
            o.opacity = sigmoid(src.opacity_logit[i]);
            splats.push_back(o);
        }
    }
    std::stable_sort(splats.begin(), splats.end(),
                     [](const OSplat& a, const OSplat& b) { return a.depth < b.depth; });

    const double cutoff = -0.5 * st.footprint_sigma * st.footprint_sigma;
    std::vector<double> image(static_cast<size_t>(cam.width) * cam.height * 3);
    for (int py = 0; py < cam.height; ++py) {
        for (int px = 0; px < cam.width; ++px) {
            double trans = 1.0;
            Vec3 acc = Vec3::Zero();
            const double fx = px + 0.5, fy = py + 0.5;
            for (const auto& o : splats) {
                const double dx = o.uv.x() - fx, dy = o.uv.y() - fy;
                const double power = -0.5 * (o.conic(0, 0) * dx * dx + o.conic(1, 1) * dy * dy) -
                                     o.conic(0, 1) * dx * dy;
                if (power < cutoff) continue;
                const double alpha = std::min(st.alpha_clamp, o.opacity * std::exp(power));
                if (alpha < st.alpha_min || alpha <= 0.0) continue;
                acc += alpha * trans * o.color;
                trans *= 1.0 - alpha;
                if (trans < st.transmittance_min) break;
            }
            acc += trans * background;
            const size_t pix = (static_cast<size_t>(py) * cam.width + px) * 3;
            image[pix] = acc[0];
            image[pix + 1] = acc[1];
            image[pix + 2] = acc[2];
        }
    }
    return image;
}

/// Seeded cloud of Gaussians roughly in front of the default camera.
inline GaussianSet random_set(int n, std::uint64_t seed, int sh_degree = 1,
                              const std::string& entity = "body") {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GaussianSet set;
    set.entity = entity;
    set.sh_degree = sh_degree;
    set.resize(n);
    for (int i = 0; i < n; ++i) {
        set.position[i] = Vec3(0.6 * u(rng), 0.6 * u(rng), 0.3 * u(rng));
        Vec4 q(1.0 + 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng));
        set.rotation[i] = q / q.norm();
        set.log_scale[i] = Vec3(-2.2 + 0.4 * u(rng), -2.2 + 0.4 * u(rng), -2.2 + 0.4 * u(rng));
        set.opacity_logit[i] = 1.2 * u(rng);
        double* sh = set.sh_at(i);
        for (int k = 0; k < 3 * set.sh_basis_size(); ++k) sh[k] = 0.25 * u(rng);
    }
    return set;
}

inline Camera test_camera(int width = 24, int height = 24) {
    return Camera::look_at(Vec3(0, 0, -2.5), Vec3(0, 0, 0), Vec3(0, 1, 0), 1.1 * width,
                           1.1 * height, width, height);
}

/// Chain skeleton along +y used across the geometry tests.
inline Skeleton test_skeleton(int joints) {
    Skeleton sk;
    sk.parent.push_back(-1);
    sk.rest_local.push_back(Mat4::Identity());
    for (int j = 1; j < joints; ++j) {
        sk.parent.push_back(j - 1);
        Mat4 m = Mat4::Identity();
        m(1, 3) = 0.4;
        sk.rest_local.push_back(m);
    }
    return sk;
}

inline SkinningWeights random_weights(int joints, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MatX base(joints, n);
    for (int i = 0; i < n; ++i) {
        double sum = 0;
        for (int j = 0; j < joints; ++j) {
            base(j, i) = u(rng) + 1e-3;
            sum += base(j, i);
        }
        base.col(i) /= sum;
    }
    SkinningWeights w = SkinningWeights::zero_delta(base);
    std::uniform_real_distribution<double> d(-0.05, 0.05);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < joints; ++j) w.delta(j, i) = d(rng);
    return w;
}

inline Pose random_pose(int joints, std::uint64_t seed, double amplitude = 0.5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Pose pose = Pose::rest(joints);
    pose.root_translation = Vec3(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
    for (int j = 0; j < joints; ++j)
        pose.joint_rotations[j] = amplitude * Vec3(u(rng), u(rng), u(rng));
    return pose;
}

}  // namespace lsplat::testing
