#pragma once

#include <string>
#include <vector>

#include "lsplat/geometry/lbs.hpp"
#include "lsplat/splatting/camera.hpp"

namespace lsplat {

struct RenderSettings {
    int tile_size = 16;
    double alpha_clamp = 0.99;
    double alpha_min = 1.0 / 255.0;        // skip fainter contributions
    double transmittance_min = 1e-4;       // early exit
    double footprint_sigma = 3.0;          // screen extent and per-pixel cutoff
    double cov2d_blur = 0.3;               // px^2 diagonal floor
    int threads = 1;

    /// No cutoffs: keeps the forward map smooth for finite-difference checks.
    static RenderSettings gradcheck() {
        RenderSettings s;
        s.alpha_min = 0.0;
        s.transmittance_min = 0.0;
        s.footprint_sigma = 40.0;
        return s;
    }
};

struct RenderOutput {
    int width = 0, height = 0;
    std::vector<double> image;                       // H*W*3, linear [0,1]
    std::vector<std::string> entity_names;           // one per input set
    std::vector<std::vector<double>> entity_alpha;   // H*W each
    std::vector<double> total_alpha;                 // H*W
    std::vector<int> contributor_count;              // H*W
    std::vector<int> culled;                         // flat Gaussian indices behind near

    double& px(int x, int y, int ch) { return image[(static_cast<size_t>(y) * width + x) * 3 + ch]; }
    double px(int x, int y, int ch) const {
        return image[(static_cast<size_t>(y) * width + x) * 3 + ch];
    }
};

/// Forward state retained for render_backward. Opaque outside the splatting
/// module; valid only while the rendered sets are unchanged.
struct RenderCache {
    struct Splat {
        bool valid = false;
        int set = 0, local = 0;
        Vec2 uv = Vec2::Zero();
        double depth = 0.0;
        Mat2 conic = Mat2::Zero();
        Vec3 color = Vec3::Zero();      // post-clamp
        Vec3 color_raw = Vec3::Zero();  // pre-clamp
        double opacity = 0.0;
    };
    std::vector<Splat> splats;                  // flat over all sets
    std::vector<std::vector<int>> tile_lists;   // depth-ordered flat indices
    std::vector<double> final_t;                // per pixel
    std::vector<int> n_composited;              // per pixel
    Vec3 background = Vec3::Zero();
    RenderSettings settings;
    int tiles_x = 0, tiles_y = 0;
};

/// Tile-based front-to-back compositing of observation-space Gaussian sets.
/// Throws on invalid camera or non-finite input attributes (with index).
RenderOutput render(const std::vector<const DeformedGaussians*>& sets, const Camera& cam,
                    const Vec3& background, const RenderSettings& settings,
                    RenderCache* cache = nullptr);

/// Upstream gradients for render_backward. g_image is required; the alpha-map
/// gradients may be empty when unused.
struct RenderUpstream {
    std::vector<double> g_image;                     // H*W*3
    std::vector<std::vector<double>> g_entity_alpha; // per set, H*W (or empty)
    std::vector<double> g_total_alpha;               // H*W (or empty)
};

struct SplatGrads {
    std::vector<Vec3> g_position;
    std::vector<Mat3> g_rot_radiance;
    std::vector<Mat3> g_rot_cov;
    std::vector<Vec3> g_log_scale;
    std::vector<double> g_opacity_logit;
    std::vector<double> g_sh;            // source sh layout
    std::vector<double> g_uv_norm;       // densification statistic per Gaussian
};

/// Analytic backward pass via per-pixel back-to-front replay. Gradients of
/// culled or skipped Gaussians are exactly zero.
std::vector<SplatGrads> render_backward(const std::vector<const DeformedGaussians*>& sets,
                                        const Camera& cam, const RenderCache& cache,
                                        const RenderUpstream& upstream);

}  // namespace lsplat
