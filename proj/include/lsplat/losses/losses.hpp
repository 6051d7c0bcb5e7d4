#pragma once

#include <cstdint>
#include <vector>

#include "lsplat/gaussians/gaussian_set.hpp"
#include "lsplat/geometry/lbs.hpp"

namespace lsplat {

/// Loss weighting and structural parameters. The lambda defaults are
/// declared project defaults, all config-overridable.
struct LossWeights {
    double lambda_mask = 0.1;     // lambda_2
    double lambda_s3im = 0.2;     // lambda_3
    double lambda_greg = 0.01;    // lambda_4
    double lambda_iso = 0.1;      // lambda_5
    double lambda_col = 1.0;      // lambda_6
    double lambda_mu = 1.0;       // iso position term
    double lambda_sigma = 0.1;    // iso covariance term
    double lambda_w = 0.01;       // skinning-weight regularizer
    double lambda_s = 0.01;       // max-scale regularizer
    double epsilon = 0.0;         // collision margin, meters
    int s3im_patch = 64;
    int s3im_kernel = 11;
    int s3im_stride = 1;
    int s3im_reps = 10;
    int knn_k = 5;

    void validate() const;
};

/// Mean absolute error over pixels and channels; subgradient 0 at ties.
/// grad (optional) is w.r.t. `rendered`.
double recon_l1(const std::vector<double>& rendered, const std::vector<double>& target,
                std::vector<double>* grad = nullptr);

/// Mean L1 between per-entity accumulated alpha and its binary mask,
/// averaged over entities. grads (optional) mirror the alpha maps.
/// ignore (optional) holds one map per entity; pixels with an ignore value
/// >= 0.5 are excluded from that entity's mean (used where entity layers
/// overlap and occlusion makes the alpha target ambiguous).
double mask_loss(const std::vector<std::vector<double>>& entity_alpha,
                 const std::vector<const std::vector<double>*>& masks,
                 std::vector<std::vector<double>>* grads = nullptr,
                 const std::vector<const std::vector<double>*>* ignore = nullptr);

/// Windowed SSIM, Gaussian window sigma = 1.5, C1 = 0.01^2, C2 = 0.03^2,
/// valid windows at the given stride, averaged over windows and channels.
/// Images are interleaved RGB. grad_a (optional) is w.r.t. image a.
double ssim(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
            int kernel, int stride = 1, std::vector<double>* grad_a = nullptr);

/// Mean of (1 - SSIM) over seeded random patch pairs cropped identically
/// from both images.
double s3im(const std::vector<double>& rendered, const std::vector<double>& target, int width,
            int height, const LossWeights& w, std::uint64_t seed,
            std::vector<double>* grad = nullptr);

struct IsoGrads {
    std::vector<Vec3> g_position;
    std::vector<Mat3> g_cov;
};

/// As-isometric-as-possible: preserves neighbor distances between means
/// (Euclidean) and covariances (Frobenius) relative to the canonical state.
/// The graph indexes neighbors of each Gaussian over canonical positions.
double iso_loss(const std::vector<Vec3>& position, const std::vector<Mat3>& cov,
                const std::vector<Vec3>& position0, const std::vector<Mat3>& cov0,
                const std::vector<std::vector<int>>& graph, double lambda_mu,
                double lambda_sigma, IsoGrads* grads = nullptr);

struct GregGrads {
    std::vector<Vec3> g_position;
    std::vector<Vec4> g_rotation;
    std::vector<Vec3> g_log_scale;
    std::vector<double> g_opacity_logit;
    std::vector<double> g_sh;
    MatX g_delta;
};

/// Neighborhood-similarity regularizer: mean over Gaussians of per-attribute
/// standard deviations across the kNN neighborhood (self included), plus
/// weight-norm and max-scale penalties.
double gaussian_reg_loss(const GaussianSet& set, const SkinningWeights& weights,
                         const std::vector<std::vector<int>>& graph, double lambda_w,
                         double lambda_s, GregGrads* grads = nullptr);

/// Cubed-hinge anti-penetration term between body points, their nearest
/// garment points and nearest joints. Neighbor maps are rebuilt on each call
/// and treated as constant for differentiation.
double collision_loss(const std::vector<Vec3>& body, const std::vector<Vec3>& garment,
                      const std::vector<Vec3>& joints, double epsilon,
                      std::vector<Vec3>* g_body = nullptr,
                      std::vector<Vec3>* g_garment = nullptr);

/// Smallest signed clearance (c - b).(b - k)/|b - k| over body points;
/// non-negative means no garment penetration.
double collision_clearance(const std::vector<Vec3>& body, const std::vector<Vec3>& garment,
                           const std::vector<Vec3>& joints);

double total_isolation(double recon, double mask, double s3im_val, double greg,
                       const LossWeights& w);
double total_joint(double recon, double mask, double s3im_val, double greg, double iso,
                   double col, const LossWeights& w);

}  // namespace lsplat
