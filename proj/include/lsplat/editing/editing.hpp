#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lsplat/io/checkpoint.hpp"
#include "lsplat/splatting/render.hpp"
#include "lsplat/training/adam.hpp"

namespace lsplat {

/// Sets the base (view-independent) radiance of every Gaussian to the given
/// 8-bit RGB color; higher-order coefficients are preserved.
void edit_color_replace(GaussianSet& set, const Vec3& rgb255);

/// Exchanges two color channels across all radiance coefficients.
void edit_color_swap(GaussianSet& set, int channel_a, int channel_b);

/// Named colors accepted by the CLI (e.g. "crimson").
bool lookup_color(const std::string& name, Vec3& rgb255);

struct TransferConfig {
    int iterations = 200;
    double lr = 1e-3;
    double lambda_col = 1.0;
    double lambda_iso = 0.1;
    double lambda_mu = 1.0;
    double lambda_sigma = 0.1;
    double epsilon = 0.0;
    int knn_k = 5;
    AdamConfig adam;
};

/// Re-dresses a garment onto a target body with the same skeleton: each
/// garment Gaussian follows its nearest source body point to the target,
/// skinning weights are re-copied from the target body, then the positions
/// are refined for a few collision+isometry iterations. Returns the final
/// combined objective value.
double transfer_garment(Checkpoint::Entity& garment, const std::vector<Vec3>& source_body,
                        const std::vector<Vec3>& target_body, const MatX& target_body_weights,
                        const std::vector<Vec3>& rest_joints, const TransferConfig& cfg);

/// Renders one frame per pose; invokes the sink with the frame index and
/// output (frames are produced in order).
void animate(const Checkpoint& model, const std::vector<Pose>& poses, const Camera& cam,
             const Vec3& background, const RenderSettings& settings,
             const std::function<void(int, const RenderOutput&)>& sink);

}  // namespace lsplat
