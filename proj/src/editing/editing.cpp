#include "lsplat/editing/editing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>

#include "lsplat/gaussians/covariance.hpp"
#include "lsplat/losses/knn.hpp"
#include "lsplat/losses/losses.hpp"
#include "lsplat/training/adam.hpp"

namespace lsplat {

namespace {
constexpr double kY00 = 0.28209479177387814;
}

void edit_color_replace(GaussianSet& set, const Vec3& rgb255) {
    for (int c = 0; c < 3; ++c) {
        if (!(rgb255[c] >= 0.0 && rgb255[c] <= 255.0)) {
            throw std::invalid_argument("edit_color_replace: RGB components must be in [0, 255]");
        }
    }
    const int basis = set.sh_basis_size();
    for (int i = 0; i < set.size(); ++i) {
        double* sh = set.sh_at(i);
        for (int c = 0; c < 3; ++c) {
            // invert color = 0.5 + f * Y00 for the constant band
            sh[c * basis] = (rgb255[c] / 255.0 - 0.5) / kY00;
        }
    }
}

void edit_color_swap(GaussianSet& set, int channel_a, int channel_b) {
    if (channel_a < 0 || channel_a > 2 || channel_b < 0 || channel_b > 2) {
        throw std::invalid_argument("edit_color_swap: channels must be 0, 1 or 2");
    }
    if (channel_a == channel_b) return;
    const int basis = set.sh_basis_size();
    for (int i = 0; i < set.size(); ++i) {
        double* sh = set.sh_at(i);
        for (int b = 0; b < basis; ++b) {
            std::swap(sh[channel_a * basis + b], sh[channel_b * basis + b]);
        }
    }
}

bool lookup_color(const std::string& name, Vec3& rgb255) {
    static const std::map<std::string, Vec3> kColors = {
        {"black", {0, 0, 0}},        {"white", {255, 255, 255}},
        {"red", {255, 0, 0}},        {"green", {0, 128, 0}},
        {"blue", {0, 0, 255}},       {"crimson", {220, 20, 60}},
        {"navy", {0, 0, 128}},       {"teal", {0, 128, 128}},
        {"olive", {128, 128, 0}},    {"gold", {255, 215, 0}},
        {"orange", {255, 165, 0}},   {"purple", {128, 0, 128}},
        {"gray", {128, 128, 128}},   {"ivory", {255, 255, 240}},
    };
    const auto it = kColors.find(name);
    if (it == kColors.end()) return false;
    rgb255 = it->second;
    return true;
}

double transfer_garment(Checkpoint::Entity& garment, const std::vector<Vec3>& source_body,
                        const std::vector<Vec3>& target_body, const MatX& target_body_weights,
                        const std::vector<Vec3>& rest_joints, const TransferConfig& cfg) {
    if (source_body.size() != target_body.size()) {
        throw std::invalid_argument(
            "transfer_garment: source and target bodies must share topology");
    }
    if (source_body.empty()) throw std::invalid_argument("transfer_garment: empty body");
    if (target_body_weights.cols() != static_cast<Eigen::Index>(target_body.size()) ||
        target_body_weights.rows() != garment.weights.base.rows()) {
        throw std::invalid_argument("transfer_garment: weight dimensions mismatch "
                                    "(incompatible skeleton?)");
    }

    GaussianSet& set = garment.set;
    const int n = set.size();

    // rebind every Gaussian to its nearest source body point
    for (int i = 0; i < n; ++i) {
        int nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (size_t v = 0; v < source_body.size(); ++v) {
            const double d = (set.position[i] - source_body[v]).squaredNorm();
            if (d < best) {
                best = d;
                nearest = static_cast<int>(v);
            }
        }
        set.position[i] = target_body[nearest] + (set.position[i] - source_body[nearest]);
        garment.weights.base.col(i) = target_body_weights.col(nearest);
        garment.weights.delta.col(i).setZero();
    }

    // refine positions only: stay off the target body while preserving the
    // transferred shape
    const std::vector<Vec3> position0 = set.position;
    std::vector<Mat3> cov(n);
    for (int i = 0; i < n; ++i) {
        cov[i] = covariance_from_rotation(quat_to_rot(set.rotation[i]), set.log_scale[i]);
    }
    const auto graph = knn_graph(position0, cfg.knn_k, false);

    AdamState adam;
    adam.resize(static_cast<size_t>(n) * 3);
    double objective = 0.0;
    for (int it = 0; it < cfg.iterations; ++it) {
        std::vector<Vec3> g_col, g_pos(n, Vec3::Zero());
        const double col = collision_loss(target_body, set.position, rest_joints, cfg.epsilon,
                                          nullptr, &g_col);
        IsoGrads ig;
        const double iso = iso_loss(set.position, cov, position0, cov, graph, cfg.lambda_mu,
                                    cfg.lambda_sigma, &ig);
        objective = cfg.lambda_col * col + cfg.lambda_iso * iso;
        for (int i = 0; i < n; ++i) {
            g_pos[i] = cfg.lambda_col * g_col[i] + cfg.lambda_iso * ig.g_position[i];
        }
        adam_step({reinterpret_cast<double*>(set.position.data()), static_cast<size_t>(n) * 3},
                  {reinterpret_cast<const double*>(g_pos.data()), static_cast<size_t>(n) * 3},
                  adam, cfg.lr, cfg.adam);
    }
    return objective;
}

void animate(const Checkpoint& model, const std::vector<Pose>& poses, const Camera& cam,
             const Vec3& background, const RenderSettings& settings,
             const std::function<void(int, const RenderOutput&)>& sink) {
    for (size_t f = 0; f < poses.size(); ++f) {
        if (poses[f].joint_count() != model.skeleton.joint_count()) {
            throw std::invalid_argument("animate: pose joint count mismatch at frame " +
                                        std::to_string(f));
        }
        const BoneTransforms bones = forward_kinematics(model.skeleton, poses[f]);
        std::vector<DeformedGaussians> defs;
        defs.reserve(model.entities.size());
        std::vector<const DeformedGaussians*> ptrs;
        for (const auto& ent : model.entities) {
            defs.push_back(deform_gaussians(ent.set, ent.weights, bones));
            ptrs.push_back(&defs.back());
        }
        const RenderOutput out = render(ptrs, cam, background, settings);
        sink(static_cast<int>(f), out);
    }
}

}  // namespace lsplat
