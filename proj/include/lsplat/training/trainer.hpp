#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "lsplat/gaussians/densify.hpp"
#include "lsplat/io/checkpoint.hpp"
#include "lsplat/losses/losses.hpp"
#include "lsplat/splatting/render.hpp"
#include "lsplat/training/adam.hpp"

namespace lsplat {

struct TrainConfig {
    int isolation_iterations = 1200;  // frame visits per phase
    int joint_iterations = 600;
    int densify_interval = 400;        // isolation phase; 0 disables
    int opacity_reset_interval = 3000;  // isolation phase; 0 disables
    double max_world_scale = 0.0;  // clamp per-axis scales after each step; 0 disables
    double lr_position = 1.6e-4;
    double lr_position_final = 1.6e-6;  // exponential decay target
    double lr_rotation = 1e-3;
    double lr_scale = 5e-3;
    double lr_opacity = 5e-2;
    double lr_sh = 2.5e-3;
    double lr_delta = 1e-4;
    AdamConfig adam;
    std::uint64_t seed = 0;
    int checkpoint_interval = 0;  // 0 = final checkpoint only
    std::string body_entity = "body";

    DensifyConfig densify;

    void validate() const;
};

/// One observation: camera index, pose and target image with one binary
/// visibility mask per entity (same order as the entity list).
struct TrainFrame {
    int camera = 0;
    Pose pose;
    std::vector<double> target;  // H*W*3, linear
    std::vector<std::vector<double>> masks;
};

struct TrainData {
    Skeleton skeleton;
    std::vector<Camera> cameras;
    std::vector<TrainFrame> frames;
    Vec3 background = Vec3::Zero();
};

struct TrainOptions {
    TrainConfig train;
    LossWeights losses;
    RenderSettings render;
};

struct IterationStats {
    int iteration = 0;
    char phase = 'i';  // 'i'solation / 'j'oint
    std::string entity;
    double recon = 0, mask = 0, s3im = 0, greg = 0, iso = 0, col = 0, total = 0;
};

/// Two-phase optimizer. Isolation trains each entity against its masked
/// target independently (with densification); the joint phase composites all
/// entities and adds the deformation and collision terms with fixed Gaussian
/// counts. A non-finite loss aborts with a diagnostic checkpoint.
class Trainer {
public:
    Trainer(TrainData data, std::vector<Checkpoint::Entity> entities, TrainOptions opts);

    /// Directory for periodic and diagnostic checkpoints; empty disables.
    std::string checkpoint_dir;

    void run_isolation(std::ostream* loss_csv = nullptr);
    void run_joint(std::ostream* loss_csv = nullptr);

    Checkpoint checkpoint() const;
    const std::vector<IterationStats>& history() const { return history_; }
    double last_total() const;

    static void write_csv_header(std::ostream& out);

private:
    struct EntityState {
        GaussianSet set;
        SkinningWeights weights;
        AdamState adam_position, adam_rotation, adam_scale, adam_opacity, adam_sh, adam_delta;
        GradAccumulator accum;

        void reset_optimizer();
    };

    struct ParamGrads {
        std::vector<Vec3> position;
        std::vector<Vec4> rotation;
        std::vector<Vec3> log_scale;
        std::vector<double> opacity;
        std::vector<double> sh;
        MatX delta;
    };

    double position_lr(int iter, int total) const;
    void apply_step(EntityState& e, const ParamGrads& g, double lr_pos);
    void densify_entity(EntityState& e, int iteration);
    void record(const IterationStats& s, std::ostream* loss_csv);
    void check_finite(const IterationStats& s, const char* phase_name);
    void maybe_checkpoint(char phase, int iteration);
    std::vector<int> frame_order(std::uint64_t salt);

    TrainData data_;
    // per frame, per entity: 1 where another entity's mask also covers the
    // pixel (alpha and color targets are ambiguous there under occlusion)
    std::vector<std::vector<std::vector<double>>> overlap_;
    std::vector<EntityState> entities_;
    TrainOptions opts_;
    std::vector<IterationStats> history_;
    int body_index_ = -1;
};

}  // namespace lsplat
