#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsplat/io/checkpoint.hpp"
#include "lsplat/splatting/camera.hpp"
#include "lsplat/templates/templates.hpp"
#include "lsplat/training/trainer.hpp"

namespace lsplat {

/// Synthetic capsule-person scene: a chain skeleton, a ring-grid body and
/// offset-shell garments, viewed from a camera circle under seeded poses.
struct SceneSpec {
    int joint_count = 4;
    int body_rows = 40;
    int body_cols = 20;

    struct Garment {
        std::string name;
        double row_begin = 0.0;  // fraction of body rows
        double row_end = 1.0;
        int layer = 1;
        double offset = 0.025;
        Vec3 color255 = Vec3(128, 128, 128);
        // Row count of the capsule grid the shell is sampled from; 0 uses the
        // body grid. A denser source grid decouples the garment's Gaussian
        // count from how much of the body it covers.
        int source_rows = 0;
    };
    std::vector<Garment> garments = {
        {"pants", 0.0, 0.55, 1, 0.025, Vec3(40, 60, 200)},
        {"shirt", 0.45, 1.0, 2, 0.02, Vec3(200, 50, 50)},
    };

    int train_views = 36;
    int heldout_views = 6;
    int width = 128, height = 128;
    int sh_degree = 1;
    double pose_amplitude = 0.25;  // radians
    std::uint64_t seed = 7;
    Vec3 background = Vec3::Zero();
};

struct SyntheticScene {
    SceneSpec spec;
    BodyTemplate body;
    Checkpoint gt;                                        // entity 0 is the body
    std::vector<Camera> cameras;                          // one per view
    std::vector<Pose> poses;                              // one per view
    std::vector<std::vector<double>> targets;             // [view] H*W*3
    std::vector<std::vector<std::vector<double>>> masks;  // [view][entity] H*W
    std::vector<int> train_views, heldout_views;

    std::vector<std::string> entity_names() const;
};

SyntheticScene make_scene(const SceneSpec& spec);

/// Training data over the scene's training (or held-out) views.
TrainData to_train_data(const SyntheticScene& scene, bool heldout = false);

struct PerturbSpec {
    double position_sigma = 0.01;
    double rotation_sigma = 0.05;
    double log_scale_sigma = 0.1;
    double opacity_logit_sigma = 0.3;
    double sh_sigma = 0.05;
    std::uint64_t seed = 1;
};

/// Seeded Gaussian noise on every optimizable attribute; the starting point
/// for convergence experiments.
Checkpoint perturb_model(const Checkpoint& model, const PerturbSpec& spec);

/// On-disk bundle: scene.json, cameras/, images/, masks/, poses.txt, gt.ckpt
/// and (when present) init.ckpt. Images go through 8-bit PNG quantization.
void save_scene_bundle(const std::string& dir, const SyntheticScene& scene);
SyntheticScene load_scene_bundle(const std::string& dir);

}  // namespace lsplat
