#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>

#include "lsplat/editing/editing.hpp"
#include "lsplat/harness/metrics.hpp"
#include "lsplat/harness/scene.hpp"
#include "lsplat/io/checkpoint.hpp"
#include "lsplat/io/png_io.hpp"
#include "lsplat/io/run_config.hpp"
#include "lsplat/io/text_formats.hpp"
#include "lsplat/losses/losses.hpp"
#include "lsplat/training/trainer.hpp"

namespace fs = std::filesystem;
using namespace lsplat;

namespace {

struct MakeSceneArgs {
    std::string out;
    int width = 128, height = 128;
    int train_views = 36, heldout_views = 6;
    std::uint64_t seed = 7, perturb_seed = 1;
    bool no_init = false;
};

int cmd_make_scene(const MakeSceneArgs& a) {
    SceneSpec spec;
    spec.width = a.width;
    spec.height = a.height;
    spec.train_views = a.train_views;
    spec.heldout_views = a.heldout_views;
    spec.seed = a.seed;
    const SyntheticScene scene = make_scene(spec);
    save_scene_bundle(a.out, scene);
    if (!a.no_init) {
        PerturbSpec ps;
        ps.seed = a.perturb_seed;
        save_checkpoint(a.out + "/init.ckpt", perturb_model(scene.gt, ps));
    }
    std::cout << "scene written to " << a.out << " (" << scene.train_views.size()
              << " train / " << scene.heldout_views.size() << " held-out views)\n";
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string phase = "both";
    bool emit_config = false;
};

int cmd_train(const TrainArgs& a) {
    RunConfig cfg = load_run_config(a.config);
    if (cfg.scene_dir.empty()) throw std::runtime_error("config: scene_dir is required");
    fs::create_directories(cfg.out_dir);
    if (a.emit_config) {
        std::ofstream out(cfg.out_dir + "/effective_config.json");
        out << emit_effective_config(cfg);
    }

    const SyntheticScene scene = load_scene_bundle(cfg.scene_dir);
    const std::string init_path =
        cfg.init_checkpoint.empty() ? cfg.scene_dir + "/init.ckpt" : cfg.init_checkpoint;
    Checkpoint init = load_checkpoint(init_path);

    Trainer trainer(to_train_data(scene), std::move(init.entities), cfg.options);
    trainer.checkpoint_dir = cfg.out_dir + "/checkpoints";
    std::ofstream csv(cfg.out_dir + "/loss.csv");
    Trainer::write_csv_header(csv);
    if (a.phase == "isolation" || a.phase == "both") trainer.run_isolation(&csv);
    if (a.phase == "joint" || a.phase == "both") trainer.run_joint(&csv);
    save_checkpoint(cfg.out_dir + "/final.ckpt", trainer.checkpoint());
    std::cout << "final loss " << trainer.last_total() << "; checkpoint at " << cfg.out_dir
              << "/final.ckpt\n";

    // final quality report on the training views (held-out via `metrics`)
    const Checkpoint model = trainer.checkpoint();
    double psnr_sum = 0, ssim_sum = 0, iou_sum = 0;
    int iou_count = 0;
    for (int v : scene.train_views) {
        const BoneTransforms bones = forward_kinematics(model.skeleton, scene.poses[v]);
        std::vector<DeformedGaussians> defs;
        defs.reserve(model.entities.size());
        std::vector<const DeformedGaussians*> ptrs;
        for (const auto& e : model.entities) {
            defs.push_back(deform_gaussians(e.set, e.weights, bones));
            ptrs.push_back(&defs.back());
        }
        const RenderOutput out =
            render(ptrs, scene.cameras[v], scene.spec.background, cfg.options.render);
        psnr_sum += psnr(out.image, scene.targets[v]);
        ssim_sum += ssim(out.image, scene.targets[v], out.width, out.height, 11);
        // masks are per-entity silhouettes, so IoU compares solo renders
        for (size_t e = 0; e < ptrs.size(); ++e) {
            const RenderOutput solo =
                render({ptrs[e]}, scene.cameras[v], scene.spec.background, cfg.options.render);
            iou_sum += mask_iou(solo.entity_alpha[0], scene.masks[v][e]);
            ++iou_count;
        }
    }
    const double n = static_cast<double>(scene.train_views.size());
    std::cout << "train psnr " << psnr_sum / n << "\n";
    std::cout << "train ssim " << ssim_sum / n << "\n";
    std::cout << "train mask_iou " << (iou_count ? iou_sum / iou_count : 1.0) << "\n";
    return 0;
}

struct RenderArgs {
    std::string checkpoint;
    std::string scene;
    int view = 0;
    std::string camera;
    std::string out;
};

int cmd_render(const RenderArgs& a) {
    const Checkpoint model = load_checkpoint(a.checkpoint);
    Camera cam;
    Pose pose = Pose::rest(model.skeleton.joint_count());
    Vec3 background = Vec3::Zero();
    if (!a.scene.empty()) {
        const SyntheticScene scene = load_scene_bundle(a.scene);
        if (a.view < 0 || a.view >= static_cast<int>(scene.cameras.size())) {
            throw std::runtime_error("render: view index out of range");
        }
        cam = scene.cameras[a.view];
        pose = scene.poses[a.view];
        background = scene.spec.background;
    } else if (!a.camera.empty()) {
        if (!fs::exists(a.camera)) {
            throw std::runtime_error("render: --camera file not found: " + a.camera);
        }
        cam = load_camera(a.camera);
    } else {
        throw CLI::ValidationError("render", "either --scene or --camera is required");
    }
    const BoneTransforms bones = forward_kinematics(model.skeleton, pose);
    std::vector<DeformedGaussians> defs;
    defs.reserve(model.entities.size());
    std::vector<const DeformedGaussians*> ptrs;
    for (const auto& e : model.entities) {
        defs.push_back(deform_gaussians(e.set, e.weights, bones));
        ptrs.push_back(&defs.back());
    }
    const RenderOutput out = render(ptrs, cam, background, RenderSettings{});
    write_png_rgb(a.out, out.width, out.height, out.image);
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

struct AnimateArgs {
    std::string checkpoint, poses, camera, out_dir;
};

int cmd_animate(const AnimateArgs& a) {
    const Checkpoint model = load_checkpoint(a.checkpoint);
    const std::vector<Pose> poses = load_poses(a.poses);
    const Camera cam = load_camera(a.camera);
    fs::create_directories(a.out_dir);
    animate(model, poses, cam, Vec3::Zero(), RenderSettings{},
            [&](int f, const RenderOutput& out) {
                char name[64];
                std::snprintf(name, sizeof(name), "/frame_%04d.png", f);
                write_png_rgb(a.out_dir + name, out.width, out.height, out.image);
            });
    std::cout << "wrote " << poses.size() << " frames to " << a.out_dir << "\n";
    return 0;
}

struct EditColorArgs {
    std::string checkpoint, entity, out;
    std::vector<double> rgb;
    std::string name;
    std::vector<int> swap;
};

int cmd_edit_color(const EditColorArgs& a) {
    Checkpoint model = load_checkpoint(a.checkpoint);
    Checkpoint::Entity* ent = model.find(a.entity);
    if (!ent) throw std::runtime_error("edit-color: no entity named '" + a.entity + "'");
    const int given = !a.rgb.empty() + !a.name.empty() + !a.swap.empty();
    if (given != 1) {
        throw CLI::ValidationError("edit-color",
                                   "exactly one of --rgb, --name or --swap is required");
    }
    if (!a.swap.empty()) {
        if (a.swap.size() != 2) throw CLI::ValidationError("--swap", "expects two channels");
        edit_color_swap(ent->set, a.swap[0], a.swap[1]);
    } else {
        Vec3 rgb;
        if (!a.name.empty()) {
            if (!lookup_color(a.name, rgb)) {
                throw std::runtime_error("edit-color: unknown color name '" + a.name + "'");
            }
        } else {
            if (a.rgb.size() != 3) throw CLI::ValidationError("--rgb", "expects three values");
            rgb = Vec3(a.rgb[0], a.rgb[1], a.rgb[2]);
        }
        edit_color_replace(ent->set, rgb);
    }
    save_checkpoint(a.out, model);
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

struct TransferArgs {
    std::string source, target, entity, out;
    std::string body = "body";
    int iterations = 200;
};

int cmd_transfer(const TransferArgs& a) {
    const Checkpoint source = load_checkpoint(a.source);
    Checkpoint target = load_checkpoint(a.target);
    if (source.skeleton.joint_count() != target.skeleton.joint_count()) {
        throw std::runtime_error("transfer: incompatible skeletons (joint counts differ)");
    }
    const Checkpoint::Entity* garment = source.find(a.entity);
    if (!garment) throw std::runtime_error("transfer: no entity named '" + a.entity + "'");
    const Checkpoint::Entity* src_body = source.find(a.body);
    const Checkpoint::Entity* tgt_body = target.find(a.body);
    if (!src_body || !tgt_body) {
        throw std::runtime_error("transfer: both checkpoints need a '" + a.body + "' entity");
    }
    if (target.find(a.entity)) {
        throw std::runtime_error("transfer: target already has an entity named '" + a.entity +
                                 "'");
    }
    Checkpoint::Entity moved = *garment;
    TransferConfig cfg;
    cfg.iterations = a.iterations;
    const double objective =
        transfer_garment(moved, src_body->set.position, tgt_body->set.position,
                         tgt_body->weights.base, target.skeleton.rest_joint_positions(), cfg);
    target.entities.push_back(std::move(moved));
    save_checkpoint(a.out, target);
    std::cout << "transfer objective " << objective << "; wrote " << a.out << "\n";
    return 0;
}

struct MetricsArgs {
    std::string checkpoint, scene;
    bool heldout = false;
};

int cmd_metrics(const MetricsArgs& a) {
    const Checkpoint model = load_checkpoint(a.checkpoint);
    const SyntheticScene scene = load_scene_bundle(a.scene);
    const auto& views = a.heldout ? scene.heldout_views : scene.train_views;
    if (views.empty()) throw std::runtime_error("metrics: no views selected");

    double psnr_sum = 0, ssim_sum = 0, iou_sum = 0;
    int iou_count = 0;
    for (int v : views) {
        const BoneTransforms bones = forward_kinematics(model.skeleton, scene.poses[v]);
        std::vector<DeformedGaussians> defs;
        defs.reserve(model.entities.size());
        std::vector<const DeformedGaussians*> ptrs;
        for (const auto& e : model.entities) {
            defs.push_back(deform_gaussians(e.set, e.weights, bones));
            ptrs.push_back(&defs.back());
        }
        const RenderOutput out =
            render(ptrs, scene.cameras[v], scene.spec.background, RenderSettings{});
        psnr_sum += psnr(out.image, scene.targets[v]);
        ssim_sum += ssim(out.image, scene.targets[v], out.width, out.height, 11);
        // masks are per-entity silhouettes, so IoU compares solo renders
        const size_t nmask = scene.entity_names().size();
        for (size_t e = 0; e < ptrs.size() && e < nmask; ++e) {
            const RenderOutput solo =
                render({ptrs[e]}, scene.cameras[v], scene.spec.background, RenderSettings{});
            iou_sum += mask_iou(solo.entity_alpha[0], scene.masks[v][e]);
            ++iou_count;
        }
    }
    const double n = static_cast<double>(views.size());
    std::cout << "views " << views.size() << (a.heldout ? " (held-out)" : " (train)") << "\n";
    std::cout << "psnr " << psnr_sum / n << "\n";
    std::cout << "ssim " << ssim_sum / n << "\n";
    std::cout << "mask_iou " << (iou_count ? iou_sum / iou_count : 1.0) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layered articulated Gaussian splatting"};
    app.require_subcommand(1);

    MakeSceneArgs ms;
    auto* make_scene_cmd = app.add_subcommand("make-scene", "generate a synthetic scene bundle");
    make_scene_cmd->add_option("--out", ms.out, "output directory")->required();
    make_scene_cmd->add_option("--width", ms.width);
    make_scene_cmd->add_option("--height", ms.height);
    make_scene_cmd->add_option("--views", ms.train_views, "training view count");
    make_scene_cmd->add_option("--heldout", ms.heldout_views, "held-out view count");
    make_scene_cmd->add_option("--seed", ms.seed);
    make_scene_cmd->add_option("--perturb-seed", ms.perturb_seed);
    make_scene_cmd->add_flag("--no-init", ms.no_init, "skip the perturbed init checkpoint");

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "fit a model to a scene");
    train_cmd->add_option("--config", tr.config, "JSON run configuration")->required();
    train_cmd->add_option("--phase", tr.phase)
        ->check(CLI::IsMember({"isolation", "joint", "both"}));
    train_cmd->add_flag("--emit-effective-config", tr.emit_config,
                        "write the fully-populated config to the output directory");

    RenderArgs rd;
    auto* render_cmd = app.add_subcommand("render", "render a checkpoint to a PNG");
    render_cmd->add_option("--checkpoint", rd.checkpoint)->required();
    render_cmd->add_option("--scene", rd.scene, "scene bundle supplying camera and pose");
    render_cmd->add_option("--view", rd.view);
    render_cmd->add_option("--camera", rd.camera, "camera file (rest pose)");
    render_cmd->add_option("--out", rd.out)->required();

    AnimateArgs an;
    auto* animate_cmd = app.add_subcommand("animate", "render a pose sequence");
    animate_cmd->add_option("--checkpoint", an.checkpoint)->required();
    animate_cmd->add_option("--poses", an.poses)->required();
    animate_cmd->add_option("--camera", an.camera)->required();
    animate_cmd->add_option("--out-dir", an.out_dir)->required();

    EditColorArgs ec;
    auto* edit_cmd = app.add_subcommand("edit-color", "recolor an entity");
    edit_cmd->add_option("--checkpoint", ec.checkpoint)->required();
    edit_cmd->add_option("--entity", ec.entity)->required();
    edit_cmd->add_option("--out", ec.out)->required();
    edit_cmd->add_option("--rgb", ec.rgb, "8-bit RGB triple")->delimiter(',');
    edit_cmd->add_option("--name", ec.name, "named color, e.g. crimson");
    edit_cmd->add_option("--swap", ec.swap, "swap two channels (0=R 1=G 2=B)")->delimiter(',');

    TransferArgs tf;
    auto* transfer_cmd = app.add_subcommand("transfer", "move a garment onto another body");
    transfer_cmd->add_option("--source", tf.source, "checkpoint holding the garment")->required();
    transfer_cmd->add_option("--target", tf.target, "checkpoint with the target body")->required();
    transfer_cmd->add_option("--entity", tf.entity, "garment entity name")->required();
    transfer_cmd->add_option("--out", tf.out)->required();
    transfer_cmd->add_option("--body", tf.body, "body entity name");
    transfer_cmd->add_option("--iterations", tf.iterations);

    MetricsArgs mt;
    auto* metrics_cmd = app.add_subcommand("metrics", "PSNR/SSIM/IoU against a scene");
    metrics_cmd->add_option("--checkpoint", mt.checkpoint)->required();
    metrics_cmd->add_option("--scene", mt.scene)->required();
    metrics_cmd->add_flag("--heldout", mt.heldout, "evaluate the held-out views");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (make_scene_cmd->parsed()) return cmd_make_scene(ms);
        if (train_cmd->parsed()) return cmd_train(tr);
        if (render_cmd->parsed()) return cmd_render(rd);
        if (animate_cmd->parsed()) return cmd_animate(an);
        if (edit_cmd->parsed()) return cmd_edit_color(ec);
        if (transfer_cmd->parsed()) return cmd_transfer(tf);
        if (metrics_cmd->parsed()) return cmd_metrics(mt);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
