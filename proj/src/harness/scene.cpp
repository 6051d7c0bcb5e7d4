#include "lsplat/harness/scene.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "lsplat/editing/editing.hpp"
#include "lsplat/io/png_io.hpp"
#include "lsplat/io/text_formats.hpp"
#include "lsplat/splatting/render.hpp"

namespace lsplat {

namespace {

using nlohmann::json;

constexpr double kBodyBase = 0.0, kBodyHeight = 1.2, kBodyRadius = 0.16;

Mat4 translate_y(double dy) {
    Mat4 m = Mat4::Identity();
    m(1, 3) = dy;
    return m;
}

Skeleton chain_skeleton(int joints) {
    if (joints < 2) throw std::invalid_argument("scene: need at least 2 joints");
    const double y_first = 0.2, y_last = 1.0;
    const double dy = (y_last - y_first) / (joints - 1);
    Skeleton sk;
    sk.parent.push_back(-1);
    sk.rest_local.push_back(translate_y(y_first));
    for (int j = 1; j < joints; ++j) {
        sk.parent.push_back(j - 1);
        sk.rest_local.push_back(translate_y(dy));
    }
    return sk;
}

BodyTemplate capsule_body(const SceneSpec& spec, const Skeleton& skeleton) {
    BodyTemplate body;
    const int rows = spec.body_rows, cols = spec.body_cols;
    if (rows < 4 || cols < 4) throw std::invalid_argument("scene: body grid too small");

    for (int r = 0; r < rows; ++r) {
        const double t = (r + 0.5) / rows;
        const double y = kBodyBase + t * kBodyHeight;
        const double u = 2.0 * t - 1.0;
        const double radius = kBodyRadius * std::sqrt(std::max(1e-4, 1.0 - u * u * u * u));
        for (int c = 0; c < cols; ++c) {
            const double ang = 2.0 * M_PI * c / cols;
            body.rest_vertices.emplace_back(radius * std::cos(ang), y, radius * std::sin(ang));
            body.region.push_back("r" + std::to_string(r));
        }
    }
    for (int r = 0; r + 1 < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int c1 = (c + 1) % cols;
            const int a = r * cols + c, b = r * cols + c1;
            const int d = (r + 1) * cols + c, e = (r + 1) * cols + c1;
            // wound so face normals point away from the capsule axis
            body.faces.push_back({a, d, b});
            body.faces.push_back({b, d, e});
        }
    }
    body.offsets.assign(body.rest_vertices.size(), Vec3::Zero());

    const auto joints = skeleton.rest_joint_positions();
    const int nj = static_cast<int>(joints.size());
    const int nv = body.vertex_count();
    const double spacing = nj > 1 ? joints[1].y() - joints[0].y() : 1.0;
    body.base_weights = MatX::Zero(nj, nv);
    body.joint_regressor = MatX::Zero(nj, nv);
    for (int v = 0; v < nv; ++v) {
        const double y = body.rest_vertices[v].y();
        VecX w = VecX::Zero(nj);
        for (int j = 0; j < nj; ++j) {
            w[j] = std::max(0.0, 1.0 - std::abs(y - joints[j].y()) / (1.5 * spacing));
        }
        if (w.sum() <= 0.0) {
            int nearest = 0;
            for (int j = 1; j < nj; ++j) {
                if (std::abs(y - joints[j].y()) < std::abs(y - joints[nearest].y())) nearest = j;
            }
            w[nearest] = 1.0;
        }
        body.base_weights.col(v) = w / w.sum();
    }
    const double sigma = 0.5 * spacing;
    for (int j = 0; j < nj; ++j) {
        for (int v = 0; v < nv; ++v) {
            const double d = body.rest_vertices[v].y() - joints[j].y();
            body.joint_regressor(j, v) = std::exp(-d * d / (2.0 * sigma * sigma));
        }
        body.joint_regressor.row(j) /= body.joint_regressor.row(j).sum();
    }
    body.validate(nj);
    return body;
}

void style_entity(GaussianSet& set, const Vec3& color255, std::mt19937_64& rng) {
    edit_color_replace(set, color255);
    for (auto& o : set.opacity_logit) o = 3.0;
    for (auto& s : set.log_scale) s.array() += std::log(1.2);
    if (set.sh_degree > 0) {
        // mild seeded view dependence in the higher bands
        std::uniform_real_distribution<double> jitter(-0.04, 0.04);
        const int basis = set.sh_basis_size();
        for (int i = 0; i < set.size(); ++i) {
            double* sh = set.sh_at(i);
            for (int c = 0; c < 3; ++c) {
                for (int b = 1; b < basis; ++b) sh[c * basis + b] = jitter(rng);
            }
        }
    }
}

std::string view_name(const char* stem, int v, const char* ext) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s_%03d.%s", stem, v, ext);
    return buf;
}

}  // namespace

std::vector<std::string> SyntheticScene::entity_names() const {
    std::vector<std::string> names;
    for (const auto& e : gt.entities) names.push_back(e.set.entity);
    return names;
}

SyntheticScene make_scene(const SceneSpec& spec) {
    SyntheticScene scene;
    scene.spec = spec;
    scene.gt.skeleton = chain_skeleton(spec.joint_count);
    scene.body = capsule_body(spec, scene.gt.skeleton);
    const auto rest_joints = scene.gt.skeleton.rest_joint_positions();

    std::mt19937_64 rng(spec.seed);

    Checkpoint::Entity body_ent;
    body_ent.set = init_gaussians_from_vertices(scene.body.rest_vertices, "body", spec.sh_degree);
    style_entity(body_ent.set, Vec3(210, 160, 120), rng);
    body_ent.weights = SkinningWeights::zero_delta(scene.body.base_weights);
    scene.gt.entities.push_back(std::move(body_ent));

    for (const auto& g : spec.garments) {
        GarmentSpec gs;
        gs.entity = g.name;
        gs.offset = g.offset;
        gs.layer = g.layer;
        const BodyTemplate* source = &scene.body;
        BodyTemplate dense;
        int source_rows = spec.body_rows;
        if (g.source_rows > 0 && g.source_rows != spec.body_rows) {
            SceneSpec dense_spec = spec;
            dense_spec.body_rows = g.source_rows;
            dense = capsule_body(dense_spec, scene.gt.skeleton);
            source = &dense;
            source_rows = g.source_rows;
        }
        const int row_begin = static_cast<int>(std::floor(g.row_begin * source_rows));
        const int row_end = static_cast<int>(std::floor(g.row_end * source_rows));
        for (int r = row_begin; r < row_end; ++r) gs.regions.push_back("r" + std::to_string(r));
        const GarmentTemplate gt =
            generate_garment_template(*source, source->rest_vertices, rest_joints, gs);
        Checkpoint::Entity ent;
        ent.set = init_gaussians_from_vertices(gt.vertices, g.name, spec.sh_degree);
        style_entity(ent.set, g.color255, rng);
        ent.weights = SkinningWeights::zero_delta(gt.base_weights);
        scene.gt.entities.push_back(std::move(ent));
    }

    const int total = spec.train_views + spec.heldout_views;
    if (total < 1) throw std::invalid_argument("scene: need at least one view");
    const int stride = spec.heldout_views > 0 ? total / spec.heldout_views : total + 1;
    const Vec3 target_pt(0, kBodyBase + 0.5 * kBodyHeight, 0);
    const double focal = 1.3 * spec.height;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int v = 0; v < total; ++v) {
        const double ang = 2.0 * M_PI * v / total;
        const Vec3 eye(2.3 * std::cos(ang), 0.9, 2.3 * std::sin(ang));
        scene.cameras.push_back(Camera::look_at(eye, target_pt, Vec3(0, 1, 0), focal, focal,
                                                spec.width, spec.height));
        Pose pose = Pose::rest(spec.joint_count);
        if (v > 0) {
            for (int j = 1; j < spec.joint_count; ++j) {
                for (int c = 0; c < 3; ++c) {
                    pose.joint_rotations[j][c] = spec.pose_amplitude * unit(rng);
                }
            }
        }
        scene.poses.push_back(std::move(pose));
        if (spec.heldout_views > 0 && v % stride == stride / 2 &&
            static_cast<int>(scene.heldout_views.size()) < spec.heldout_views) {
            scene.heldout_views.push_back(v);
        } else {
            scene.train_views.push_back(v);
        }
    }

    RenderSettings settings;
    for (int v = 0; v < total; ++v) {
        const BoneTransforms bones = forward_kinematics(scene.gt.skeleton, scene.poses[v]);
        std::vector<DeformedGaussians> defs;
        defs.reserve(scene.gt.entities.size());
        std::vector<const DeformedGaussians*> ptrs;
        for (const auto& ent : scene.gt.entities) {
            defs.push_back(deform_gaussians(ent.set, ent.weights, bones));
            ptrs.push_back(&defs.back());
        }
        const RenderOutput out = render(ptrs, scene.cameras[v], spec.background, settings);
        scene.targets.push_back(out.image);
        // Masks are full per-entity silhouettes (each entity rendered on its
        // own), not visibility in the composite: an entity's extent is well
        // defined even where another layer occludes it, and the thin rings
        // where an occluded layer bleeds through a soft alpha edge would
        // otherwise dominate the mask of a mostly covered entity.
        std::vector<std::vector<double>> view_masks;
        for (const auto* ptr : ptrs) {
            const RenderOutput solo = render({ptr}, scene.cameras[v], spec.background, settings);
            std::vector<double> m(solo.entity_alpha[0].size());
            for (size_t p = 0; p < m.size(); ++p)
                m[p] = solo.entity_alpha[0][p] >= 0.5 ? 1.0 : 0.0;
            view_masks.push_back(std::move(m));
        }
        scene.masks.push_back(std::move(view_masks));
    }
    return scene;
}

TrainData to_train_data(const SyntheticScene& scene, bool heldout) {
    TrainData data;
    data.skeleton = scene.gt.skeleton;
    data.cameras = scene.cameras;
    data.background = scene.spec.background;
    const auto& views = heldout ? scene.heldout_views : scene.train_views;
    for (int v : views) {
        TrainFrame f;
        f.camera = v;
        f.pose = scene.poses[v];
        f.target = scene.targets[v];
        f.masks = scene.masks[v];
        data.frames.push_back(std::move(f));
    }
    return data;
}

Checkpoint perturb_model(const Checkpoint& model, const PerturbSpec& spec) {
    Checkpoint out = model;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& ent : out.entities) {
        GaussianSet& s = ent.set;
        for (auto& p : s.position) {
            for (int c = 0; c < 3; ++c) p[c] += spec.position_sigma * normal(rng);
        }
        for (auto& q : s.rotation) {
            for (int c = 0; c < 4; ++c) q[c] += spec.rotation_sigma * normal(rng);
            q /= q.norm();
        }
        for (auto& ls : s.log_scale) {
            for (int c = 0; c < 3; ++c) ls[c] += spec.log_scale_sigma * normal(rng);
        }
        for (auto& o : s.opacity_logit) o += spec.opacity_logit_sigma * normal(rng);
        for (auto& c : s.sh) c += spec.sh_sigma * normal(rng);
    }
    return out;
}

void save_scene_bundle(const std::string& dir, const SyntheticScene& scene) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    fs::create_directories(dir + "/cameras");
    fs::create_directories(dir + "/images");
    fs::create_directories(dir + "/masks");

    const SceneSpec& spec = scene.spec;
    json j;
    j["format"] = "lsplat-scene";
    j["version"] = 1;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["background"] = {spec.background.x(), spec.background.y(), spec.background.z()};
    j["seed"] = spec.seed;
    j["entities"] = scene.entity_names();
    j["train_views"] = scene.train_views;
    j["heldout_views"] = scene.heldout_views;
    j["view_count"] = static_cast<int>(scene.cameras.size());

    const auto names = scene.entity_names();
    for (size_t v = 0; v < scene.cameras.size(); ++v) {
        const int vi = static_cast<int>(v);
        save_camera(dir + "/cameras/" + view_name("view", vi, "txt"), scene.cameras[v]);
        write_png_rgb(dir + "/images/" + view_name("view", vi, "png"), spec.width, spec.height,
                      scene.targets[v]);
        for (size_t e = 0; e < names.size(); ++e) {
            write_png_gray(dir + "/masks/" + view_name((names[e] + "_view").c_str(), vi, "png"),
                           spec.width, spec.height, scene.masks[v][e]);
        }
    }
    save_poses(dir + "/poses.txt", scene.poses);
    save_checkpoint(dir + "/gt.ckpt", scene.gt);

    std::ofstream out(dir + "/scene.json");
    if (!out) throw std::runtime_error("scene: cannot write " + dir + "/scene.json");
    out << j.dump(2) << "\n";
}

SyntheticScene load_scene_bundle(const std::string& dir) {
    std::ifstream in(dir + "/scene.json");
    if (!in) throw std::runtime_error("scene: cannot open " + dir + "/scene.json");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("scene: bad scene.json: " + std::string(e.what()));
    }
    if (j.value("format", "") != "lsplat-scene" || j.value("version", 0) != 1) {
        throw std::runtime_error("scene: not an lsplat scene bundle: " + dir);
    }

    SyntheticScene scene;
    scene.spec.width = j.at("width").get<int>();
    scene.spec.height = j.at("height").get<int>();
    const auto bg = j.at("background");
    scene.spec.background = Vec3(bg.at(0).get<double>(), bg.at(1).get<double>(),
                                 bg.at(2).get<double>());
    scene.spec.seed = j.value("seed", 0ull);
    scene.train_views = j.at("train_views").get<std::vector<int>>();
    scene.heldout_views = j.at("heldout_views").get<std::vector<int>>();
    const int total = j.at("view_count").get<int>();
    const auto names = j.at("entities").get<std::vector<std::string>>();

    scene.gt = load_checkpoint(dir + "/gt.ckpt");
    if (scene.gt.entities.size() != names.size()) {
        throw std::runtime_error("scene: entity list does not match gt.ckpt");
    }
    scene.spec.joint_count = scene.gt.skeleton.joint_count();
    scene.poses = load_poses(dir + "/poses.txt");
    if (static_cast<int>(scene.poses.size()) != total) {
        throw std::runtime_error("scene: pose count does not match view_count");
    }

    for (int v = 0; v < total; ++v) {
        scene.cameras.push_back(load_camera(dir + "/cameras/" + view_name("view", v, "txt")));
        const Image img = read_png_rgb(dir + "/images/" + view_name("view", v, "png"));
        if (img.width != scene.spec.width || img.height != scene.spec.height) {
            throw std::runtime_error("scene: image size mismatch at view " + std::to_string(v));
        }
        scene.targets.push_back(img.rgb);
        std::vector<std::vector<double>> view_masks;
        for (const auto& name : names) {
            int w = 0, h = 0;
            auto m = read_png_gray(dir + "/masks/" + view_name((name + "_view").c_str(), v, "png"),
                                   &w, &h);
            if (w != scene.spec.width || h != scene.spec.height) {
                throw std::runtime_error("scene: mask size mismatch at view " + std::to_string(v));
            }
            for (auto& x : m) x = x >= 0.5 ? 1.0 : 0.0;
            view_masks.push_back(std::move(m));
        }
        scene.masks.push_back(std::move(view_masks));
    }
    scene.spec.train_views = static_cast<int>(scene.train_views.size());
    scene.spec.heldout_views = static_cast<int>(scene.heldout_views.size());
    return scene;
}

}  // namespace lsplat
