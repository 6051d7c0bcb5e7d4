#include "lsplat/io/run_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lsplat {

namespace {

using nlohmann::json;

/// Pulls known keys out of an object and complains about leftovers.
class Section {
public:
    Section(const json& j, std::string name) : name_(std::move(name)) {
        if (!j.is_object()) throw std::runtime_error("config: '" + name_ + "' must be an object");
        remaining_ = j;
    }

    template <typename T>
    void get(const char* key, T& out) {
        auto it = remaining_.find(key);
        if (it == remaining_.end()) return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw std::runtime_error("config: bad value for '" + name_ + "." + key + "'");
        }
        remaining_.erase(it);
    }

    json take(const char* key) {
        auto it = remaining_.find(key);
        if (it == remaining_.end()) return json::object();
        json sub = *it;
        remaining_.erase(it);
        return sub;
    }

    ~Section() noexcept(false) {
        if (!remaining_.empty() && !std::uncaught_exceptions()) {
            throw std::runtime_error("config: unknown key '" + name_ + "." +
                                     remaining_.begin().key() + "'");
        }
    }

private:
    std::string name_;
    json remaining_;
};

void parse_train(const json& j, TrainConfig& t) {
    Section s(j, "train");
    s.get("isolation_iterations", t.isolation_iterations);
    s.get("joint_iterations", t.joint_iterations);
    s.get("densify_interval", t.densify_interval);
    s.get("opacity_reset_interval", t.opacity_reset_interval);
    s.get("max_world_scale", t.max_world_scale);
    s.get("lr_position", t.lr_position);
    s.get("lr_position_final", t.lr_position_final);
    s.get("lr_rotation", t.lr_rotation);
    s.get("lr_scale", t.lr_scale);
    s.get("lr_opacity", t.lr_opacity);
    s.get("lr_sh", t.lr_sh);
    s.get("lr_delta", t.lr_delta);
    s.get("beta1", t.adam.beta1);
    s.get("beta2", t.adam.beta2);
    s.get("adam_eps", t.adam.eps);
    s.get("seed", t.seed);
    s.get("checkpoint_interval", t.checkpoint_interval);
    s.get("body_entity", t.body_entity);
    {
        Section d(s.take("densify"), "train.densify");
        d.get("grad_threshold", t.densify.grad_threshold);
        d.get("opacity_threshold", t.densify.opacity_threshold);
        d.get("split_factor", t.densify.split_factor);
        d.get("size_threshold", t.densify.size_threshold);
        d.get("max_scale", t.densify.max_scale);
    }
    t.validate();
}

void parse_losses(const json& j, LossWeights& w) {
    Section s(j, "losses");
    s.get("lambda_mask", w.lambda_mask);
    s.get("lambda_s3im", w.lambda_s3im);
    s.get("lambda_greg", w.lambda_greg);
    s.get("lambda_iso", w.lambda_iso);
    s.get("lambda_col", w.lambda_col);
    s.get("lambda_mu", w.lambda_mu);
    s.get("lambda_sigma", w.lambda_sigma);
    s.get("lambda_w", w.lambda_w);
    s.get("lambda_s", w.lambda_s);
    s.get("epsilon", w.epsilon);
    s.get("s3im_patch", w.s3im_patch);
    s.get("s3im_kernel", w.s3im_kernel);
    s.get("s3im_stride", w.s3im_stride);
    s.get("s3im_reps", w.s3im_reps);
    s.get("knn_k", w.knn_k);
    w.validate();
}

void parse_render(const json& j, RenderSettings& r) {
    Section s(j, "render");
    s.get("tile_size", r.tile_size);
    s.get("alpha_clamp", r.alpha_clamp);
    s.get("alpha_min", r.alpha_min);
    s.get("transmittance_min", r.transmittance_min);
    s.get("footprint_sigma", r.footprint_sigma);
    s.get("cov2d_blur", r.cov2d_blur);
    s.get("threads", r.threads);
    if (r.tile_size < 1 || r.threads < 1 || !(r.alpha_clamp > 0 && r.alpha_clamp <= 1)) {
        throw std::runtime_error("config: invalid render settings");
    }
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config: JSON parse error: ") + e.what());
    }
    RunConfig cfg;
    Section s(j, "root");
    s.get("scene_dir", cfg.scene_dir);
    s.get("init_checkpoint", cfg.init_checkpoint);
    s.get("out_dir", cfg.out_dir);
    parse_train(s.take("train"), cfg.options.train);
    parse_losses(s.take("losses"), cfg.options.losses);
    parse_render(s.take("render"), cfg.options.render);
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

std::string emit_effective_config(const RunConfig& cfg) {
    const TrainConfig& t = cfg.options.train;
    const LossWeights& w = cfg.options.losses;
    const RenderSettings& r = cfg.options.render;
    json j;
    j["scene_dir"] = cfg.scene_dir;
    j["init_checkpoint"] = cfg.init_checkpoint;
    j["out_dir"] = cfg.out_dir;
    j["train"] = {
        {"isolation_iterations", t.isolation_iterations},
        {"joint_iterations", t.joint_iterations},
        {"densify_interval", t.densify_interval},
        {"opacity_reset_interval", t.opacity_reset_interval},
        {"max_world_scale", t.max_world_scale},
        {"lr_position", t.lr_position},
        {"lr_position_final", t.lr_position_final},
        {"lr_rotation", t.lr_rotation},
        {"lr_scale", t.lr_scale},
        {"lr_opacity", t.lr_opacity},
        {"lr_sh", t.lr_sh},
        {"lr_delta", t.lr_delta},
        {"beta1", t.adam.beta1},
        {"beta2", t.adam.beta2},
        {"adam_eps", t.adam.eps},
        {"seed", t.seed},
        {"checkpoint_interval", t.checkpoint_interval},
        {"body_entity", t.body_entity},
        {"densify",
         {{"grad_threshold", t.densify.grad_threshold},
          {"opacity_threshold", t.densify.opacity_threshold},
          {"split_factor", t.densify.split_factor},
          {"size_threshold", t.densify.size_threshold},
          {"max_scale", t.densify.max_scale}}},
    };
    j["losses"] = {
        {"lambda_mask", w.lambda_mask},   {"lambda_s3im", w.lambda_s3im},
        {"lambda_greg", w.lambda_greg},   {"lambda_iso", w.lambda_iso},
        {"lambda_col", w.lambda_col},     {"lambda_mu", w.lambda_mu},
        {"lambda_sigma", w.lambda_sigma}, {"lambda_w", w.lambda_w},
        {"lambda_s", w.lambda_s},         {"epsilon", w.epsilon},
        {"s3im_patch", w.s3im_patch},     {"s3im_kernel", w.s3im_kernel},
        {"s3im_stride", w.s3im_stride},   {"s3im_reps", w.s3im_reps},
        {"knn_k", w.knn_k},
    };
    j["render"] = {
        {"tile_size", r.tile_size},
        {"alpha_clamp", r.alpha_clamp},
        {"alpha_min", r.alpha_min},
        {"transmittance_min", r.transmittance_min},
        {"footprint_sigma", r.footprint_sigma},
        {"cov2d_blur", r.cov2d_blur},
        {"threads", r.threads},
    };
    return j.dump(2) + "\n";
}

}  // namespace lsplat
