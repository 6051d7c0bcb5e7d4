#include "lsplat/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <stdexcept>

#include "lsplat/gaussians/covariance.hpp"
#include "lsplat/losses/knn.hpp"

namespace lsplat {

namespace {

std::span<double> flat(std::vector<Vec3>& v) {
    return {reinterpret_cast<double*>(v.data()), v.size() * 3};
}
std::span<const double> flat(const std::vector<Vec3>& v) {
    return {reinterpret_cast<const double*>(v.data()), v.size() * 3};
}
std::span<double> flat(std::vector<Vec4>& v) {
    return {reinterpret_cast<double*>(v.data()), v.size() * 4};
}
std::span<const double> flat(const std::vector<Vec4>& v) {
    return {reinterpret_cast<const double*>(v.data()), v.size() * 4};
}

void axpy(std::vector<double>& dst, double a, const std::vector<double>& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += a * src[i];
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
    return a;
}

}  // namespace

void TrainConfig::validate() const {
    if (isolation_iterations < 0 || joint_iterations < 0) {
        throw std::invalid_argument("train: iteration counts must be non-negative");
    }
    if (densify_interval < 0) throw std::invalid_argument("train: densify_interval must be >= 0");
    if (opacity_reset_interval < 0)
        throw std::invalid_argument("train: opacity_reset_interval must be >= 0");
    if (max_world_scale < 0)
        throw std::invalid_argument("train: max_world_scale must be >= 0");
    for (double lr : {lr_position, lr_position_final, lr_rotation, lr_scale, lr_opacity, lr_sh,
                      lr_delta}) {
        if (!(lr > 0.0)) throw std::invalid_argument("train: learning rates must be positive");
    }
    if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1)) {
        throw std::invalid_argument("train: adam betas must be in [0, 1)");
    }
    if (checkpoint_interval < 0) {
        throw std::invalid_argument("train: checkpoint_interval must be >= 0");
    }
}

void Trainer::EntityState::reset_optimizer() {
    const size_t n = set.position.size();
    adam_position.resize(n * 3);
    adam_rotation.resize(n * 4);
    adam_scale.resize(n * 3);
    adam_opacity.resize(n);
    adam_sh.resize(set.sh.size());
    adam_delta.resize(static_cast<size_t>(weights.delta.size()));
    accum.resize(static_cast<int>(n));
}

Trainer::Trainer(TrainData data, std::vector<Checkpoint::Entity> entities, TrainOptions opts)
    : data_(std::move(data)), opts_(std::move(opts)) {
    opts_.train.validate();
    opts_.losses.validate();
    data_.skeleton.validate();
    if (entities.empty()) throw std::invalid_argument("trainer: no entities");
    if (data_.cameras.empty() || data_.frames.empty()) {
        throw std::invalid_argument("trainer: no cameras or frames");
    }
    for (const auto& cam : data_.cameras) cam.validate();
    for (const auto& f : data_.frames) {
        if (f.camera < 0 || f.camera >= static_cast<int>(data_.cameras.size())) {
            throw std::invalid_argument("trainer: frame camera index out of range");
        }
        const auto& cam = data_.cameras[f.camera];
        const size_t npx = static_cast<size_t>(cam.width) * cam.height;
        if (f.target.size() != npx * 3) {
            throw std::invalid_argument("trainer: frame target size mismatch");
        }
        if (f.masks.size() != entities.size()) {
            throw std::invalid_argument("trainer: one mask per entity required");
        }
        for (const auto& m : f.masks) {
            if (m.size() != npx) throw std::invalid_argument("trainer: mask size mismatch");
        }
        if (f.pose.joint_count() != data_.skeleton.joint_count()) {
            throw std::invalid_argument("trainer: frame pose joint count mismatch");
        }
    }
    overlap_.resize(data_.frames.size());
    for (size_t f = 0; f < data_.frames.size(); ++f) {
        const auto& masks = data_.frames[f].masks;
        overlap_[f].assign(masks.size(), std::vector<double>(masks[0].size(), 0.0));
        for (size_t p = 0; p < masks[0].size(); ++p) {
            int covered = 0;
            for (const auto& m : masks) covered += m[p] >= 0.5;
            if (covered > 1) {
                for (size_t e = 0; e < masks.size(); ++e) {
                    if (masks[e][p] >= 0.5) overlap_[f][e][p] = 1.0;
                }
            }
        }
    }
    entities_.resize(entities.size());
    for (size_t i = 0; i < entities.size(); ++i) {
        entities_[i].set = std::move(entities[i].set);
        entities_[i].weights = std::move(entities[i].weights);
        entities_[i].set.check_consistent();
        if (entities_[i].weights.joint_count() != data_.skeleton.joint_count() ||
            entities_[i].weights.gaussian_count() != entities_[i].set.size()) {
            throw std::invalid_argument("trainer: skinning weight dimensions mismatch");
        }
        entities_[i].reset_optimizer();
        if (entities_[i].set.entity == opts_.train.body_entity) body_index_ = static_cast<int>(i);
    }
}

double Trainer::position_lr(int iter, int total) const {
    const double frac = total > 0 ? static_cast<double>(iter) / total : 1.0;
    return opts_.train.lr_position *
           std::pow(opts_.train.lr_position_final / opts_.train.lr_position, frac);
}

void Trainer::apply_step(EntityState& e, const ParamGrads& g, double lr_pos) {
    const TrainConfig& tc = opts_.train;
    adam_step(flat(e.set.position), flat(g.position), e.adam_position, lr_pos, tc.adam);
    adam_step(flat(e.set.rotation), flat(g.rotation), e.adam_rotation, tc.lr_rotation, tc.adam);
    adam_step(flat(e.set.log_scale), flat(g.log_scale), e.adam_scale, tc.lr_scale, tc.adam);
    adam_step(e.set.opacity_logit, g.opacity, e.adam_opacity, tc.lr_opacity, tc.adam);
    adam_step(e.set.sh, g.sh, e.adam_sh, tc.lr_sh, tc.adam);
    adam_step({e.weights.delta.data(), static_cast<size_t>(e.weights.delta.size())},
              {g.delta.data(), static_cast<size_t>(g.delta.size())}, e.adam_delta, tc.lr_delta,
              tc.adam);
    if (tc.max_world_scale > 0) {
        // hard cap on splat size: without it the composite phase can grow
        // near-transparent screen-filling splats that wreck entity masks
        const double cap = std::log(tc.max_world_scale);
        for (auto& ls : e.set.log_scale)
            ls = ls.cwiseMin(cap);
    }
    e.set.renormalize_rotations();
}

void Trainer::densify_entity(EntityState& e, int iteration) {
    DensifyConfig cfg = opts_.train.densify;
    cfg.seed = mix(mix(opts_.train.seed, static_cast<std::uint64_t>(iteration)),
                   std::hash<std::string>{}(e.set.entity));
    DensifyResult res = densify_and_prune(e.set, e.weights, e.accum, cfg);
    const int joints = e.weights.joint_count();
    const int basis = 3 * e.set.sh_basis_size();
    adam_remap(e.adam_position, res.source_index, res.is_new, 3);
    adam_remap(e.adam_rotation, res.source_index, res.is_new, 4);
    adam_remap(e.adam_scale, res.source_index, res.is_new, 3);
    adam_remap(e.adam_opacity, res.source_index, res.is_new, 1);
    adam_remap(e.adam_sh, res.source_index, res.is_new, basis);
    adam_remap(e.adam_delta, res.source_index, res.is_new, joints);
    e.set = std::move(res.set);
    e.weights = std::move(res.weights);
    e.accum.resize(e.set.size());
}

void Trainer::record(const IterationStats& s, std::ostream* loss_csv) {
    history_.push_back(s);
    if (loss_csv) {
        *loss_csv << s.iteration << ',' << s.phase << ',' << s.entity << ',' << s.recon << ','
                  << s.mask << ',' << s.s3im << ',' << s.greg << ',' << s.iso << ',' << s.col
                  << ',' << s.total << '\n';
    }
}

void Trainer::write_csv_header(std::ostream& out) {
    out << "iteration,phase,entity,recon,mask,s3im,greg,iso,col,total\n";
}

void Trainer::check_finite(const IterationStats& s, const char* phase_name) {
    if (std::isfinite(s.total)) return;
    if (!checkpoint_dir.empty()) {
        std::filesystem::create_directories(checkpoint_dir);
        save_checkpoint(checkpoint_dir + "/diagnostic.ckpt", checkpoint());
    }
    std::ostringstream msg;
    msg << "training aborted: non-finite loss at " << phase_name << " iteration " << s.iteration
        << " (entity " << s.entity << "): recon=" << s.recon << " mask=" << s.mask
        << " s3im=" << s.s3im << " greg=" << s.greg << " iso=" << s.iso << " col=" << s.col;
    if (!checkpoint_dir.empty()) msg << "; diagnostic checkpoint written to " << checkpoint_dir;
    throw std::runtime_error(msg.str());
}

void Trainer::maybe_checkpoint(char phase, int iteration) {
    const int interval = opts_.train.checkpoint_interval;
    if (checkpoint_dir.empty() || interval <= 0 || iteration % interval != 0) return;
    std::filesystem::create_directories(checkpoint_dir);
    std::ostringstream name;
    name << checkpoint_dir << '/' << (phase == 'i' ? "isolation" : "joint") << '_' << iteration
         << ".ckpt";
    save_checkpoint(name.str(), checkpoint());
}

std::vector<int> Trainer::frame_order(std::uint64_t salt) {
    std::vector<int> order(data_.frames.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::mt19937_64 rng(mix(opts_.train.seed, salt));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

void Trainer::run_isolation(std::ostream* loss_csv) {
    const TrainConfig& tc = opts_.train;
    const LossWeights& lw = opts_.losses;
    const int total = tc.isolation_iterations;
    std::vector<int> order;

    for (int iter = 1; iter <= total; ++iter) {
        const size_t pos = static_cast<size_t>(iter - 1) % data_.frames.size();
        if (pos == 0) order = frame_order(mix(0x69736f6cULL, (iter - 1) / data_.frames.size()));
        const TrainFrame& frame = data_.frames[order[pos]];
        const Camera& cam = data_.cameras[frame.camera];
        const BoneTransforms bones = forward_kinematics(data_.skeleton, frame.pose);
        const double lr_pos = position_lr(iter, total);

        for (size_t ei = 0; ei < entities_.size(); ++ei) {
            EntityState& e = entities_[ei];
            const std::vector<double>& mask = frame.masks[ei];

            // Seeded random background per step. With a fixed background,
            // splats matching the background color are invisible in the
            // entity's own render but still occlude the other entities once
            // composited; a varying background forces them transparent.
            std::mt19937_64 bg_rng(mix(mix(tc.seed, static_cast<std::uint64_t>(iter)),
                                       0x626bull + ei));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const Vec3 bg(unit(bg_rng), unit(bg_rng), unit(bg_rng));

            // entity-isolated target: everything outside the mask is background
            std::vector<double> target(frame.target.size());
            for (size_t p = 0; p < mask.size(); ++p) {
                for (int c = 0; c < 3; ++c) {
                    target[p * 3 + c] = mask[p] > 0.5 ? frame.target[p * 3 + c] : bg[c];
                }
            }

            DeformCache dcache;
            const DeformedGaussians def = deform_gaussians(e.set, e.weights, bones, &dcache);
            RenderCache rcache;
            const RenderOutput out = render({&def}, cam, bg, opts_.render, &rcache);

            // Where another entity's mask overlaps this one, the composite
            // target shows the occluder, not this entity: tie the target to
            // the render so those pixels carry no image gradient. The mask
            // term still supervises the entity's full silhouette there.
            const std::vector<double>& ov = overlap_[order[pos]][ei];
            for (size_t p = 0; p < ov.size(); ++p) {
                if (ov[p] >= 0.5) {
                    for (int c = 0; c < 3; ++c) target[p * 3 + c] = out.image[p * 3 + c];
                }
            }

            IterationStats st;
            st.iteration = iter;
            st.phase = 'i';
            st.entity = e.set.entity;

            RenderUpstream up;
            st.recon = recon_l1(out.image, target, &up.g_image);
            std::vector<std::vector<double>> g_alpha;
            st.mask = mask_loss(out.entity_alpha, {&mask}, &g_alpha);
            std::vector<double> g_s3;
            st.s3im = s3im(out.image, target, cam.width, cam.height, lw,
                           mix(mix(tc.seed, static_cast<std::uint64_t>(iter)), ei), &g_s3);
            const auto graph = knn_graph(e.set.position, lw.knn_k, true);
            GregGrads gg;
            st.greg = gaussian_reg_loss(e.set, e.weights, graph, lw.lambda_w, lw.lambda_s, &gg);
            st.total = total_isolation(st.recon, st.mask, st.s3im, st.greg, lw);
            check_finite(st, "isolation");

            axpy(up.g_image, lw.lambda_s3im, g_s3);
            up.g_entity_alpha.resize(1);
            up.g_entity_alpha[0] = std::move(g_alpha[0]);
            for (auto& v : up.g_entity_alpha[0]) v *= lw.lambda_mask;

            const auto sg = render_backward({&def}, cam, rcache, up);
            const DeformGrads dg = deform_backward(e.set, e.weights, bones, dcache,
                                                   sg[0].g_position, sg[0].g_rot_radiance,
                                                   sg[0].g_rot_cov);

            ParamGrads g;
            g.position = dg.position;
            g.rotation = dg.rotation;
            g.log_scale = sg[0].g_log_scale;
            g.opacity = sg[0].g_opacity_logit;
            g.sh = sg[0].g_sh;
            g.delta = dg.delta;
            const double l4 = lw.lambda_greg;
            for (int i = 0; i < e.set.size(); ++i) {
                g.position[i] += l4 * gg.g_position[i];
                g.rotation[i] += l4 * gg.g_rotation[i];
                g.log_scale[i] += l4 * gg.g_log_scale[i];
                g.opacity[i] += l4 * gg.g_opacity_logit[i];
            }
            axpy(g.sh, l4, gg.g_sh);
            g.delta += l4 * gg.g_delta;

            for (int i = 0; i < e.set.size(); ++i) {
                if (sg[0].g_uv_norm[i] > 0.0) e.accum.add(i, sg[0].g_uv_norm[i]);
            }

            apply_step(e, g, lr_pos);
            record(st, loss_csv);
        }

        if (tc.densify_interval > 0 && iter % tc.densify_interval == 0 && iter < total) {
            for (auto& e : entities_) densify_entity(e, iter);
        }
        // Periodic opacity reset: clamp everything near-transparent so only
        // Gaussians with actual image evidence re-opacify. Occluded geometry
        // whose opacity gradient is blocked by identical layers behind it
        // (fading one layer reveals the same color) stays transparent.
        if (tc.opacity_reset_interval > 0 && iter % tc.opacity_reset_interval == 0 &&
            iter < total) {
            const double cap = std::log(0.01 / 0.99);
            for (auto& e : entities_) {
                for (auto& o : e.set.opacity_logit) o = std::min(o, cap);
                e.adam_opacity.resize(e.adam_opacity.m.size());
                e.adam_opacity.t = 0;
            }
        }
        maybe_checkpoint('i', iter);
    }
}

void Trainer::run_joint(std::ostream* loss_csv) {
    const TrainConfig& tc = opts_.train;
    const LossWeights& lw = opts_.losses;
    const int total = tc.joint_iterations;
    const size_t ne = entities_.size();
    std::vector<int> order;

    for (int iter = 1; iter <= total; ++iter) {
        const size_t pos = static_cast<size_t>(iter - 1) % data_.frames.size();
        if (pos == 0) order = frame_order(mix(0x6a6f696eULL, (iter - 1) / data_.frames.size()));
        const TrainFrame& frame = data_.frames[order[pos]];
        const Camera& cam = data_.cameras[frame.camera];
        const BoneTransforms bones = forward_kinematics(data_.skeleton, frame.pose);
        const std::vector<Vec3> joints = posed_joint_positions(data_.skeleton, frame.pose);
        const double lr_pos = position_lr(iter, total);

        std::vector<DeformCache> dcaches(ne);
        std::vector<DeformedGaussians> defs(ne);
        std::vector<const DeformedGaussians*> def_ptrs(ne);
        for (size_t ei = 0; ei < ne; ++ei) {
            defs[ei] = deform_gaussians(entities_[ei].set, entities_[ei].weights, bones,
                                        &dcaches[ei]);
            def_ptrs[ei] = &defs[ei];
        }
        RenderCache rcache;
        const RenderOutput out = render(def_ptrs, cam, data_.background, opts_.render, &rcache);

        IterationStats st;
        st.iteration = iter;
        st.phase = 'j';
        st.entity = "all";

        RenderUpstream up;
        st.recon = recon_l1(out.image, frame.target, &up.g_image);
        std::vector<const std::vector<double>*> mask_ptrs(ne);
        for (size_t ei = 0; ei < ne; ++ei) mask_ptrs[ei] = &frame.masks[ei];
        // in the composite, an occluded entity cannot match its silhouette
        // mask, so overlapped pixels are excluded from its alpha supervision
        std::vector<const std::vector<double>*> ignore_ptrs(ne);
        for (size_t ei = 0; ei < ne; ++ei) ignore_ptrs[ei] = &overlap_[order[pos]][ei];
        std::vector<std::vector<double>> g_alpha;
        st.mask = mask_loss(out.entity_alpha, mask_ptrs, &g_alpha, &ignore_ptrs);
        std::vector<double> g_s3;
        st.s3im = s3im(out.image, frame.target, cam.width, cam.height, lw,
                       mix(tc.seed, static_cast<std::uint64_t>(iter)), &g_s3);
        axpy(up.g_image, lw.lambda_s3im, g_s3);
        up.g_entity_alpha.resize(ne);
        for (size_t ei = 0; ei < ne; ++ei) {
            up.g_entity_alpha[ei] = std::move(g_alpha[ei]);
            for (auto& v : up.g_entity_alpha[ei]) v *= lw.lambda_mask;
        }

        auto sg = render_backward(def_ptrs, cam, rcache, up);

        // per-entity regularizers on canonical parameters
        std::vector<GregGrads> gregs(ne);
        for (size_t ei = 0; ei < ne; ++ei) {
            const auto graph = knn_graph(entities_[ei].set.position, lw.knn_k, true);
            st.greg += gaussian_reg_loss(entities_[ei].set, entities_[ei].weights, graph,
                                         lw.lambda_w, lw.lambda_s, &gregs[ei]);
        }

        // deformation isometry between canonical and observation space
        std::vector<IsoGrads> isos(ne);
        std::vector<std::vector<Mat3>> cov_obs(ne);
        for (size_t ei = 0; ei < ne; ++ei) {
            EntityState& e = entities_[ei];
            const int n = e.set.size();
            std::vector<Mat3> cov_canon(n);
            cov_obs[ei].resize(n);
            for (int i = 0; i < n; ++i) {
                cov_canon[i] =
                    covariance_from_rotation(quat_to_rot(e.set.rotation[i]), e.set.log_scale[i]);
                cov_obs[ei][i] =
                    covariance_from_rotation(defs[ei].rot_cov[i], e.set.log_scale[i]);
            }
            const auto graph = knn_graph(e.set.position, lw.knn_k, false);
            st.iso += iso_loss(defs[ei].position, cov_obs[ei], e.set.position, cov_canon, graph,
                               lw.lambda_mu, lw.lambda_sigma, &isos[ei]);
        }

        // anti-penetration between the body and each garment, posed space
        std::vector<std::vector<Vec3>> col_g(ne);
        std::vector<Vec3> col_body;
        if (body_index_ >= 0 && ne > 1) {
            col_body.assign(defs[body_index_].position.size(), Vec3::Zero());
            for (size_t ei = 0; ei < ne; ++ei) {
                if (static_cast<int>(ei) == body_index_) continue;
                std::vector<Vec3> gb, ggar;
                st.col += collision_loss(defs[body_index_].position, defs[ei].position, joints,
                                         lw.epsilon, &gb, &ggar);
                for (size_t i = 0; i < gb.size(); ++i) col_body[i] += gb[i];
                col_g[ei] = std::move(ggar);
            }
        }

        st.total = total_joint(st.recon, st.mask, st.s3im, st.greg, st.iso, st.col, lw);
        check_finite(st, "joint");

        for (size_t ei = 0; ei < ne; ++ei) {
            EntityState& e = entities_[ei];
            const int n = e.set.size();
            for (int i = 0; i < n; ++i) {
                sg[ei].g_position[i] += lw.lambda_iso * isos[ei].g_position[i];
                Mat3 g_rot;
                Vec3 g_ls;
                covariance_backward(defs[ei].rot_cov[i], e.set.log_scale[i],
                                    lw.lambda_iso * isos[ei].g_cov[i], g_rot, g_ls);
                sg[ei].g_rot_cov[i] += g_rot;
                sg[ei].g_log_scale[i] += g_ls;
            }
            if (static_cast<int>(ei) == body_index_ && !col_body.empty()) {
                for (int i = 0; i < n; ++i) sg[ei].g_position[i] += lw.lambda_col * col_body[i];
            }
            if (!col_g[ei].empty()) {
                for (int i = 0; i < n; ++i) sg[ei].g_position[i] += lw.lambda_col * col_g[ei][i];
            }

            const DeformGrads dg =
                deform_backward(e.set, e.weights, bones, dcaches[ei], sg[ei].g_position,
                                sg[ei].g_rot_radiance, sg[ei].g_rot_cov);

            ParamGrads g;
            g.position = dg.position;
            g.rotation = dg.rotation;
            g.log_scale = sg[ei].g_log_scale;
            g.opacity = sg[ei].g_opacity_logit;
            g.sh = sg[ei].g_sh;
            g.delta = dg.delta;
            const double l4 = lw.lambda_greg;
            for (int i = 0; i < n; ++i) {
                g.position[i] += l4 * gregs[ei].g_position[i];
                g.rotation[i] += l4 * gregs[ei].g_rotation[i];
                g.log_scale[i] += l4 * gregs[ei].g_log_scale[i];
                g.opacity[i] += l4 * gregs[ei].g_opacity_logit[i];
            }
            axpy(g.sh, l4, gregs[ei].g_sh);
            g.delta += l4 * gregs[ei].g_delta;

            apply_step(e, g, lr_pos);
        }
        record(st, loss_csv);
        maybe_checkpoint('j', iter);
    }
}

Checkpoint Trainer::checkpoint() const {
    Checkpoint ckpt;
    ckpt.skeleton = data_.skeleton;
    for (const auto& e : entities_) {
        ckpt.entities.push_back({e.set, e.weights});
    }
    return ckpt;
}

double Trainer::last_total() const {
    if (history_.empty()) throw std::logic_error("trainer: no iterations recorded");
    return history_.back().total;
}

}  // namespace lsplat
