#include "lsplat/splatting/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lsplat/gaussians/covariance.hpp"
#include "lsplat/gaussians/sh.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lsplat {

namespace {

struct Geom {
    bool ok = false;
    Vec3 p_cam = Vec3::Zero();
    Mat23 j = Mat23::Zero();
    Mat23 m = Mat23::Zero();
    Mat3 cov3d = Mat3::Zero();
    Mat2 cov2d = Mat2::Zero();
    Mat2 conic = Mat2::Zero();
    Vec3 view_dir = Vec3::Zero();   // unit, camera center -> gaussian
    double view_len = 0.0;
};

Geom compute_geom(const Vec3& pos, const Mat3& rot_cov, const Vec3& log_scale,
                  const Camera& cam, double blur) {
    Geom g;
    const Mat3 w = cam.rotation();
    g.p_cam = w * pos + cam.translation();
    if (g.p_cam.z() <= cam.near) return g;
    const double iz = 1.0 / g.p_cam.z();
    g.j << cam.fx * iz, 0, -cam.fx * g.p_cam.x() * iz * iz,
           0, cam.fy * iz, -cam.fy * g.p_cam.y() * iz * iz;
    g.m = g.j * w;
    g.cov3d = covariance_from_rotation(rot_cov, log_scale);
    g.cov2d = g.m * g.cov3d * g.m.transpose();
    g.cov2d(0, 0) += blur;
    g.cov2d(1, 1) += blur;
    const double det = g.cov2d.determinant();
    if (!(det > 0.0) || !g.cov2d.allFinite()) return g;
    g.conic << g.cov2d(1, 1) / det, -g.cov2d(0, 1) / det,
               -g.cov2d(1, 0) / det, g.cov2d(0, 0) / det;
    const Vec3 v = pos - cam.center();
    g.view_len = v.norm();
    g.view_dir = g.view_len > 0 ? Vec3(v / g.view_len) : Vec3(0, 0, 1);
    g.ok = true;
    return g;
}

void check_finite(const std::vector<const DeformedGaussians*>& sets) {
    for (size_t s = 0; s < sets.size(); ++s) {
        const auto& dg = *sets[s];
        const auto& src = *dg.source;
        for (int i = 0; i < dg.size(); ++i) {
            bool ok = dg.position[i].allFinite() && dg.rot_cov[i].allFinite() &&
                      dg.rot_radiance[i].allFinite() && src.log_scale[i].allFinite() &&
                      std::isfinite(src.opacity_logit[i]);
            const double* f = src.sh_at(i);
            for (int k = 0; ok && k < 3 * src.sh_basis_size(); ++k) ok = std::isfinite(f[k]);
            if (!ok)
                throw std::runtime_error("render: non-finite attribute, set " +
                                         std::to_string(s) + " gaussian " + std::to_string(i));
        }
    }
}

}  // namespace

RenderOutput render(const std::vector<const DeformedGaussians*>& sets, const Camera& cam,
                    const Vec3& background, const RenderSettings& st, RenderCache* cache) {
    cam.validate();
    check_finite(sets);

    const int w = cam.width, h = cam.height;
    const size_t npx = static_cast<size_t>(w) * h;

    RenderOutput out;
    out.width = w;
    out.height = h;
    out.image.assign(npx * 3, 0.0);
    out.total_alpha.assign(npx, 0.0);
    out.contributor_count.assign(npx, 0);
    out.entity_names.resize(sets.size());
    out.entity_alpha.resize(sets.size());
    for (size_t s = 0; s < sets.size(); ++s) {
        out.entity_names[s] = sets[s]->source->entity;
        out.entity_alpha[s].assign(npx, 0.0);
    }

    std::vector<int> offset(sets.size() + 1, 0);
    for (size_t s = 0; s < sets.size(); ++s) offset[s + 1] = offset[s] + sets[s]->size();
    const int n = offset.back();

    RenderCache local_cache;
    RenderCache& c = cache ? *cache : local_cache;
    c.splats.assign(n, {});
    c.final_t.assign(npx, 1.0);
    c.n_composited.assign(npx, 0);
    c.background = background;
    c.settings = st;

    std::vector<double> radius(n, 0.0);
    const int nthreads = std::max(1, st.threads);

#pragma omp parallel for num_threads(nthreads) schedule(static)
    for (int g = 0; g < n; ++g) {
        int s = 0;
        while (offset[s + 1] <= g) ++s;
        const int i = g - offset[s];
        const auto& dg = *sets[s];
        const auto& src = *dg.source;
        auto& sp = c.splats[g];
        sp.set = s;
        sp.local = i;

        const Geom geo =
            compute_geom(dg.position[i], dg.rot_cov[i], src.log_scale[i], cam, st.cov2d_blur);
        sp.depth = geo.p_cam.z();
        if (!geo.ok) continue;
        sp.valid = true;
        sp.uv = Vec2(cam.fx * geo.p_cam.x() / geo.p_cam.z() + cam.cx,
                     cam.fy * geo.p_cam.y() / geo.p_cam.z() + cam.cy);
        sp.conic = geo.conic;
        sp.opacity = sigmoid(src.opacity_logit[i]);

        // largest screen-space eigenvalue bounds the footprint
        const double mid = 0.5 * (geo.cov2d(0, 0) + geo.cov2d(1, 1));
        const double disc = std::sqrt(std::max(
            0.0, mid * mid - geo.cov2d.determinant()));
        radius[g] = std::ceil(st.footprint_sigma * std::sqrt(mid + disc));

        sp.color_raw = Vec3::Constant(0.5);
        double basis[sh_basis_size(kMaxShDegree)];
        const Vec3 local = dg.rot_radiance[i].transpose() * geo.view_dir;
        sh_basis(src.sh_degree, local, basis);
        const int nb = src.sh_basis_size();
        const double* f = src.sh_at(i);
        for (int ch = 0; ch < 3; ++ch)
            for (int b = 0; b < nb; ++b) sp.color_raw[ch] += f[ch * nb + b] * basis[b];
        sp.color = sp.color_raw.cwiseMax(0.0);
    }

    for (int g = 0; g < n; ++g) {
        const auto& sp = c.splats[g];
        if (!sp.valid && sp.depth <= cam.near) out.culled.push_back(g);
    }

    // global depth order, ties by insertion index
    std::vector<int> order;
    order.reserve(n);
    for (int g = 0; g < n; ++g)
        if (c.splats[g].valid) order.push_back(g);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return c.splats[a].depth < c.splats[b].depth;
    });

    const int ts = st.tile_size;
    c.tiles_x = (w + ts - 1) / ts;
    c.tiles_y = (h + ts - 1) / ts;
    c.tile_lists.assign(static_cast<size_t>(c.tiles_x) * c.tiles_y, {});
    for (int g : order) {
        const auto& sp = c.splats[g];
        const double r = radius[g];
        const int tx0 = std::clamp(static_cast<int>((sp.uv.x() - r) / ts), 0, c.tiles_x - 1);
        const int tx1 = std::clamp(static_cast<int>((sp.uv.x() + r) / ts), 0, c.tiles_x - 1);
        const int ty0 = std::clamp(static_cast<int>((sp.uv.y() - r) / ts), 0, c.tiles_y - 1);
        const int ty1 = std::clamp(static_cast<int>((sp.uv.y() + r) / ts), 0, c.tiles_y - 1);
        if (sp.uv.x() + r < 0 || sp.uv.x() - r > w || sp.uv.y() + r < 0 || sp.uv.y() - r > h)
            continue;
        for (int ty = ty0; ty <= ty1; ++ty)
            for (int tx = tx0; tx <= tx1; ++tx)
                c.tile_lists[static_cast<size_t>(ty) * c.tiles_x + tx].push_back(g);
    }

    const double power_cutoff = -0.5 * st.footprint_sigma * st.footprint_sigma;
    const int ntiles = c.tiles_x * c.tiles_y;

#pragma omp parallel for num_threads(nthreads) schedule(dynamic)
    for (int t = 0; t < ntiles; ++t) {
        const auto& list = c.tile_lists[t];
        const int px0 = (t % c.tiles_x) * ts, py0 = (t / c.tiles_x) * ts;
        const int px1 = std::min(px0 + ts, w), py1 = std::min(py0 + ts, h);
        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                const size_t pix = static_cast<size_t>(py) * w + px;
                const double fx = px + 0.5, fy = py + 0.5;
                double trans = 1.0;
                Vec3 acc = Vec3::Zero();
                int count = 0;
                for (int g : list) {
                    const auto& sp = c.splats[g];
                    const double dx = sp.uv.x() - fx, dy = sp.uv.y() - fy;
                    const double power =
                        -0.5 * (sp.conic(0, 0) * dx * dx + sp.conic(1, 1) * dy * dy) -
                        sp.conic(0, 1) * dx * dy;
                    if (power < power_cutoff) continue;
                    const double alpha =
                        std::min(st.alpha_clamp, sp.opacity * std::exp(power));
                    if (alpha < st.alpha_min || alpha <= 0.0) continue;
                    const double wgt = alpha * trans;
                    acc += wgt * sp.color;
                    out.entity_alpha[sp.set][pix] += wgt;
                    out.total_alpha[pix] += wgt;
                    ++count;
                    trans *= 1.0 - alpha;
                    if (trans < st.transmittance_min) break;
                }
                acc += trans * background;
                out.image[pix * 3 + 0] = acc[0];
                out.image[pix * 3 + 1] = acc[1];
                out.image[pix * 3 + 2] = acc[2];
                c.final_t[pix] = trans;
                c.n_composited[pix] = count;
                out.contributor_count[pix] = count;
            }
        }
    }

    return out;
}

std::vector<SplatGrads> render_backward(const std::vector<const DeformedGaussians*>& sets,
                                        const Camera& cam, const RenderCache& cache,
                                        const RenderUpstream& upstream) {
    const int w = cam.width, h = cam.height;
    const size_t npx = static_cast<size_t>(w) * h;
    if (upstream.g_image.size() != npx * 3)
        throw std::invalid_argument("render_backward: upstream image gradient size mismatch");

    std::vector<int> offset(sets.size() + 1, 0);
    for (size_t s = 0; s < sets.size(); ++s) offset[s + 1] = offset[s] + sets[s]->size();
    const int n = offset.back();
    if (static_cast<int>(cache.splats.size()) != n)
        throw std::logic_error("render_backward: cache does not match scene");

    const RenderSettings& st = cache.settings;
    const int nthreads = std::max(1, st.threads);
    const int ts = st.tile_size;
    const double power_cutoff = -0.5 * st.footprint_sigma * st.footprint_sigma;
    const int ntiles = cache.tiles_x * cache.tiles_y;

    const bool has_ea = !upstream.g_entity_alpha.empty();
    const bool has_ta = !upstream.g_total_alpha.empty();

    // per-splat pixel-level accumulators: gc[3], g_eta, g_uv[2], g_conic[3]
    struct Accum {
        std::array<double, 9> v{};
    };
    std::vector<std::vector<Accum>> tile_accum(ntiles);

#pragma omp parallel for num_threads(nthreads) schedule(dynamic)
    for (int t = 0; t < ntiles; ++t) {
        const auto& list = cache.tile_lists[t];
        if (list.empty()) continue;
        auto& accum = tile_accum[t];
        accum.assign(list.size(), {});

        struct Entry {
            int pos;
            double alpha, trans;
        };
        std::vector<Entry> stack;
        stack.reserve(64);

        const int px0 = (t % cache.tiles_x) * ts, py0 = (t / cache.tiles_x) * ts;
        const int px1 = std::min(px0 + ts, w), py1 = std::min(py0 + ts, h);
        for (int py = py0; py < py1; ++py) {
            for (int px = px0; px < px1; ++px) {
                const size_t pix = static_cast<size_t>(py) * w + px;
                const int ncomp = cache.n_composited[pix];
                const double fx = px + 0.5, fy = py + 0.5;
                const Vec3 g_c(upstream.g_image[pix * 3 + 0], upstream.g_image[pix * 3 + 1],
                               upstream.g_image[pix * 3 + 2]);
                const double g_ta = has_ta ? upstream.g_total_alpha[pix] : 0.0;

                // replay front-to-back to rebuild the contributor stack
                stack.clear();
                double trans = 1.0;
                for (size_t li = 0; li < list.size() && static_cast<int>(stack.size()) < ncomp;
                     ++li) {
                    const auto& sp = cache.splats[list[li]];
                    const double dx = sp.uv.x() - fx, dy = sp.uv.y() - fy;
                    const double power =
                        -0.5 * (sp.conic(0, 0) * dx * dx + sp.conic(1, 1) * dy * dy) -
                        sp.conic(0, 1) * dx * dy;
                    if (power < power_cutoff) continue;
                    const double alpha =
                        std::min(st.alpha_clamp, sp.opacity * std::exp(power));
                    if (alpha < st.alpha_min || alpha <= 0.0) continue;
                    stack.push_back({static_cast<int>(li), alpha, trans});
                    trans *= 1.0 - alpha;
                }
                const double t_final = cache.final_t[pix];
                const double g_t_direct = cache.background.dot(g_c);

                double suffix = 0.0;
                for (int k = static_cast<int>(stack.size()) - 1; k >= 0; --k) {
                    const auto& e = stack[k];
                    const auto& sp = cache.splats[list[e.pos]];
                    const double g_ea =
                        has_ea && !upstream.g_entity_alpha[sp.set].empty()
                            ? upstream.g_entity_alpha[sp.set][pix]
                            : 0.0;
                    const double u = sp.color.dot(g_c) + g_ea + g_ta;
                    const double wgt = e.alpha * e.trans;
                    auto& a = accum[e.pos].v;
                    a[0] += wgt * g_c[0];
                    a[1] += wgt * g_c[1];
                    a[2] += wgt * g_c[2];
                    const double d_alpha =
                        u * e.trans - (suffix + g_t_direct * t_final) / (1.0 - e.alpha);
                    suffix += u * wgt;
                    if (e.alpha >= st.alpha_clamp) continue;  // clamped: flat
                    const double d_power = d_alpha * e.alpha;          // (d/dG) * G
                    a[3] += d_alpha * (e.alpha / sp.opacity);          // d/d eta (G value)
                    const double dx = sp.uv.x() - fx, dy = sp.uv.y() - fy;
                    a[4] += d_power * -(sp.conic(0, 0) * dx + sp.conic(0, 1) * dy);
                    a[5] += d_power * -(sp.conic(0, 1) * dx + sp.conic(1, 1) * dy);
                    a[6] += d_power * -0.5 * dx * dx;
                    a[7] += d_power * -dx * dy;
                    a[8] += d_power * -0.5 * dy * dy;
                }
            }
        }
    }

    // deterministic reduction in tile order
    std::vector<std::array<double, 9>> acc(n, std::array<double, 9>{});
    for (int t = 0; t < ntiles; ++t) {
        const auto& list = cache.tile_lists[t];
        if (tile_accum[t].empty()) continue;
        for (size_t li = 0; li < list.size(); ++li) {
            auto& dst = acc[list[li]];
            const auto& src = tile_accum[t][li].v;
            for (int k = 0; k < 9; ++k) dst[k] += src[k];
        }
    }

    std::vector<SplatGrads> grads(sets.size());
    for (size_t s = 0; s < sets.size(); ++s) {
        const int ns = sets[s]->size();
        grads[s].g_position.assign(ns, Vec3::Zero());
        grads[s].g_rot_radiance.assign(ns, Mat3::Zero());
        grads[s].g_rot_cov.assign(ns, Mat3::Zero());
        grads[s].g_log_scale.assign(ns, Vec3::Zero());
        grads[s].g_opacity_logit.assign(ns, 0.0);
        grads[s].g_sh.assign(sets[s]->source->sh.size(), 0.0);
        grads[s].g_uv_norm.assign(ns, 0.0);
    }

#pragma omp parallel for num_threads(nthreads) schedule(static)
    for (int g = 0; g < n; ++g) {
        const auto& sp = cache.splats[g];
        if (!sp.valid) continue;
        const auto& dg = *sets[sp.set];
        const auto& src = *dg.source;
        const int i = sp.local;
        auto& gr = grads[sp.set];
        const auto& a = acc[g];

        const Geom geo = compute_geom(dg.position[i], dg.rot_cov[i], src.log_scale[i], cam,
                                      st.cov2d_blur);

        // conic -> cov2d
        Mat2 g_conic;
        g_conic << a[6], 0.5 * a[7], 0.5 * a[7], a[8];
        Mat2 g_cov2d = -geo.conic * g_conic * geo.conic;
        g_cov2d = Mat2(0.5 * (g_cov2d + g_cov2d.transpose()));

        // cov2d = M cov3d M^T
        const Mat3 g_cov3d = geo.m.transpose() * g_cov2d * geo.m;
        const Mat23 g_m = 2.0 * g_cov2d * geo.m * geo.cov3d;

        Mat3 g_rot_cov;
        Vec3 g_ls;
        covariance_backward(dg.rot_cov[i], src.log_scale[i], g_cov3d, g_rot_cov, g_ls);

        // M = J * W
        const Mat23 g_j = g_m * cam.rotation().transpose();
        const double z = geo.p_cam.z(), iz = 1.0 / z;
        Vec3 g_pcam = Vec3::Zero();
        g_pcam.x() += g_j(0, 2) * (-cam.fx * iz * iz);
        g_pcam.y() += g_j(1, 2) * (-cam.fy * iz * iz);
        g_pcam.z() += g_j(0, 0) * (-cam.fx * iz * iz) +
                      g_j(0, 2) * (2.0 * cam.fx * geo.p_cam.x() * iz * iz * iz) +
                      g_j(1, 1) * (-cam.fy * iz * iz) +
                      g_j(1, 2) * (2.0 * cam.fy * geo.p_cam.y() * iz * iz * iz);

        // projection uv
        const Vec2 g_uv(a[4], a[5]);
        g_pcam.x() += g_uv.x() * cam.fx * iz;
        g_pcam.y() += g_uv.y() * cam.fy * iz;
        g_pcam.z() += g_uv.x() * (-cam.fx * geo.p_cam.x() * iz * iz) +
                      g_uv.y() * (-cam.fy * geo.p_cam.y() * iz * iz);

        // radiance chain
        const int nb = src.sh_basis_size();
        double basis[sh_basis_size(kMaxShDegree)];
        Vec3 bgrad[sh_basis_size(kMaxShDegree)];
        const Vec3 local = dg.rot_radiance[i].transpose() * geo.view_dir;
        sh_basis_with_grad(src.sh_degree, local, basis, bgrad);
        const double* f = src.sh_at(i);
        double* gf = gr.g_sh.data() + static_cast<size_t>(i) * 3 * nb;
        Vec3 g_local = Vec3::Zero();
        for (int ch = 0; ch < 3; ++ch) {
            const double gc_ch = sp.color_raw[ch] > 0.0 ? a[ch] : 0.0;
            if (gc_ch == 0.0) continue;
            for (int b = 0; b < nb; ++b) {
                gf[ch * nb + b] = gc_ch * basis[b];
                g_local += gc_ch * f[ch * nb + b] * bgrad[b];
            }
        }
        gr.g_rot_radiance[i] = geo.view_dir * g_local.transpose();
        const Vec3 g_dir = dg.rot_radiance[i] * g_local;
        Vec3 g_pos = Vec3::Zero();
        if (geo.view_len > 0.0)
            g_pos = (g_dir - geo.view_dir * geo.view_dir.dot(g_dir)) / geo.view_len;

        g_pos += cam.rotation().transpose() * g_pcam;

        gr.g_position[i] = g_pos;
        gr.g_rot_cov[i] = g_rot_cov;
        gr.g_log_scale[i] = g_ls;
        gr.g_opacity_logit[i] = a[3] * sp.opacity * (1.0 - sp.opacity);
        gr.g_uv_norm[i] = g_uv.norm();
    }

    return grads;
}

}  // namespace lsplat
