#include "lsplat/losses/losses.hpp"

#include <limits>
#include <random>
#include <stdexcept>

namespace lsplat {

void LossWeights::validate() const {
    for (double l : {lambda_mask, lambda_s3im, lambda_greg, lambda_iso, lambda_col, lambda_mu,
                     lambda_sigma, lambda_w, lambda_s})
        if (l < 0) throw std::invalid_argument("loss weights must be non-negative");
    if (s3im_kernel > s3im_patch)
        throw std::invalid_argument("s3im kernel must not exceed the patch size");
    if (s3im_reps < 1) throw std::invalid_argument("s3im repetitions must be >= 1");
    if (knn_k < 1) throw std::invalid_argument("knn neighborhood size must be >= 1");
}

double recon_l1(const std::vector<double>& rendered, const std::vector<double>& target,
                std::vector<double>* grad) {
    if (rendered.size() != target.size() || rendered.empty())
        throw std::invalid_argument("recon_l1: image size mismatch");
    const double inv = 1.0 / rendered.size();
    if (grad) grad->assign(rendered.size(), 0.0);
    double sum = 0.0;
    for (size_t i = 0; i < rendered.size(); ++i) {
        const double d = rendered[i] - target[i];
        sum += std::abs(d);
        if (grad && d != 0.0) (*grad)[i] = (d > 0 ? inv : -inv);
    }
    return sum * inv;
}

double mask_loss(const std::vector<std::vector<double>>& entity_alpha,
                 const std::vector<const std::vector<double>*>& masks,
                 std::vector<std::vector<double>>* grads,
                 const std::vector<const std::vector<double>*>* ignore) {
    if (entity_alpha.size() != masks.size() || entity_alpha.empty())
        throw std::invalid_argument("mask_loss: entity count mismatch");
    if (ignore && ignore->size() != entity_alpha.size())
        throw std::invalid_argument("mask_loss: ignore count mismatch");
    if (grads) grads->assign(entity_alpha.size(), {});
    double total = 0.0;
    for (size_t e = 0; e < entity_alpha.size(); ++e) {
        const auto& alpha = entity_alpha[e];
        const auto& mask = *masks[e];
        if (alpha.size() != mask.size())
            throw std::invalid_argument("mask_loss: mask size mismatch");
        const std::vector<double>* skip = ignore ? (*ignore)[e] : nullptr;
        if (skip && skip->size() != alpha.size())
            throw std::invalid_argument("mask_loss: ignore size mismatch");
        size_t counted = alpha.size();
        if (skip) {
            counted = 0;
            for (double v : *skip) counted += v < 0.5;
        }
        if (grads) (*grads)[e].assign(alpha.size(), 0.0);
        if (counted == 0) continue;
        const double inv = 1.0 / (counted * entity_alpha.size());
        for (size_t p = 0; p < alpha.size(); ++p) {
            if (skip && (*skip)[p] >= 0.5) continue;
            const double d = alpha[p] - mask[p];
            total += std::abs(d) * inv;
            if (grads && d != 0.0) (*grads)[e][p] = (d > 0 ? inv : -inv);
        }
    }
    return total;
}

namespace {

std::vector<double> gaussian_window(int kernel, double sigma = 1.5) {
    std::vector<double> w1(kernel);
    double sum = 0.0;
    for (int i = 0; i < kernel; ++i) {
        const double x = i - (kernel - 1) / 2.0;
        w1[i] = std::exp(-x * x / (2 * sigma * sigma));
        sum += w1[i];
    }
    for (auto& v : w1) v /= sum;
    std::vector<double> w(static_cast<size_t>(kernel) * kernel);
    for (int y = 0; y < kernel; ++y)
        for (int x = 0; x < kernel; ++x) w[y * kernel + x] = w1[y] * w1[x];
    return w;
}

constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

}  // namespace

double ssim(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
            int kernel, int stride, std::vector<double>* grad_a) {
    if (a.size() != b.size() || a.size() != static_cast<size_t>(width) * height * 3)
        throw std::invalid_argument("ssim: image size mismatch");
    if (kernel < 1 || kernel > std::min(width, height))
        throw std::invalid_argument("ssim: kernel exceeds image");
    if (stride < 1) throw std::invalid_argument("ssim: stride must be >= 1");

    const auto win = gaussian_window(kernel);
    if (grad_a) grad_a->assign(a.size(), 0.0);

    long n_windows = 0;
    double total = 0.0;
    for (int y0 = 0; y0 + kernel <= height; y0 += stride) {
        for (int x0 = 0; x0 + kernel <= width; x0 += stride) {
            for (int ch = 0; ch < 3; ++ch) {
                double mu1 = 0, mu2 = 0, m11 = 0, m22 = 0, m12 = 0;
                for (int dy = 0; dy < kernel; ++dy) {
                    for (int dx = 0; dx < kernel; ++dx) {
                        const double w = win[dy * kernel + dx];
                        const size_t p =
                            (static_cast<size_t>(y0 + dy) * width + (x0 + dx)) * 3 + ch;
                        mu1 += w * a[p];
                        mu2 += w * b[p];
                        m11 += w * a[p] * a[p];
                        m22 += w * b[p] * b[p];
                        m12 += w * a[p] * b[p];
                    }
                }
                const double s1 = m11 - mu1 * mu1;
                const double s2 = m22 - mu2 * mu2;
                const double s12 = m12 - mu1 * mu2;
                const double t1 = 2 * mu1 * mu2 + kSsimC1;
                const double t2 = 2 * s12 + kSsimC2;
                const double b1 = mu1 * mu1 + mu2 * mu2 + kSsimC1;
                const double b2 = s1 + s2 + kSsimC2;
                const double s = (t1 * t2) / (b1 * b2);
                total += s;
                ++n_windows;
                if (grad_a) {
                    const double ds_dmu1 = 2 * mu2 * t2 / (b1 * b2) - s * 2 * mu1 / b1;
                    const double ds_ds12 = 2 * t1 / (b1 * b2);
                    const double ds_ds1 = -s / b2;
                    for (int dy = 0; dy < kernel; ++dy) {
                        for (int dx = 0; dx < kernel; ++dx) {
                            const double w = win[dy * kernel + dx];
                            const size_t p =
                                (static_cast<size_t>(y0 + dy) * width + (x0 + dx)) * 3 + ch;
                            (*grad_a)[p] += w * (ds_dmu1 + ds_ds1 * 2 * (a[p] - mu1) +
                                                 ds_ds12 * (b[p] - mu2));
                        }
                    }
                }
            }
        }
    }
    if (n_windows == 0) throw std::logic_error("ssim: no valid windows");
    if (grad_a)
        for (auto& g : *grad_a) g /= n_windows;
    return total / n_windows;
}

double s3im(const std::vector<double>& rendered, const std::vector<double>& target, int width,
            int height, const LossWeights& w, std::uint64_t seed, std::vector<double>* grad) {
    const int p = std::min({w.s3im_patch, width, height});
    if (p < w.s3im_kernel) throw std::invalid_argument("s3im: patch smaller than kernel");
    if (grad) grad->assign(rendered.size(), 0.0);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dx(0, width - p), dy(0, height - p);

    auto crop = [&](const std::vector<double>& img, int x0, int y0) {
        std::vector<double> out(static_cast<size_t>(p) * p * 3);
        for (int y = 0; y < p; ++y)
            for (int x = 0; x < p; ++x)
                for (int ch = 0; ch < 3; ++ch)
                    out[(static_cast<size_t>(y) * p + x) * 3 + ch] =
                        img[(static_cast<size_t>(y0 + y) * width + (x0 + x)) * 3 + ch];
        return out;
    };

    double total = 0.0;
    std::vector<double> patch_grad;
    for (int r = 0; r < w.s3im_reps; ++r) {
        const int x0 = dx(rng), y0 = dy(rng);
        const auto pa = crop(rendered, x0, y0);
        const auto pb = crop(target, x0, y0);
        const double s =
            ssim(pa, pb, p, p, w.s3im_kernel, w.s3im_stride, grad ? &patch_grad : nullptr);
        total += 1.0 - s;
        if (grad) {
            const double scale = -1.0 / w.s3im_reps;
            for (int y = 0; y < p; ++y)
                for (int x = 0; x < p; ++x)
                    for (int ch = 0; ch < 3; ++ch)
                        (*grad)[(static_cast<size_t>(y0 + y) * width + (x0 + x)) * 3 + ch] +=
                            scale * patch_grad[(static_cast<size_t>(y) * p + x) * 3 + ch];
        }
    }
    return total / w.s3im_reps;
}

double iso_loss(const std::vector<Vec3>& position, const std::vector<Mat3>& cov,
                const std::vector<Vec3>& position0, const std::vector<Mat3>& cov0,
                const std::vector<std::vector<int>>& graph, double lambda_mu,
                double lambda_sigma, IsoGrads* grads) {
    const size_t n = position.size();
    if (cov.size() != n || position0.size() != n || cov0.size() != n || graph.size() != n)
        throw std::invalid_argument("iso_loss: input size mismatch");
    if (grads) {
        grads->g_position.assign(n, Vec3::Zero());
        grads->g_cov.assign(n, Mat3::Zero());
    }
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        for (int j : graph[i]) {
            const Vec3 dmu = position[i] - position[j];
            const double dist = dmu.norm();
            const double dist0 = (position0[i] - position0[j]).norm();
            total += lambda_mu * std::abs(dist - dist0);
            if (grads && dist > 0 && dist != dist0) {
                const double sgn = dist > dist0 ? lambda_mu : -lambda_mu;
                const Vec3 g = sgn * dmu / dist;
                grads->g_position[i] += g;
                grads->g_position[j] -= g;
            }
            const Mat3 dsig = cov[i] - cov[j];
            const double fro = dsig.norm();
            const double fro0 = (cov0[i] - cov0[j]).norm();
            total += lambda_sigma * std::abs(fro - fro0);
            if (grads && fro > 0 && fro != fro0) {
                const double sgn = fro > fro0 ? lambda_sigma : -lambda_sigma;
                const Mat3 g = sgn * dsig / fro;
                grads->g_cov[i] += g;
                grads->g_cov[j] -= g;
            }
        }
    }
    return total;
}

namespace {

// population std over neighborhood values for one dimension; pushes gradient
// contributions scaled by `scale` back to the members
double std_term(const std::vector<double>& vals, std::vector<double>* gval, double scale) {
    const double k = static_cast<double>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= k;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= k;
    const double sd = std::sqrt(var);
    if (gval && sd > 1e-12) {
        for (size_t m = 0; m < vals.size(); ++m)
            (*gval)[m] += scale * (vals[m] - mean) / (k * sd);
    }
    return sd;
}

}  // namespace

double gaussian_reg_loss(const GaussianSet& set, const SkinningWeights& weights,
                         const std::vector<std::vector<int>>& graph, double lambda_w,
                         double lambda_s, GregGrads* grads) {
    const int n = set.size();
    if (static_cast<int>(graph.size()) != n || weights.gaussian_count() != n)
        throw std::invalid_argument("gaussian_reg_loss: input size mismatch");
    const int nj = weights.joint_count();
    const int nb = set.sh_basis_size();
    if (grads) {
        grads->g_position.assign(n, Vec3::Zero());
        grads->g_rotation.assign(n, Vec4::Zero());
        grads->g_log_scale.assign(n, Vec3::Zero());
        grads->g_opacity_logit.assign(n, 0.0);
        grads->g_sh.assign(set.sh.size(), 0.0);
        grads->g_delta = MatX::Zero(nj, n);
    }

    const double inv_n = 1.0 / n;
    double total = 0.0;
    std::vector<double> vals, gval;

    // per-dimension std across the neighborhood, averaged per attribute
    auto attr = [&](const std::vector<int>& nbrs, int dims,
                    auto&& get, auto&& push) {
        double sum = 0.0;
        for (int d = 0; d < dims; ++d) {
            vals.resize(nbrs.size());
            for (size_t m = 0; m < nbrs.size(); ++m) vals[m] = get(nbrs[m], d);
            if (grads) gval.assign(nbrs.size(), 0.0);
            sum += std_term(vals, grads ? &gval : nullptr, 1.0);
            if (grads)
                for (size_t m = 0; m < nbrs.size(); ++m)
                    if (gval[m] != 0.0) push(nbrs[m], d, gval[m] * inv_n / dims);
        }
        return sum / dims;
    };

    for (int i = 0; i < n; ++i) {
        const auto& nbrs = graph[i];
        total += inv_n * attr(nbrs, 3, [&](int m, int d) { return set.position[m][d]; },
                              [&](int m, int d, double g) { grads->g_position[m][d] += g; });
        total += inv_n * attr(nbrs, 4, [&](int m, int d) { return set.rotation[m][d]; },
                              [&](int m, int d, double g) { grads->g_rotation[m][d] += g; });
        total += inv_n * attr(nbrs, 3, [&](int m, int d) { return std::exp(set.log_scale[m][d]); },
                              [&](int m, int d, double g) {
                                  grads->g_log_scale[m][d] += g * std::exp(set.log_scale[m][d]);
                              });
        total += inv_n * attr(nbrs, 1, [&](int m, int) { return set.opacity(m); },
                              [&](int m, int, double g) {
                                  const double o = set.opacity(m);
                                  grads->g_opacity_logit[m] += g * o * (1 - o);
                              });
        total += inv_n * attr(nbrs, 3 * nb, [&](int m, int d) { return set.sh_at(m)[d]; },
                              [&](int m, int d, double g) {
                                  grads->g_sh[static_cast<size_t>(m) * 3 * nb + d] += g;
                              });
        total += inv_n *
                 attr(nbrs, nj,
                      [&](int m, int d) { return weights.base(d, m) + weights.delta(d, m); },
                      [&](int m, int d, double g) { grads->g_delta(d, m) += g; });

        // weight-norm and max-scale penalties
        const VecX dw = weights.delta.col(i);
        const VecX eff = weights.base.col(i) + dw;
        const double dwn = dw.norm(), effn = eff.norm();
        total += inv_n * lambda_w * (dwn + effn);
        if (grads) {
            if (dwn > 1e-12) grads->g_delta.col(i) += inv_n * lambda_w * dw / dwn;
            if (effn > 1e-12) grads->g_delta.col(i) += inv_n * lambda_w * eff / effn;
        }
        const Vec3 s = set.scale(i);
        int arg = 0;
        s.maxCoeff(&arg);
        total += inv_n * lambda_s * s[arg];
        if (grads) grads->g_log_scale[i][arg] += inv_n * lambda_s * s[arg];
    }
    return total;
}

double collision_loss(const std::vector<Vec3>& body, const std::vector<Vec3>& garment,
                      const std::vector<Vec3>& joints, double epsilon,
                      std::vector<Vec3>* g_body, std::vector<Vec3>* g_garment) {
    if (garment.empty() || joints.empty())
        throw std::invalid_argument("collision_loss: empty garment or joint set");
    if (g_body) g_body->assign(body.size(), Vec3::Zero());
    if (g_garment) g_garment->assign(garment.size(), Vec3::Zero());

    auto nearest = [](const Vec3& p, const std::vector<Vec3>& pts) {
        int best = 0;
        double bd = std::numeric_limits<double>::max();
        for (size_t i = 0; i < pts.size(); ++i) {
            const double d = (p - pts[i]).squaredNorm();
            if (d < bd) {
                bd = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    };

    double total = 0.0;
    for (size_t bi = 0; bi < body.size(); ++bi) {
        const Vec3& vb = body[bi];
        const int ci = nearest(vb, garment);
        const Vec3& vc = garment[ci];
        const Vec3& vk = joints[nearest(vb, joints)];
        const double dot = (vc - vb).dot(vb - vk);
        const double hinge = epsilon - dot;
        if (hinge <= 0.0) continue;
        total += hinge * hinge * hinge;
        const double d_dot = -3.0 * hinge * hinge;
        if (g_garment) (*g_garment)[ci] += d_dot * (vb - vk);
        if (g_body) (*g_body)[bi] += d_dot * ((vc - vb) - (vb - vk));
    }
    return total;
}

double collision_clearance(const std::vector<Vec3>& body, const std::vector<Vec3>& garment,
                           const std::vector<Vec3>& joints) {
    auto nearest = [](const Vec3& p, const std::vector<Vec3>& pts) {
        int best = 0;
        double bd = std::numeric_limits<double>::max();
        for (size_t i = 0; i < pts.size(); ++i) {
            const double d = (p - pts[i]).squaredNorm();
            if (d < bd) {
                bd = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    };
    double worst = std::numeric_limits<double>::max();
    for (const auto& vb : body) {
        const Vec3& vc = garment[nearest(vb, garment)];
        const Vec3& vk = joints[nearest(vb, joints)];
        const Vec3 out = vb - vk;
        const double len = out.norm();
        if (len == 0.0) continue;
        worst = std::min(worst, (vc - vb).dot(out) / len);
    }
    return worst;
}

double total_isolation(double recon, double mask, double s3im_val, double greg,
                       const LossWeights& w) {
    return recon + w.lambda_mask * mask + w.lambda_s3im * s3im_val + w.lambda_greg * greg;
}

double total_joint(double recon, double mask, double s3im_val, double greg, double iso,
                   double col, const LossWeights& w) {
    return total_isolation(recon, mask, s3im_val, greg, w) + w.lambda_iso * iso +
           w.lambda_col * col;
}

}  // namespace lsplat
