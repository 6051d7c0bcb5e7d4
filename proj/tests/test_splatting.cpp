#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "lsplat/gaussians/covariance.hpp"
#include "lsplat/splatting/camera.hpp"
#include "lsplat/splatting/render.hpp"

using namespace lsplat;
using namespace lsplat::testing;

namespace {

Camera plain_camera(double fx, double fy, double cx, double cy, int w, int h) {
    Camera cam;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = w;
    cam.height = h;
    return cam;
}

}  // namespace

TEST_CASE("pinhole projection hand cases") {
    const Camera cam = plain_camera(100, 100, 64, 64, 128, 128);
    const Projection on_axis = project(Vec3(0, 0, 2), cam);
    CHECK(on_axis.visible);
    CHECK(on_axis.uv == Vec2(64, 64));
    CHECK(on_axis.depth == 2.0);

    const Projection off = project(Vec3(1, 0, 2), cam);
    CHECK(off.uv.x() == doctest::Approx(114.0));

    CHECK(!project(Vec3(0, 0, -1), cam).visible);
    CHECK(!project(Vec3(0, 0, 0.005), cam).visible);  // at/inside near
}

TEST_CASE("projected covariance closed forms") {
    const Camera cam = plain_camera(100, 120, 64, 64, 128, 128);

    // isotropic on-axis: diag((fx s/z)^2, (fy s/z)^2) + blur floor
    const double s = 0.02, z = 2.0;
    const Mat2 got = project_covariance(s * s * Mat3::Identity(), Vec3(0, 0, z), cam);
    CHECK(got(0, 0) == doctest::Approx(std::pow(100 * s / z, 2) + 0.3));
    CHECK(got(1, 1) == doctest::Approx(std::pow(120 * s / z, 2) + 0.3));
    CHECK(got(0, 1) == doctest::Approx(0.0));

    // zero 3D covariance leaves just the floor
    const Mat2 floor_only = project_covariance(Mat3::Zero(), Vec3(0, 0, 1), cam);
    CHECK((floor_only - 0.3 * Mat2::Identity()).norm() < 1e-12);

    // doubling depth quarters the pre-floor projection on-axis
    const Mat2 a = project_covariance(s * s * Mat3::Identity(), Vec3(0, 0, z), cam, 0.0);
    const Mat2 b = project_covariance(s * s * Mat3::Identity(), Vec3(0, 0, 2 * z), cam, 0.0);
    CHECK((a - 4.0 * b).norm() < 1e-12);

    CHECK_THROWS(project_covariance(Mat3::Identity(), Vec3(0, 0, -1), cam));
}

TEST_CASE("camera validation") {
    Camera cam = plain_camera(100, 100, 16, 16, 32, 32);
    CHECK_NOTHROW(cam.validate());
    cam.fx = 0;
    CHECK_THROWS(cam.validate());
    cam = plain_camera(100, 100, 16, 16, 32, 32);
    cam.extrinsic(0, 0) = 2.0;
    CHECK_THROWS(cam.validate());
}

TEST_CASE("empty scene renders background") {
    const Camera cam = test_camera(16, 16);
    GaussianSet set = random_set(0, 1);
    const DeformedGaussians d = DeformedGaussians::observe(set);
    const RenderOutput out = render({&d}, cam, Vec3(0.2, 0.4, 0.6), RenderSettings{});
    for (int p = 0; p < 16 * 16; ++p) {
        CHECK(out.image[p * 3 + 0] == 0.2);
        CHECK(out.image[p * 3 + 1] == 0.4);
        CHECK(out.image[p * 3 + 2] == 0.6);
        CHECK(out.total_alpha[p] == 0.0);
        CHECK(out.contributor_count[p] == 0);
    }
}

TEST_CASE("single centered Gaussian composites by hand") {
    // opacity 0.8, DC-only white radiance, centered on a pixel center
    // principal point on the center of pixel (16, 16) so the splat peaks there
    const int wh = 31;
    Camera cam = plain_camera(100, 100, 16.5, 16.5, wh + 1, wh + 1);
    GaussianSet set;
    set.sh_degree = 0;
    set.resize(1);
    set.position[0] = Vec3(0, 0, 2);
    set.log_scale[0] = Vec3::Constant(std::log(0.05));
    set.opacity_logit[0] = logit(0.8);
    const double f = 0.5 / 0.28209479177387814;
    for (int c = 0; c < 3; ++c) set.sh_at(0)[c] = f;

    const DeformedGaussians d = DeformedGaussians::observe(set);
    const Vec3 bg(0.0, 0.25, 1.0);
    const RenderOutput out = render({&d}, cam, bg, RenderSettings{});
    for (int c = 0; c < 3; ++c) {
        CHECK(out.px(16, 16, c) == doctest::Approx(0.8 * 1.0 + 0.2 * bg[c]).epsilon(1e-9));
    }
    CHECK(out.total_alpha[16 * (wh + 1) + 16] == doctest::Approx(0.8));
}

TEST_CASE("tile renderer matches the brute-force oracle") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const int n = 10 + static_cast<int>(seed % 5) * 10;
        GaussianSet set = random_set(n, 1000 + seed);
        const Camera cam = test_camera(32, 32);
        const DeformedGaussians d = DeformedGaussians::observe(set);
        const Vec3 bg(0.1, 0.2, 0.3);
        const RenderSettings st;
        const RenderOutput out = render({&d}, cam, bg, st);
        const std::vector<double> want = oracle_render({&d}, cam, bg, st);
        double worst = 0;
        for (size_t i = 0; i < want.size(); ++i)
            worst = std::max(worst, std::abs(out.image[i] - want[i]));
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("multi-set compositing matches a single merged set") {
    GaussianSet a = random_set(12, 201, 1, "body");
    GaussianSet b = random_set(9, 202, 1, "shirt");
    const Camera cam = test_camera(24, 24);
    const DeformedGaussians da = DeformedGaussians::observe(a);
    const DeformedGaussians db = DeformedGaussians::observe(b);
    const RenderOutput split = render({&da, &db}, cam, Vec3::Zero(), RenderSettings{});

    GaussianSet merged = a;
    merged.position.insert(merged.position.end(), b.position.begin(), b.position.end());
    merged.rotation.insert(merged.rotation.end(), b.rotation.begin(), b.rotation.end());
    merged.log_scale.insert(merged.log_scale.end(), b.log_scale.begin(), b.log_scale.end());
    merged.opacity_logit.insert(merged.opacity_logit.end(), b.opacity_logit.begin(),
                                b.opacity_logit.end());
    merged.sh.insert(merged.sh.end(), b.sh.begin(), b.sh.end());
    const DeformedGaussians dm = DeformedGaussians::observe(merged);
    const RenderOutput whole = render({&dm}, cam, Vec3::Zero(), RenderSettings{});

    for (size_t i = 0; i < whole.image.size(); ++i)
        CHECK(split.image[i] == doctest::Approx(whole.image[i]).epsilon(1e-12));

    // entity alphas partition the total
    CHECK(split.entity_names[0] == "body");
    CHECK(split.entity_names[1] == "shirt");
    for (size_t p = 0; p < split.total_alpha.size(); ++p) {
        CHECK(split.entity_alpha[0][p] + split.entity_alpha[1][p] ==
              doctest::Approx(split.total_alpha[p]).epsilon(1e-12));
        CHECK(split.total_alpha[p] <= 1.0 + 1e-12);
    }
}

TEST_CASE("threading does not change the image bitwise") {
    GaussianSet set = random_set(60, 301);
    const Camera cam = test_camera(48, 48);
    const DeformedGaussians d = DeformedGaussians::observe(set);
    RenderSettings st1, st8;
    st8.threads = 8;
    const RenderOutput a = render({&d}, cam, Vec3(0.1, 0.1, 0.1), st1);
    const RenderOutput b = render({&d}, cam, Vec3(0.1, 0.1, 0.1), st8);
    CHECK(a.image == b.image);
    CHECK(a.total_alpha == b.total_alpha);
}

TEST_CASE("gaussians behind the near plane are culled and report indices") {
    GaussianSet set = random_set(3, 303);
    set.position[1] = Vec3(0, 0, -5);  // behind the camera at (0,0,-2.5)
    const Camera cam = test_camera(16, 16);
    const DeformedGaussians d = DeformedGaussians::observe(set);
    const RenderOutput out = render({&d}, cam, Vec3::Zero(), RenderSettings{});
    REQUIRE(out.culled.size() == 1);
    CHECK(out.culled[0] == 1);
}

TEST_CASE("non-finite input is rejected with the Gaussian index") {
    GaussianSet set = random_set(4, 305);
    set.sh_at(2)[1] = std::numeric_limits<double>::quiet_NaN();
    const Camera cam = test_camera(16, 16);
    const DeformedGaussians d = DeformedGaussians::observe(set);
    try {
        render({&d}, cam, Vec3::Zero(), RenderSettings{});
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("gaussian 2") != std::string::npos);
    }
}

TEST_CASE("zero upstream gradient gives zero parameter gradients") {
    GaussianSet set = random_set(8, 307);
    const Camera cam = test_camera(16, 16);
    const DeformedGaussians d = DeformedGaussians::observe(set);
    RenderCache cache;
    render({&d}, cam, Vec3::Zero(), RenderSettings{}, &cache);
    RenderUpstream up;
    up.g_image.assign(16 * 16 * 3, 0.0);
    const auto g = render_backward({&d}, cam, cache, up);
    for (int i = 0; i < 8; ++i) {
        CHECK(g[0].g_position[i].norm() == 0.0);
        CHECK(g[0].g_rot_cov[i].norm() == 0.0);
        CHECK(g[0].g_log_scale[i].norm() == 0.0);
        CHECK(g[0].g_opacity_logit[i] == 0.0);
    }
}

TEST_CASE("single-Gaussian opacity gradient closed form") {
    // d pixel / d eta_raw = T * G * c * eta(1-eta); T = 1 for the front splat
    Camera cam = plain_camera(100, 100, 8, 8, 16, 16);
    GaussianSet set;
    set.sh_degree = 0;
    set.resize(1);
    set.position[0] = Vec3(0.001, -0.002, 2);  // slightly off center
    set.log_scale[0] = Vec3::Constant(std::log(0.04));
    set.opacity_logit[0] = 0.3;
    set.sh_at(0)[0] = 0.7;

    const DeformedGaussians d = DeformedGaussians::observe(set);
    RenderCache cache;
    RenderSettings st = RenderSettings::gradcheck();
    const RenderOutput out = render({&d}, cam, Vec3::Zero(), st, &cache);
    (void)out;

    const int px = 8, py = 8;
    RenderUpstream up;
    up.g_image.assign(16 * 16 * 3, 0.0);
    up.g_image[(py * 16 + px) * 3 + 0] = 1.0;
    const auto g = render_backward({&d}, cam, cache, up);

    // recompute G at the pixel by hand
    const Mat3 cov3d = covariance_from_rotation(quat_to_rot(set.rotation[0]), set.log_scale[0]);
    const Mat2 cov2d = project_covariance(cov3d, set.position[0], cam, st.cov2d_blur);
    const Projection pr = project(set.position[0], cam);
    const Vec2 delta = pr.uv - Vec2(px + 0.5, py + 0.5);
    const double power = -0.5 * delta.dot(cov2d.inverse() * delta);
    const double gauss = std::exp(power);
    const double eta = sigmoid(set.opacity_logit[0]);
    const double color = 0.5 + set.sh_at(0)[0] * 0.28209479177387814;
    const double want = gauss * color * eta * (1 - eta);
    CHECK(g[0].g_opacity_logit[0] == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("render_backward matches finite differences") {
    // small smooth scene, no cutoffs; functional = weighted image + alpha sums
    const int n = 6, wh = 16;
    GaussianSet set = random_set(n, 311);
    const Camera cam = test_camera(wh, wh);
    const Vec3 bg(0.15, 0.1, 0.2);
    const RenderSettings st = RenderSettings::gradcheck();

    std::mt19937_64 rng(312);
    std::uniform_real_distribution<double> u(-1, 1);
    RenderUpstream up;
    up.g_image.resize(static_cast<size_t>(wh) * wh * 3);
    for (auto& v : up.g_image) v = u(rng);
    up.g_entity_alpha.resize(1);
    up.g_entity_alpha[0].resize(static_cast<size_t>(wh) * wh);
    for (auto& v : up.g_entity_alpha[0]) v = 0.3 * u(rng);

    auto value = [&]() {
        const DeformedGaussians d = DeformedGaussians::observe(set);
        const RenderOutput out = render({&d}, cam, bg, st);
        double s = 0;
        for (size_t i = 0; i < out.image.size(); ++i) s += up.g_image[i] * out.image[i];
        for (size_t p = 0; p < out.entity_alpha[0].size(); ++p)
            s += up.g_entity_alpha[0][p] * out.entity_alpha[0][p];
        return s;
    };

    const DeformedGaussians d = DeformedGaussians::observe(set);
    RenderCache cache;
    render({&d}, cam, bg, st, &cache);
    const auto g = render_backward({&d}, cam, cache, up);

    const double h = 1e-4;
    double worst = 0.0;
    auto probe = [&](double& slot, double analytic) {
        const double save = slot;
        slot = save + h;
        const double hi = value();
        slot = save - h;
        const double lo = value();
        slot = save;
        worst = std::max(worst, rel_err(analytic, (hi - lo) / (2 * h), 1e-6));
    };

    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) probe(set.position[i][c], g[0].g_position[i][c]);
        for (int c = 0; c < 3; ++c) probe(set.log_scale[i][c], g[0].g_log_scale[i][c]);
        probe(set.opacity_logit[i], g[0].g_opacity_logit[i]);
        const int nb = 3 * set.sh_basis_size();
        for (int k = 0; k < nb; ++k)
            probe(set.sh_at(i)[k], g[0].g_sh[static_cast<size_t>(i) * nb + k]);
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("render_backward rotation gradients flow through deformation") {
    // chain render + deform backward and compare against FD on the quaternion
    const int n = 5, wh = 16;
    GaussianSet set = random_set(n, 321);
    SkinningWeights w = random_weights(3, n, 322);
    const Skeleton sk = test_skeleton(3);
    const BoneTransforms bones = forward_kinematics(sk, random_pose(3, 323, 0.4));
    const Camera cam = test_camera(wh, wh);
    const RenderSettings st = RenderSettings::gradcheck();

    std::mt19937_64 rng(324);
    std::uniform_real_distribution<double> u(-1, 1);
    RenderUpstream up;
    up.g_image.resize(static_cast<size_t>(wh) * wh * 3);
    for (auto& v : up.g_image) v = u(rng);

    auto value = [&]() {
        const DeformedGaussians d = deform_gaussians(set, w, bones);
        const RenderOutput out = render({&d}, cam, Vec3::Zero(), st);
        double s = 0;
        for (size_t i = 0; i < out.image.size(); ++i) s += up.g_image[i] * out.image[i];
        return s;
    };

    DeformCache dcache;
    const DeformedGaussians d = deform_gaussians(set, w, bones, &dcache);
    RenderCache cache;
    render({&d}, cam, Vec3::Zero(), st, &cache);
    const auto sg = render_backward({&d}, cam, cache, up);
    const DeformGrads dg = deform_backward(set, w, bones, dcache, sg[0].g_position,
                                           sg[0].g_rot_radiance, sg[0].g_rot_cov);

    const double h = 1e-4;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 4; ++c) {
            const double save = set.rotation[i][c];
            set.rotation[i][c] = save + h;
            const double hi = value();
            set.rotation[i][c] = save - h;
            const double lo = value();
            set.rotation[i][c] = save;
            worst = std::max(worst, rel_err(dg.rotation[i][c], (hi - lo) / (2 * h), 1e-6));
        }
        for (int j = 0; j < 3; ++j) {
            const double save = w.delta(j, i);
            w.delta(j, i) = save + h;
            const double hi = value();
            w.delta(j, i) = save - h;
            const double lo = value();
            w.delta(j, i) = save;
            worst = std::max(worst, rel_err(dg.delta(j, i), (hi - lo) / (2 * h), 1e-6));
        }
    }
    CHECK(worst < 1e-3);
}
