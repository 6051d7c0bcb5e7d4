#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "lsplat/geometry/lbs.hpp"
#include "lsplat/geometry/skeleton.hpp"

using namespace lsplat;
using namespace lsplat::testing;

TEST_CASE("identity pose gives identity bone transforms") {
    const Skeleton sk = test_skeleton(4);
    sk.validate();
    const BoneTransforms b = forward_kinematics(sk, Pose::rest(4));
    for (int k = 0; k < 4; ++k) {
        CHECK((b.rot[k] - Mat3::Identity()).norm() == doctest::Approx(0.0));
        CHECK(b.trans[k].norm() == doctest::Approx(0.0));
    }
}

TEST_CASE("single joint rotated 90 degrees about z") {
    Skeleton sk;
    sk.parent = {-1};
    sk.rest_local = {Mat4::Identity()};
    Pose pose = Pose::rest(1);
    pose.joint_rotations[0] = Vec3(0, 0, M_PI / 2);
    const BoneTransforms b = forward_kinematics(sk, pose);
    Mat3 want;
    want << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((b.rot[0] - want).norm() < 1e-12);
    CHECK(b.trans[0].norm() < 1e-12);
}

TEST_CASE("two-joint chain child bone transform composed by hand") {
    Skeleton sk;
    sk.parent = {-1, 0};
    Mat4 child = Mat4::Identity();
    child(1, 3) = 1.0;
    sk.rest_local = {Mat4::Identity(), child};
    Pose pose = Pose::rest(2);
    pose.joint_rotations[1] = Vec3(M_PI / 2, 0, 0);
    const BoneTransforms b = forward_kinematics(sk, pose);

    // B_1 = T(0,1,0) Rx(90) T(0,-1,0): rotation Rx(90), translation (0,1,-1)
    const Mat3 rx = rodrigues(Vec3(M_PI / 2, 0, 0));
    CHECK((b.rot[1] - rx).norm() < 1e-12);
    CHECK((b.trans[1] - Vec3(0, 1, -1)).norm() < 1e-12);
}

TEST_CASE("root translation moves every bone") {
    const Skeleton sk = test_skeleton(3);
    Pose pose = Pose::rest(3);
    pose.root_translation = Vec3(0.5, -0.25, 1.0);
    const BoneTransforms b = forward_kinematics(sk, pose);
    for (int k = 0; k < 3; ++k) {
        CHECK((b.rot[k] - Mat3::Identity()).norm() < 1e-12);
        CHECK((b.trans[k] - pose.root_translation).norm() < 1e-12);
    }
}

TEST_CASE("pose canonicalize wraps angles and rejects non-finite") {
    Pose pose = Pose::rest(1);
    pose.joint_rotations[0] = Vec3(3 * M_PI, 0, 0);
    pose.canonicalize();
    CHECK(pose.joint_rotations[0].norm() < 2 * M_PI);
    // wrapped rotation is the same rotation
    CHECK((rodrigues(pose.joint_rotations[0]) - rodrigues(Vec3(3 * M_PI, 0, 0))).norm() < 1e-9);

    Pose bad = Pose::rest(1);
    bad.root_translation[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS(bad.canonicalize());
}

TEST_CASE("effective weights are the raw sum") {
    SkinningWeights w = SkinningWeights::zero_delta(MatX::Zero(3, 2));
    w.base << 1, 0.2, 0, 0.5, 0, 0.3;
    CHECK(w.effective(0)[0] == 1.0);

    w.delta(0, 0) = -0.1;
    w.delta(1, 0) = 0.1;
    const VecX eff = w.effective(0);
    CHECK(eff[0] == doctest::Approx(0.9));
    CHECK(eff[1] == doctest::Approx(0.1));
    CHECK(eff[2] == doctest::Approx(0.0));

    // random case vs naive loop
    const SkinningWeights rw = random_weights(4, 6, 21);
    for (int i = 0; i < 6; ++i) {
        const VecX got = rw.effective(i);
        for (int j = 0; j < 4; ++j) CHECK(got[j] == rw.base(j, i) + rw.delta(j, i));
    }
}

TEST_CASE("validate_base rejects bad partitions") {
    MatX bad = MatX::Zero(2, 1);
    bad << 0.7, 0.7;
    CHECK_THROWS(SkinningWeights::zero_delta(bad).validate_base());
    bad << -0.1, 1.1;
    CHECK_THROWS(SkinningWeights::zero_delta(bad).validate_base());
    MatX good(2, 1);
    good << 0.25, 0.75;
    CHECK_NOTHROW(SkinningWeights::zero_delta(good).validate_base());
}

TEST_CASE("LBS identity deformation") {
    const GaussianSet set = random_set(8, 31);
    const SkinningWeights w = random_weights(3, 8, 32);
    const DeformedGaussians d = deform_gaussians(set, w, BoneTransforms::identity(3));
    for (int i = 0; i < 8; ++i) {
        // weights need not sum to 1 (delta), so T = s*I with s = sum(W~)
        const double s = w.effective(i).sum();
        CHECK((d.position[i] - s * set.position[i]).norm() < 1e-12);
        CHECK((d.rot_radiance[i] - s * quat_to_rot(set.rotation[i])).norm() < 1e-12);
        CHECK((d.rot_cov[i] - quat_to_rot(set.rotation[i])).norm() < 1e-9);
    }

    // exact identity when deltas are zero
    SkinningWeights w0 = w;
    w0.delta.setZero();
    const DeformedGaussians d0 = deform_gaussians(set, w0, BoneTransforms::identity(3));
    for (int i = 0; i < 8; ++i) {
        CHECK(d0.position[i] == set.position[i]);
        CHECK((d0.rot_cov[i] - quat_to_rot(set.rotation[i])).norm() < 1e-12);
    }
}

TEST_CASE("single bone pure translation") {
    const GaussianSet set = random_set(5, 41);
    MatX base = MatX::Ones(1, 5);
    const SkinningWeights w = SkinningWeights::zero_delta(base);
    BoneTransforms b = BoneTransforms::identity(1);
    b.trans[0] = Vec3(0.3, -0.7, 1.1);
    const DeformedGaussians d = deform_gaussians(set, w, b);
    for (int i = 0; i < 5; ++i) {
        CHECK((d.position[i] - (set.position[i] + b.trans[0])).norm() < 1e-12);
        CHECK((d.rot_radiance[i] - quat_to_rot(set.rotation[i])).norm() < 1e-12);
    }
}

TEST_CASE("two bones half and half translations") {
    const GaussianSet set = random_set(4, 43);
    MatX base = MatX::Constant(2, 4, 0.5);
    const SkinningWeights w = SkinningWeights::zero_delta(base);
    BoneTransforms b = BoneTransforms::identity(2);
    b.trans[0] = Vec3(1, 0, 0);
    b.trans[1] = Vec3(0, 2, 0);
    const DeformedGaussians d = deform_gaussians(set, w, b);
    for (int i = 0; i < 4; ++i) {
        CHECK((d.position[i] - (set.position[i] + Vec3(0.5, 1, 0))).norm() < 1e-12);
    }

    // blended rotation equals the naive weighted sum, not re-orthonormalized
    b.rot[0] = rodrigues(Vec3(0, 0, 0.8));
    b.rot[1] = rodrigues(Vec3(0.5, 0, 0));
    const DeformedGaussians dr = deform_gaussians(set, w, b);
    for (int i = 0; i < 4; ++i) {
        const Mat3 t_rot = 0.5 * b.rot[0] + 0.5 * b.rot[1];
        CHECK((dr.rot_radiance[i] - t_rot * quat_to_rot(set.rotation[i])).norm() < 1e-12);
    }
}

TEST_CASE("non-finite blend reports the Gaussian index") {
    const GaussianSet set = random_set(3, 47);
    SkinningWeights w = random_weights(2, 3, 48);
    BoneTransforms b = BoneTransforms::identity(2);
    b.trans[1][0] = std::numeric_limits<double>::infinity();
    try {
        deform_gaussians(set, w, b);
        FAIL("expected an exception");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("0") != std::string::npos);
    }
}

TEST_CASE("deform_backward identity bones passes gradients through") {
    const GaussianSet set = random_set(6, 51);
    SkinningWeights w = random_weights(3, 6, 52);
    w.delta.setZero();
    const BoneTransforms b = BoneTransforms::identity(3);
    DeformCache cache;
    deform_gaussians(set, w, b, &cache);

    std::vector<Vec3> g_pos(6, Vec3(0.1, -0.2, 0.3));
    std::vector<Mat3> zero(6, Mat3::Zero());
    const DeformGrads g = deform_backward(set, w, b, cache, g_pos, zero, zero);
    for (int i = 0; i < 6; ++i) CHECK((g.position[i] - g_pos[i]).norm() < 1e-12);
}

TEST_CASE("deform_backward delta gradient for a pure-translation blend") {
    // mu = 0 so only the bone translations enter the position;
    // d mu' / d delta_k = mu + t_k = t_k
    GaussianSet set = random_set(1, 53);
    set.position[0] = Vec3::Zero();
    MatX base(2, 1);
    base << 0.5, 0.5;
    const SkinningWeights w = SkinningWeights::zero_delta(base);
    BoneTransforms b = BoneTransforms::identity(2);
    b.trans[0] = Vec3(1, 2, 3);
    b.trans[1] = Vec3(-2, 0, 1);

    DeformCache cache;
    deform_gaussians(set, w, b, &cache);
    const Vec3 up(0.3, -0.5, 0.2);
    std::vector<Mat3> zero(1, Mat3::Zero());
    const DeformGrads g = deform_backward(set, w, b, cache, {up}, zero, zero);
    CHECK(g.delta(0, 0) == doctest::Approx(up.dot(b.trans[0])));
    CHECK(g.delta(1, 0) == doctest::Approx(up.dot(b.trans[1])));
}

TEST_CASE("deform_backward matches finite differences") {
    // random 5-Gaussian, 3-bone scene; scalar functional over all outputs
    const int n = 5, nj = 3;
    GaussianSet set = random_set(n, 61);
    SkinningWeights w = random_weights(nj, n, 62);
    const Skeleton sk = test_skeleton(nj);
    const BoneTransforms b = forward_kinematics(sk, random_pose(nj, 63));

    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec3> up_pos(n);
    std::vector<Mat3> up_rad(n), up_cov(n);
    for (int i = 0; i < n; ++i) {
        up_pos[i] = Vec3(u(rng), u(rng), u(rng));
        for (int k = 0; k < 9; ++k) {
            up_rad[i](k / 3, k % 3) = u(rng);
            up_cov[i](k / 3, k % 3) = u(rng);
        }
    }

    auto value = [&]() {
        const DeformedGaussians d = deform_gaussians(set, w, b);
        double s = 0;
        for (int i = 0; i < n; ++i) {
            s += up_pos[i].dot(d.position[i]);
            s += (up_rad[i].array() * d.rot_radiance[i].array()).sum();
            s += (up_cov[i].array() * d.rot_cov[i].array()).sum();
        }
        return s;
    };

    DeformCache cache;
    deform_gaussians(set, w, b, &cache);
    const DeformGrads g = deform_backward(set, w, b, cache, up_pos, up_rad, up_cov);

    const double h = 1e-4;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            const double want = fd(
                [&](double x) {
                    const double save = set.position[i][c];
                    set.position[i][c] = x;
                    const double v = value();
                    set.position[i][c] = save;
                    return v;
                },
                set.position[i][c], h);
            worst = std::max(worst, rel_err(g.position[i][c], want));
        }
        for (int c = 0; c < 4; ++c) {
            const double want = fd(
                [&](double x) {
                    const double save = set.rotation[i][c];
                    set.rotation[i][c] = x;
                    const double v = value();
                    set.rotation[i][c] = save;
                    return v;
                },
                set.rotation[i][c], h);
            worst = std::max(worst, rel_err(g.rotation[i][c], want));
        }
        for (int j = 0; j < nj; ++j) {
            const double want = fd(
                [&](double x) {
                    const double save = w.delta(j, i);
                    w.delta(j, i) = x;
                    const double v = value();
                    w.delta(j, i) = save;
                    return v;
                },
                w.delta(j, i), h);
            worst = std::max(worst, rel_err(g.delta(j, i), want));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("posed joint positions move with the pose") {
    const Skeleton sk = test_skeleton(3);
    const auto rest = posed_joint_positions(sk, Pose::rest(3));
    CHECK((rest[0] - Vec3(0, 0, 0)).norm() < 1e-12);
    CHECK((rest[2] - Vec3(0, 0.8, 0)).norm() < 1e-12);

    Pose pose = Pose::rest(3);
    pose.joint_rotations[0] = Vec3(0, 0, M_PI / 2);
    const auto posed = posed_joint_positions(sk, pose);
    CHECK((posed[2] - Vec3(-0.8, 0, 0)).norm() < 1e-12);
}
