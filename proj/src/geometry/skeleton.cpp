#include "lsplat/geometry/skeleton.hpp"

#include <numbers>
#include <stdexcept>

namespace lsplat {

void Skeleton::validate() const {
    const int n = joint_count();
    if (n == 0) throw std::invalid_argument("skeleton: no joints");
    if (static_cast<int>(rest_local.size()) != n)
        throw std::invalid_argument("skeleton: parent/transform size mismatch");
    if (parent[0] != -1) throw std::invalid_argument("skeleton: joint 0 must be the root");
    for (int j = 1; j < n; ++j) {
        if (parent[j] < 0 || parent[j] >= j)
            throw std::invalid_argument("skeleton: parent index must precede child");
    }
    for (int j = 0; j < n; ++j) {
        const Mat3 r = rest_local[j].topLeftCorner<3, 3>();
        if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
            std::abs(r.determinant() - 1.0) > 1e-6)
            throw std::invalid_argument("skeleton: rest rotation not orthonormal");
        if (rest_local[j].row(3) != Eigen::RowVector4d(0, 0, 0, 1))
            throw std::invalid_argument("skeleton: rest transform not rigid");
    }
}

std::vector<Mat4> Skeleton::rest_global() const {
    std::vector<Mat4> g(joint_count());
    for (int j = 0; j < joint_count(); ++j)
        g[j] = (j == 0) ? rest_local[j] : Mat4(g[parent[j]] * rest_local[j]);
    return g;
}

std::vector<Vec3> Skeleton::rest_joint_positions() const {
    auto g = rest_global();
    std::vector<Vec3> p(g.size());
    for (size_t j = 0; j < g.size(); ++j) p[j] = g[j].topRightCorner<3, 1>();
    return p;
}

void Pose::canonicalize() {
    if (!root_translation.allFinite())
        throw std::invalid_argument("pose: non-finite root translation");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (auto& aa : joint_rotations) {
        if (!aa.allFinite()) throw std::invalid_argument("pose: non-finite rotation");
        const double theta = aa.norm();
        if (theta >= two_pi) {
            const double wrapped = std::fmod(theta, two_pi);
            aa *= (theta > 0 ? wrapped / theta : 0.0);
        }
    }
}

BoneTransforms forward_kinematics(const Skeleton& skeleton, const Pose& pose) {
    const int n = skeleton.joint_count();
    if (pose.joint_count() != n)
        throw std::invalid_argument("forward_kinematics: pose/skeleton dimension mismatch");

    // posed local = rest local followed by the joint rotation about the joint
    std::vector<Mat4> global(n);
    for (int j = 0; j < n; ++j) {
        Mat4 local = skeleton.rest_local[j];
        local.topLeftCorner<3, 3>() =
            Mat3(local.topLeftCorner<3, 3>() * rodrigues(pose.joint_rotations[j]));
        if (j == 0) {
            local.topRightCorner<3, 1>() += pose.root_translation;
            global[j] = local;
        } else {
            global[j] = global[skeleton.parent[j]] * local;
        }
    }

    const auto rest = skeleton.rest_global();
    BoneTransforms bones;
    bones.rot.resize(n);
    bones.trans.resize(n);
    for (int j = 0; j < n; ++j) {
        const Mat3 rg = rest[j].topLeftCorner<3, 3>();
        const Vec3 tg = rest[j].topRightCorner<3, 1>();
        const Mat3 rp = global[j].topLeftCorner<3, 3>();
        const Vec3 tp = global[j].topRightCorner<3, 1>();
        bones.rot[j] = rp * rg.transpose();
        bones.trans[j] = tp - bones.rot[j] * tg;
    }
    return bones;
}

std::vector<Vec3> posed_joint_positions(const Skeleton& skeleton, const Pose& pose) {
    const auto bones = forward_kinematics(skeleton, pose);
    auto p = skeleton.rest_joint_positions();
    for (int j = 0; j < skeleton.joint_count(); ++j)
        p[j] = bones.rot[j] * p[j] + bones.trans[j];
    return p;
}

}  // namespace lsplat
