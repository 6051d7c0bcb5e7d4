#pragma once

#include <vector>

#include "lsplat/core/math.hpp"

namespace lsplat {

/// Joint hierarchy with rigid rest transforms. Joint 0 is the root
/// (parent index -1); parents always precede children.
struct Skeleton {
    std::vector<int> parent;
    std::vector<Mat4> rest_local;

    int joint_count() const { return static_cast<int>(parent.size()); }

    /// Checks the tree structure and that rotation blocks are orthonormal
    /// with det +1 (1e-6); throws std::invalid_argument otherwise.
    void validate() const;

    std::vector<Mat4> rest_global() const;
    std::vector<Vec3> rest_joint_positions() const;
};

/// Per-joint axis-angle pose plus a root translation.
struct Pose {
    Vec3 root_translation = Vec3::Zero();
    std::vector<Vec3> joint_rotations;

    static Pose rest(int n_joints) {
        Pose p;
        p.joint_rotations.assign(n_joints, Vec3::Zero());
        return p;
    }

    int joint_count() const { return static_cast<int>(joint_rotations.size()); }

    /// Wraps each axis-angle magnitude into [0, 2*pi); throws on non-finite
    /// entries.
    void canonicalize();
};

/// Rigid canonical-to-observation transform per joint.
struct BoneTransforms {
    std::vector<Mat3> rot;
    std::vector<Vec3> trans;

    int size() const { return static_cast<int>(rot.size()); }

    static BoneTransforms identity(int n) {
        BoneTransforms b;
        b.rot.assign(n, Mat3::Identity());
        b.trans.assign(n, Vec3::Zero());
        return b;
    }
};

/// B_k = posed_global(k) * rest_global(k)^-1. Identity pose gives identity
/// transforms. Throws on pose/skeleton dimension mismatch.
BoneTransforms forward_kinematics(const Skeleton& skeleton, const Pose& pose);

std::vector<Vec3> posed_joint_positions(const Skeleton& skeleton, const Pose& pose);

}  // namespace lsplat
