#pragma once

#include "lsplat/core/math.hpp"

namespace lsplat {

/// Pinhole camera: rigid world-to-camera extrinsic plus intrinsics in pixels.
struct Camera {
    Mat4 extrinsic = Mat4::Identity();
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    double near = 0.01;

    Mat3 rotation() const { return extrinsic.topLeftCorner<3, 3>(); }
    Vec3 translation() const { return extrinsic.topRightCorner<3, 1>(); }
    Vec3 center() const { return -rotation().transpose() * translation(); }

    /// fx, fy > 0, near > 0, positive image dims, orthonormal rotation.
    void validate() const;

    /// Camera at `eye` looking at `target` with the given up hint.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                          double fx, double fy, int width, int height);
};

struct Projection {
    Vec2 uv = Vec2::Zero();
    double depth = 0.0;
    bool visible = false;  // false: culled by the near plane
};

/// Standard pinhole projection. Points at or behind the near plane come back
/// with visible = false.
Projection project(const Vec3& mu_world, const Camera& cam);

/// 2D covariance J E Sigma E^T J^T with a low-pass floor added to the
/// diagonal. mu_world must be in front of the near plane.
Mat2 project_covariance(const Mat3& cov3d, const Vec3& mu_world, const Camera& cam,
                        double blur = 0.3);

}  // namespace lsplat
