#include "lsplat/splatting/camera.hpp"

#include <stdexcept>

namespace lsplat {

void Camera::validate() const {
    if (fx <= 0 || fy <= 0) throw std::invalid_argument("camera: focal lengths must be positive");
    if (near <= 0) throw std::invalid_argument("camera: near plane must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("camera: zero image dimensions");
    const Mat3 r = rotation();
    if ((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
        throw std::invalid_argument("camera: extrinsic rotation not orthonormal");
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                       double fx, double fy, int width, int height) {
    const Vec3 fwd = (target - eye).normalized();  // camera +z
    const Vec3 right = fwd.cross(up).normalized();
    const Vec3 down = fwd.cross(right);
    Mat3 r;
    r.row(0) = right;
    r.row(1) = down;
    r.row(2) = fwd;
    Camera cam;
    cam.extrinsic.topLeftCorner<3, 3>() = r;
    cam.extrinsic.topRightCorner<3, 1>() = -r * eye;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    cam.width = width;
    cam.height = height;
    return cam;
}

Projection project(const Vec3& mu_world, const Camera& cam) {
    const Vec3 p = cam.rotation() * mu_world + cam.translation();
    Projection out;
    out.depth = p.z();
    if (p.z() <= cam.near) return out;
    out.uv = Vec2(cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy);
    out.visible = true;
    return out;
}

Mat2 project_covariance(const Mat3& cov3d, const Vec3& mu_world, const Camera& cam,
                        double blur) {
    const Mat3 w = cam.rotation();
    const Vec3 p = w * mu_world + cam.translation();
    if (p.z() <= cam.near)
        throw std::invalid_argument("project_covariance: point behind near plane");
    Mat23 j;
    const double iz = 1.0 / p.z();
    j << cam.fx * iz, 0, -cam.fx * p.x() * iz * iz,
         0, cam.fy * iz, -cam.fy * p.y() * iz * iz;
    const Mat23 m = j * w;
    Mat2 cov2d = m * cov3d * m.transpose();
    cov2d(0, 0) += blur;
    cov2d(1, 1) += blur;
    return cov2d;
}

}  // namespace lsplat
