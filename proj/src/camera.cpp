#include "splitsplat/camera.hpp"

#include <cmath>
#include <numbers>

namespace splitsplat {

Intrinsics Intrinsics::from_fov(int width, int height, double horizontal_fov_deg) {
    const double f = 0.5 * width / std::tan(0.5 * horizontal_fov_deg * std::numbers::pi / 180.0);
    return {f, f, 0.5 * width, 0.5 * height, width, height};
}

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, const Intrinsics& k) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-12) throw Error("look_at: up vector parallel to view direction");
    right.normalize();
    const Vec3 down = forward.cross(right);

    Mat3 r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = forward.transpose();

    Camera cam;
    cam.fx = k.fx;
    cam.fy = k.fy;
    cam.cx = k.cx;
    cam.cy = k.cy;
    cam.width = k.width;
    cam.height = k.height;
    cam.rotation = Quat(r).normalized();
    cam.translation = -(cam.rotation * eye);
    return cam;
}

void RigidTransform::validate() const {
    if (!rotation.allFinite() || !translation.allFinite()) throw Error("transform: non-finite entries");
    const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9)
        throw Error("transform: not rigid (rotation must be orthonormal with det +1)");
}

}  // namespace splitsplat
