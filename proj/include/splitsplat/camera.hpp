#pragma once

#include "splitsplat/scene.hpp"

namespace splitsplat {

struct Intrinsics {
    double fx, fy, cx, cy;
    int width, height;

    /// Square pixels, principal point at the image center.
    static Intrinsics from_fov(int width, int height, double horizontal_fov_deg);
};

/// Camera at `eye` looking at `target`. `up` only needs to be non-parallel to the view direction.
Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, const Intrinsics& k);

/// Rigid world transform p -> R p + t.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    /// Throws Error unless rotation is orthonormal with determinant +1 (within 1e-9).
    void validate() const;
    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

}  // namespace splitsplat
