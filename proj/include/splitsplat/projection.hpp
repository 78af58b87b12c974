#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "splitsplat/scene.hpp"

namespace splitsplat {

inline constexpr double kDefaultTauDepth = 0.02;

struct ProjectedPoint {
    std::size_t index = 0;  // into the source point array
    double w = 0.0;         // continuous pixel column
    double h = 0.0;         // continuous pixel row
    double depth = 0.0;     // camera-space z

    int px() const { return static_cast<int>(std::floor(w)); }
    int py() const { return static_cast<int>(std::floor(h)); }
};

/// Pinhole projection; std::nullopt when the point is at or behind the camera plane.
/// Throws Error on non-finite input.
std::optional<ProjectedPoint> project_point(const Camera& camera, const Vec3& p, std::size_t index = 0);

/// Points with 0 <= w < W, 0 <= h < H and positive depth, in input order.
std::vector<ProjectedPoint> filter_in_bounds(std::span<const Vec3> points, const Camera& camera);

/// Points whose depth agrees with depth(floor(w), floor(h)) within tau_depth. Points over invalid
/// depth cells are dropped. Throws Error if the depth map does not match the camera.
std::vector<ProjectedPoint> filter_surface_consistent(std::span<const ProjectedPoint> projected,
                                                      const DepthMap& depth, const Camera& camera,
                                                      double tau_depth = kDefaultTauDepth);

}  // namespace splitsplat
