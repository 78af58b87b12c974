#include "splitsplat/projection.hpp"

#include <cmath>

namespace splitsplat {

std::optional<ProjectedPoint> project_point(const Camera& camera, const Vec3& p, std::size_t index) {
    if (!p.allFinite()) throw Error("project_point: non-finite point");
    const Vec3 c = camera.to_camera(p);
    if (!(c.z() > 0.0)) return std::nullopt;
    return ProjectedPoint{index, camera.fx * c.x() / c.z() + camera.cx, camera.fy * c.y() / c.z() + camera.cy,
                          c.z()};
}

namespace {
bool in_bounds(const ProjectedPoint& q, const Camera& camera) {
    return q.w >= 0.0 && q.w < camera.width && q.h >= 0.0 && q.h < camera.height && q.depth > 0.0;
}
}  // namespace

std::vector<ProjectedPoint> filter_in_bounds(std::span<const Vec3> points, const Camera& camera) {
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    std::vector<ProjectedPoint> all(points.size());
    std::vector<std::uint8_t> keep(points.size(), 0);
    bool bad = false;
#pragma omp parallel for schedule(static) reduction(|| : bad)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Vec3& p = points[i];
        if (!p.allFinite()) {
            bad = true;
            continue;
        }
        const Vec3 c = camera.to_camera(p);
        if (!(c.z() > 0.0)) continue;
        all[i] = {static_cast<std::size_t>(i), camera.fx * c.x() / c.z() + camera.cx,
                  camera.fy * c.y() / c.z() + camera.cy, c.z()};
        keep[i] = in_bounds(all[i], camera);
    }
    if (bad) throw Error("filter_in_bounds: non-finite point");
    std::vector<ProjectedPoint> out;
    for (std::ptrdiff_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(all[i]);
    return out;
}

std::vector<ProjectedPoint> filter_surface_consistent(std::span<const ProjectedPoint> projected,
                                                      const DepthMap& depth, const Camera& camera,
                                                      double tau_depth) {
    if (!depth.same_shape(camera.width, camera.height))
        throw Error("filter_surface_consistent: depth map " + std::to_string(depth.width) + "x" +
                    std::to_string(depth.height) + " does not match camera " + std::to_string(camera.width) +
                    "x" + std::to_string(camera.height));
    if (!(tau_depth > 0.0)) throw Error("filter_surface_consistent: tau_depth must be positive");
    std::vector<ProjectedPoint> out;
    for (const auto& q : projected) {
        const int x = q.px(), y = q.py();
        if (!depth.contains(x, y) || !depth.valid(x, y)) continue;
        if (std::abs(static_cast<double>(depth(x, y)) - q.depth) < tau_depth) out.push_back(q);
    }
    return out;
}

}  // namespace splitsplat
