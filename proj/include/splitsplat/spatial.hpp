#pragma once

#include <span>
#include <vector>

#include "splitsplat/scene.hpp"

namespace splitsplat {

/// Static 3D k-d tree over a borrowed point array.
class KdTree {
public:
    explicit KdTree(std::span<const Vec3> points);

    struct Hit {
        std::size_t index;
        double dist2;
    };

    /// Nearest point; ties resolve to the smaller index. Requires a non-empty tree.
    Hit nearest(const Vec3& q) const;
    /// Nearest point other than `self`; returns dist2 = +inf when the tree has one point.
    Hit nearest_excluding(const Vec3& q, std::size_t self) const;
    /// Indices with squared distance <= radius^2, ascending.
    std::vector<std::size_t> within(const Vec3& q, double radius) const;
    std::size_t size() const { return points_.size(); }

private:
    struct Node {
        std::size_t begin, end;  // range in order_
        int axis;                // -1 for leaves
        double split;
        int left, right;
    };

    int build(std::size_t begin, std::size_t end, int depth);
    void nearest_rec(int node, const Vec3& q, std::size_t skip, Hit& best) const;
    void within_rec(int node, const Vec3& q, double r2, std::vector<std::size_t>& out) const;

    std::span<const Vec3> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

/// Median over points of the distance to their nearest other point. 0 for fewer than 2 points.
double median_nearest_neighbor_distance(std::span<const Vec3> points);

}  // namespace splitsplat
