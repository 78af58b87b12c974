#include "splitsplat/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace splitsplat {

namespace {
constexpr std::size_t kLeafSize = 8;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

bool better(double d2, std::size_t i, const KdTree::Hit& best) {
    return d2 < best.dist2 || (d2 == best.dist2 && i < best.index);
}
}  // namespace

KdTree::KdTree(std::span<const Vec3> points) : points_(points), order_(points.size()) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!order_.empty()) build(0, order_.size(), 0);
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({begin, end, -1, 0.0, -1, -1});
    if (end - begin <= kLeafSize) return id;

    Vec3 lo = points_[order_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all coincident

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         const double pa = points_[a][axis], pb = points_[b][axis];
                         return pa < pb || (pa == pb && a < b);
                     });
    const double split = points_[order_[mid]][axis];
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

void KdTree::nearest_rec(int node, const Vec3& q, std::size_t skip, Hit& best) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (std::size_t i = n.begin; i < n.end; ++i) {
            const std::size_t idx = order_[i];
            if (idx == skip) continue;
            const double d2 = (points_[idx] - q).squaredNorm();
            if (better(d2, idx, best)) best = {idx, d2};
        }
        return;
    }
    // Left holds coordinates <= split, right holds >= split.
    const double diff = q[n.axis] - n.split;
    const int first = diff <= 0.0 ? n.left : n.right;
    const int second = diff <= 0.0 ? n.right : n.left;
    nearest_rec(first, q, skip, best);
    // <= keeps equal-distance candidates reachable for the index tie-break.
    if (diff * diff <= best.dist2) nearest_rec(second, q, skip, best);
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
    if (points_.empty()) throw Error("KdTree::nearest on empty tree");
    Hit best{kNone, std::numeric_limits<double>::infinity()};
    nearest_rec(0, q, kNone, best);
    return best;
}

KdTree::Hit KdTree::nearest_excluding(const Vec3& q, std::size_t self) const {
    Hit best{kNone, std::numeric_limits<double>::infinity()};
    if (!points_.empty()) nearest_rec(0, q, self, best);
    return best;
}

void KdTree::within_rec(int node, const Vec3& q, double r2, std::vector<std::size_t>& out) const {
    const Node& n = nodes_[node];
    if (n.axis < 0) {
        for (std::size_t i = n.begin; i < n.end; ++i) {
            const std::size_t idx = order_[i];
            if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
        }
        return;
    }
    const double diff = q[n.axis] - n.split;
    if (diff <= 0.0 || diff * diff <= r2) within_rec(n.left, q, r2, out);
    if (diff >= 0.0 || diff * diff <= r2) within_rec(n.right, q, r2, out);
}

std::vector<std::size_t> KdTree::within(const Vec3& q, double radius) const {
    std::vector<std::size_t> out;
    if (!points_.empty()) within_rec(0, q, radius * radius, out);
    std::sort(out.begin(), out.end());
    return out;
}

double median_nearest_neighbor_distance(std::span<const Vec3> points) {
    if (points.size() < 2) return 0.0;
    KdTree tree(points);
    std::vector<double> d(points.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i)
        d[i] = std::sqrt(tree.nearest_excluding(points[i], static_cast<std::size_t>(i)).dist2);
    const std::size_t mid = d.size() / 2;
    std::nth_element(d.begin(), d.begin() + mid, d.end());
    if (d.size() % 2 == 1) return d[mid];
    const double upper = d[mid];
    const double lower = *std::max_element(d.begin(), d.begin() + mid);
    return 0.5 * (lower + upper);
}

}  // namespace splitsplat
