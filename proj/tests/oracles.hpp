#pragma once
// Brute-force reference implementations used as test oracles. Deliberately naive: no spatial
// indices, no separable filters, no tiling. Each one restates the defining rule directly.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <vector>

#include "splitsplat/scene.hpp"

namespace oracle {

using namespace splitsplat;

// Erosion: a pixel survives iff every pixel of its (2r+1)^2 neighborhood is inside the image and set.
inline Mask erode(const Mask& m, int r) {
    Mask out(m.width, m.height, 0);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            bool all = true;
            for (int dy = -r; dy <= r && all; ++dy)
                for (int dx = -r; dx <= r && all; ++dx) {
                    const int u = x + dx, v = y + dy;
                    all = m.contains(u, v) && m(u, v);
                }
            out(x, y) = all;
        }
    return out;
}

inline Mask dilate(const Mask& m, int r) {
    Mask out(m.width, m.height, 0);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x) {
            bool any = false;
            for (int dy = -r; dy <= r && !any; ++dy)
                for (int dx = -r; dx <= r && !any; ++dx) {
                    const int u = x + dx, v = y + dy;
                    any = m.contains(u, v) && m(u, v);
                }
            out(x, y) = any;
        }
    return out;
}

// Textbook O(N^2) DBSCAN retention: core points (>= min_pts neighbors within eps, self included)
// and every point within eps of a core point.
inline std::vector<std::size_t> dbscan_retained(const std::vector<Vec3>& pts, double eps, int min_pts) {
    const std::size_t n = pts.size();
    std::vector<bool> core(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        int c = 0;
        for (std::size_t j = 0; j < n; ++j) c += (pts[i] - pts[j]).squaredNorm() <= eps * eps;
        core[i] = c >= min_pts;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        bool keep = core[i];
        for (std::size_t j = 0; j < n && !keep; ++j) keep = core[j] && (pts[i] - pts[j]).squaredNorm() <= eps * eps;
        if (keep) out.push_back(i);
    }
    return out;
}

// Voting finalization: normalize, take the max score (smallest label among equal maxima), threshold.
struct Final {
    std::vector<std::size_t> kept;
    std::vector<Label> labels;
};
inline Final finalize(const std::vector<std::map<Label, double>>& w, double tau) {
    Final f;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i].empty()) continue;
        double total = 0.0;
        for (const auto& [l, s] : w[i]) total += s;
        Label best = 0;
        double best_s = -1.0;
        for (const auto& [l, s] : w[i]) {
            const double v = s / total;
            if (v > best_s || (v == best_s && l < best)) {
                best_s = v;
                best = l;
            }
        }
        if (best_s >= tau) {
            f.kept.push_back(i);
            f.labels.push_back(best);
        }
    }
    return f;
}

// Linear scan nearest neighbor; strict < keeps the smallest index on ties.
inline std::size_t nearest(const std::vector<Vec3>& pts, const Vec3& q) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = (pts[i] - q).squaredNorm();
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

// Greedy farthest-point sampling, written out as the definition: start nearest to the centroid,
// then repeatedly take the candidate maximizing the distance to the chosen set. Ties prefer the
// lexicographically smaller (w, h). Stops when the best distance is 0.
inline std::vector<Vec2> farthest_points(const std::vector<Vec2>& cand, const Vec2& centroid, int n) {
    auto less = [](const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); };
    std::vector<Vec2> chosen;
    if (cand.empty() || n <= 0) return chosen;
    Vec2 first = cand[0];
    double bd = (cand[0] - centroid).squaredNorm();
    for (const auto& c : cand) {
        const double d = (c - centroid).squaredNorm();
        if (d < bd || (d == bd && less(c, first))) {
            bd = d;
            first = c;
        }
    }
    chosen.push_back(first);
    while (static_cast<int>(chosen.size()) < n) {
        Vec2 best = cand[0];
        double best_d = -1.0;
        for (const auto& c : cand) {
            double d = std::numeric_limits<double>::infinity();
            for (const auto& s : chosen) d = std::min(d, (c - s).squaredNorm());
            if (d > best_d || (d == best_d && less(c, best))) {
                best_d = d;
                best = c;
            }
        }
        if (best_d <= 0.0) break;
        chosen.push_back(best);
    }
    return chosen;
}

// Point-set IoU between GT instance g and predicted label p.
inline double iou(const std::vector<Label>& pred, const std::vector<Label>& gt, Label p, Label g) {
    std::size_t i = 0, u = 0;
    for (std::size_t k = 0; k < gt.size(); ++k) {
        const bool a = gt[k] == g, b = pred[k] == p;
        i += a && b;
        u += a || b;
    }
    return u ? static_cast<double>(i) / static_cast<double>(u) : 0.0;
}

// Exhaustive one-to-one matching over every injective assignment of predictions (or none) to GT
// instances. Assignments are ranked by their matched pairs listed as (-IoU, g, p) in ascending
// order: lexicographically smaller wins, and a strict prefix loses. This is "highest IoUs first,
// ties to the smaller (g, p)". Returns per-GT IoUs. Background (0) excluded on both sides.
inline std::vector<double> exhaustive_match(const std::vector<Label>& pred, const std::vector<Label>& gt) {
    std::set<Label> gs(gt.begin(), gt.end()), ps(pred.begin(), pred.end());
    gs.erase(0);
    ps.erase(0);
    const std::vector<Label> g(gs.begin(), gs.end()), p(ps.begin(), ps.end());
    std::vector<std::vector<double>> m(g.size(), std::vector<double>(p.size()));
    for (std::size_t a = 0; a < g.size(); ++a)
        for (std::size_t b = 0; b < p.size(); ++b) m[a][b] = iou(pred, gt, p[b], g[a]);

    using Key = std::vector<std::tuple<double, Label, Label>>;
    auto better = [](const Key& x, const Key& y) {
        for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
            if (x[i] != y[i]) return x[i] < y[i];
        return x.size() > y.size();
    };
    std::vector<double> best_vals(g.size(), 0.0);
    Key best_key;
    bool have = false;
    std::vector<int> choice(g.size(), -1);
    std::vector<bool> used(p.size(), false);
    auto rec = [&](auto&& self, std::size_t a) -> void {
        if (a == g.size()) {
            Key k;
            for (std::size_t i = 0; i < g.size(); ++i)
                if (choice[i] >= 0 && m[i][choice[i]] > 0) k.emplace_back(-m[i][choice[i]], g[i], p[choice[i]]);
            std::sort(k.begin(), k.end());
            if (!have || better(k, best_key)) {
                have = true;
                best_key = k;
                for (std::size_t i = 0; i < g.size(); ++i) best_vals[i] = choice[i] >= 0 ? m[i][choice[i]] : 0.0;
            }
            return;
        }
        choice[a] = -1;
        self(self, a + 1);  // unmatched
        for (std::size_t b = 0; b < p.size(); ++b) {
            if (used[b]) continue;
            used[b] = true;
            choice[a] = static_cast<int>(b);
            self(self, a + 1);
            used[b] = false;
        }
        choice[a] = -1;
    };
    rec(rec, 0);
    return best_vals;
}

}  // namespace oracle
