#include "splitsplat/propagation.hpp"

#include <algorithm>
#include <set>

#include "splitsplat/image.hpp"
#include "splitsplat/spatial.hpp"

namespace splitsplat {

void PropagationConfig::validate() const {
    if (!(tau_depth > 0.0)) throw Error("propagation: tau_depth must be positive");
    if (!(tau_label > 0.0 && tau_label <= 1.0)) throw Error("propagation: tau_label must lie in (0, 1]");
    if (!(lambda_init > 0.0 && lambda_init < 1.0)) throw Error("propagation: lambda_init must lie in (0, 1)");
    if (erosion_radius < 0) throw Error("propagation: erosion radius must be >= 0");
    if (dbscan_min_pts < 1) throw Error("propagation: DBSCAN min_pts must be >= 1");
    if (dbscan_eps <= 0.0 && !(dbscan_eps_factor > 0.0)) throw Error("propagation: DBSCAN eps factor must be positive");
    if (splat_radius < 0) throw Error("propagation: splat radius must be >= 0");
    if (!(remap_min_overlap >= 0.0 && remap_min_overlap <= 1.0)) throw Error("propagation: remap_min_overlap must lie in [0, 1]");
}

const std::map<Label, Label>& GlobalLabelRegistry::view_map(int view) const {
    static const std::map<Label, Label> empty;
    auto it = views_.find(view);
    return it == views_.end() ? empty : it->second;
}

std::map<Label, std::vector<std::size_t>> assign_points_to_masks(std::span<const ProjectedPoint> points,
                                                                 const MaskSet& masks, int erosion_radius) {
    std::map<Label, std::vector<std::size_t>> out;
    for (const auto& [id, mask] : masks.masks) {
        const Mask eroded = erode(mask, erosion_radius);
        auto& bucket = out[id];
        for (const auto& p : points) {
            const int x = p.px(), y = p.py();
            if (eroded.contains(x, y) && eroded(x, y)) bucket.push_back(p.index);
        }
    }
    return out;
}

std::vector<std::size_t> dbscan_filter(std::span<const Vec3> points, double eps, int min_pts) {
    if (!(eps > 0.0)) throw Error("dbscan: eps must be positive");
    if (min_pts < 1) throw Error("dbscan: min_pts must be >= 1");
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    if (n == 0) return {};
    const KdTree tree(points);
    std::vector<std::uint8_t> core(points.size(), 0);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        core[i] = tree.within(points[i], eps).size() >= static_cast<std::size_t>(min_pts);

    std::vector<std::uint8_t> keep(core);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        if (core[i]) continue;
        for (std::size_t j : tree.within(points[i], eps))
            if (core[j]) {
                keep[i] = 1;
                break;
            }
    }
    std::vector<std::size_t> out;
    for (std::ptrdiff_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(static_cast<std::size_t>(i));
    return out;
}

std::map<Label, Mask> warp_virtual_masks(std::span<const Vec3> points, std::span<const Label> labels,
                                         const Camera& camera, const DepthMap& depth, int splat_radius,
                                         double tau_depth) {
    if (points.size() != labels.size()) throw Error("warp_virtual_masks: points/labels size mismatch");
    std::map<Label, Mask> out;
    const auto visible = filter_surface_consistent(filter_in_bounds(points, camera), depth, camera, tau_depth);
    for (const auto& p : visible) {
        const Label l = labels[p.index];
        if (l == kBackground) continue;
        auto [it, inserted] = out.try_emplace(l, camera.width, camera.height, std::uint8_t{0});
        stamp_disk(it->second, p.px(), p.py(), splat_radius);
    }
    return out;
}

std::map<Label, Label> remap_labels(const std::map<Label, Mask>& virtual_masks, const MaskSet& current,
                                    GlobalLabelRegistry& registry, double min_overlap) {
    std::map<Label, Label> mapping;
    for (const auto& [local, mask] : current.masks) {
        const double needed = min_overlap * static_cast<double>(count(mask));
        Label best = kBackground;
        std::size_t best_count = 0;
        for (const auto& [global, vmask] : virtual_masks) {
            const std::size_t c = intersection_count(vmask, mask);
            if (c > best_count) {  // ascending map order: ties keep the smaller label
                best_count = c;
                best = global;
            }
        }
        const bool matched = best_count > 0 && static_cast<double>(best_count) >= needed;
        mapping[local] = matched ? best : registry.fresh();
        registry.map(current.view_id, local, mapping[local]);
    }
    return mapping;
}

void update_weights(const ViewObservations& observations, std::vector<LabelWeights>& weights, double lambda_init) {
    if (!(lambda_init > 0.0 && lambda_init < 1.0)) throw Error("update_weights: lambda_init must lie in (0, 1)");
    for (const auto& [idx, label] : observations) {
        if (idx >= weights.size()) throw Error("update_weights: point index out of range");
        LabelWeights& w = weights[idx];
        if (!w.initialized())
            w.set(label, 1.0 + lambda_init);
        else
            w.add(label, 1.0);
    }
}

FinalLabels finalize_labels(std::span<const LabelWeights> weights, double tau_label) {
    if (!(tau_label > 0.0 && tau_label <= 1.0)) throw Error("finalize_labels: tau_label must lie in (0, 1]");
    FinalLabels out;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!weights[i].initialized()) continue;
        const auto [label, score] = weights[i].normalized().argmax();
        if (score < tau_label) continue;
        out.kept.push_back(i);
        out.labels.push_back(label);
    }
    return out;
}

MaskSet reproject_masks(const MaskSet& raw, std::span<const Vec3> points, std::span<const Label> labels,
                        const Camera& camera, const DepthMap& depth, double tau_depth) {
    MaskSet out;
    out.view_id = raw.view_id;
    out.stage = MaskStage::propagated;
    out.width = raw.width;
    out.height = raw.height;
    if (raw.masks.empty()) return out;

    const auto visible = filter_surface_consistent(filter_in_bounds(points, camera), depth, camera, tau_depth);
    for (const auto& [local, mask] : raw.masks) {
        std::map<Label, std::size_t> votes;
        for (const auto& p : visible) {
            const int x = p.px(), y = p.py();
            if (mask(x, y) && labels[p.index] != kBackground) ++votes[labels[p.index]];
        }
        Label best = kBackground;
        std::size_t best_votes = 0;
        for (const auto& [l, v] : votes)
            if (v > best_votes) {
                best_votes = v;
                best = l;
            }
        if (best == kBackground) continue;
        auto [it, inserted] = out.masks.try_emplace(best, raw.width, raw.height, std::uint8_t{0});
        it->second = mask_union(it->second, mask);
    }
    // Overlapping raw masks: a pixel stays with the smallest label that claims it.
    Mask claimed(raw.width, raw.height, 0);
    for (auto& [l, m] : out.masks) {
        for (std::size_t i = 0; i < m.data.size(); ++i) {
            if (m.data[i] && claimed.data[i]) m.data[i] = 0;
            if (m.data[i]) claimed.data[i] = 1;
        }
    }
    return out;
}

PropagationResult propagate(std::span<const ViewAssets> views, const PointCloud& dense, const PropagationConfig& cfg) {
    cfg.validate();
    if (views.empty()) throw Error("propagate: at least one view is required");
    if (dense.points.empty()) throw Error("propagate: dense point cloud is empty");

    const std::span<const Vec3> points(dense.points);
    PropagationResult res;
    res.weights.assign(points.size(), LabelWeights{});
    ViewObservations previous;

    for (const auto& view : views) {
        view.camera.validate();
        view.masks.validate();
        if (!view.masks.masks.empty() && !(view.masks.width == view.camera.width && view.masks.height == view.camera.height))
            throw Error("propagate: masks of view " + std::to_string(view.masks.view_id) + " do not match camera");

        const auto in_view = filter_in_bounds(points, view.camera);
        const auto surface = filter_surface_consistent(in_view, view.depth, view.camera, cfg.tau_depth);
        auto assigned = assign_points_to_masks(surface, view.masks, cfg.erosion_radius);

        if (cfg.dbscan_enabled) {
            std::vector<std::size_t> star;
            for (const auto& [local, idx] : assigned) star.insert(star.end(), idx.begin(), idx.end());
            std::sort(star.begin(), star.end());
            star.erase(std::unique(star.begin(), star.end()), star.end());
            if (!star.empty()) {
                std::vector<Vec3> pos;
                pos.reserve(star.size());
                for (std::size_t i : star) pos.push_back(points[i]);
                double eps = cfg.dbscan_eps;
                if (eps <= 0.0) eps = cfg.dbscan_eps_factor * median_nearest_neighbor_distance(pos);
                if (!(eps > 0.0)) eps = 1e-12;
                std::vector<std::uint8_t> retained(points.size(), 0);
                for (std::size_t k : dbscan_filter(pos, eps, cfg.dbscan_min_pts)) retained[star[k]] = 1;
                for (auto& [local, idx] : assigned)
                    std::erase_if(idx, [&](std::size_t i) { return !retained[i]; });
            }
        }

        std::vector<Vec3> src_points;
        std::vector<Label> src_labels;
        if (cfg.warp_source == WarpSource::accumulated) {
            for (std::size_t i = 0; i < points.size(); ++i)
                if (res.weights[i].initialized()) {
                    src_points.push_back(points[i]);
                    src_labels.push_back(res.weights[i].argmax().first);
                }
        } else {
            for (const auto& [i, l] : previous) {
                src_points.push_back(points[i]);
                src_labels.push_back(l);
            }
        }
        const auto virtual_masks = warp_virtual_masks(src_points, src_labels, view.camera, view.depth,
                                                      cfg.splat_radius, cfg.tau_depth);
        const auto mapping = remap_labels(virtual_masks, view.masks, res.registry, cfg.remap_min_overlap);

        std::set<std::pair<std::size_t, Label>> obs;
        for (const auto& [local, idx] : assigned)
            for (std::size_t i : idx) obs.emplace(i, mapping.at(local));
        ViewObservations observations(obs.begin(), obs.end());
        update_weights(observations, res.weights, cfg.lambda_init);
        previous = std::move(observations);
    }

    const FinalLabels fin = finalize_labels(res.weights, cfg.tau_label);

    res.dense_labels.assign(points.size(), kBackground);
    res.labeled_source = fin.kept;
    for (std::size_t k = 0; k < fin.kept.size(); ++k) {
        const Label l = fin.labels[k];
        res.dense_labels[fin.kept[k]] = l;
        res.labeled.points.push_back(points[fin.kept[k]]);
        res.labeled.labels.push_back(l);
        res.labeled.weights.push_back(res.weights[fin.kept[k]]);
    }

    res.masks.reserve(views.size());
    for (const auto& view : views)
        res.masks.push_back(reproject_masks(view.masks, res.labeled.points, res.labeled.labels, view.camera,
                                            view.depth, cfg.tau_depth));
    return res;
}

}  // namespace splitsplat
