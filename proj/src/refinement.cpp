#include "splitsplat/refinement.hpp"

#include <limits>

#include "splitsplat/image.hpp"
#include "splitsplat/projection.hpp"
#include "splitsplat/rasterizer.hpp"

namespace splitsplat {

void RefinementConfig::validate() const {
    if (!(tau_iou > 0.0 && tau_iou <= 1.0)) throw Error("refinement: tau_iou must lie in (0, 1]");
    if (n_prompts < 1) throw Error("refinement: n_prompts must be >= 1");
}

namespace {
bool smaller_coord(const Vec2& a, const Vec2& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); }
}  // namespace

std::vector<Vec2> sample_prompts(std::span<const Vec2> candidates, const Vec2& centroid, int n) {
    if (candidates.empty()) throw Error("instance invisible in view: no splat projections to sample");
    std::vector<Vec2> chosen;
    if (n < 1) return chosen;

    std::size_t first = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double d = (candidates[i] - centroid).squaredNorm();
        if (d < best || (d == best && smaller_coord(candidates[i], candidates[first]))) {
            best = d;
            first = i;
        }
    }
    chosen.push_back(candidates[first]);

    std::vector<double> min_d2(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) min_d2[i] = (candidates[i] - chosen[0]).squaredNorm();
    while (static_cast<int>(chosen.size()) < n) {
        std::size_t pick = 0;
        double far = -1.0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (min_d2[i] > far || (min_d2[i] == far && smaller_coord(candidates[i], candidates[pick]))) {
                far = min_d2[i];
                pick = i;
            }
        }
        if (!(far > 0.0)) break;  // only duplicates left
        chosen.push_back(candidates[pick]);
        for (std::size_t i = 0; i < candidates.size(); ++i)
            min_d2[i] = std::min(min_d2[i], (candidates[i] - candidates[pick]).squaredNorm());
    }
    return chosen;
}

std::string to_string(Provenance p) {
    switch (p) {
        case Provenance::propagated: return "propagated";
        case Provenance::segmenter: return "segmenter";
        case Provenance::none: return "none";
    }
    return "none";
}

RefinedMask refine_mask(const Mask* propagated, const Mask& segmented, const Mask& rendered, double tau_iou) {
    const double iou_sam = iou(segmented, rendered);
    if (propagated) {
        if (iou(*propagated, rendered) >= iou_sam) return {*propagated, Provenance::propagated};
        return {segmented, Provenance::segmenter};
    }
    if (iou_sam > tau_iou) return {segmented, Provenance::segmenter};
    return {std::nullopt, Provenance::none};
}

InstanceView instance_view(std::span<const Gaussian> scene, const Camera& camera, Label label) {
    RenderOptions opts;
    opts.only_label = label;
    opts.full_opacity = true;
    opts.want_contributors = true;
    const RenderOutput out = render(scene, camera, opts);
    InstanceView v;
    v.rendered = out.alpha_mask();
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (out.contributed[i]) v.visible.push_back(i);
    return v;
}

std::vector<Vec2> instance_prompts(std::span<const Gaussian> scene, const Camera& camera,
                                   std::span<const std::size_t> visible, int n) {
    std::vector<Vec2> candidates;
    Vec3 centroid = Vec3::Zero();
    for (std::size_t i : visible) {
        centroid += scene[i].mean;
        const auto p = project_point(camera, scene[i].mean, i);
        if (p && p->w >= 0.0 && p->w < camera.width && p->h >= 0.0 && p->h < camera.height)
            candidates.emplace_back(p->w, p->h);
    }
    if (candidates.empty()) throw Error("instance invisible in view: no splat centers inside the image");
    centroid /= static_cast<double>(visible.size());
    Vec2 c2;
    if (const auto pc = project_point(camera, centroid)) {
        c2 = {pc->w, pc->h};
    } else {
        c2 = Vec2::Zero();
        for (const auto& c : candidates) c2 += c;
        c2 /= static_cast<double>(candidates.size());
    }
    return sample_prompts(candidates, c2, n);
}

RefinementResult refine_all(std::span<const Gaussian> scene, std::span<const Camera> cameras,
                            std::span<const MaskSet> propagated, SegmenterPort& segmenter,
                            const RefinementConfig& cfg) {
    cfg.validate();
    if (propagated.size() != cameras.size()) throw Error("refine_all: one propagated mask set per camera required");
    RefinementResult res;
    std::vector<Label> labels;
    for (Label l : scene_labels(scene))
        if (l != kBackground) labels.push_back(l);

    for (std::size_t k = 0; k < cameras.size(); ++k) {
        const Camera& cam = cameras[k];
        const MaskSet& prop = propagated[k];
        MaskSet out;
        out.view_id = prop.view_id;
        out.stage = MaskStage::refined;
        out.width = cam.width;
        out.height = cam.height;
        for (Label l : labels) {
            const InstanceView iv = instance_view(scene, cam, l);
            if (iv.visible.empty()) continue;
            const Mask* prop_mask = prop.find(l);
            std::vector<Vec2> prompts;
            try {
                prompts = instance_prompts(scene, cam, iv.visible, cfg.n_prompts);
            } catch (const Error&) {
                continue;
            }
            RefinedMask chosen;
            try {
                const Mask sam = segmenter.segment(prop.view_id, prompts);
                if (!sam.same_shape(cam.width, cam.height))
                    throw SegmenterError("segmenter returned " + std::to_string(sam.width) + "x" +
                                         std::to_string(sam.height) + " mask");
                chosen = refine_mask(prop_mask, sam, iv.rendered, cfg.tau_iou);
            } catch (const SegmenterError& e) {
                res.failures.push_back("view " + std::to_string(prop.view_id) + " label " + std::to_string(l) + ": " +
                                       e.what());
                if (prop_mask) chosen = {*prop_mask, Provenance::propagated};
            }
            res.provenance[{prop.view_id, l}] = chosen.provenance;
            if (chosen.mask) out.masks.emplace(l, std::move(*chosen.mask));
        }
        res.masks.push_back(std::move(out));
    }
    return res;
}

}  // namespace splitsplat
