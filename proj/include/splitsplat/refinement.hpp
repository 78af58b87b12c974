#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splitsplat/scene.hpp"
#include "splitsplat/segmenter.hpp"

namespace splitsplat {

inline constexpr double kDefaultTauIou = 0.95;

struct RefinementConfig {
    double tau_iou = kDefaultTauIou;
    int n_prompts = 5;

    void validate() const;
};

/// Greedy farthest-point selection over `candidates`: starts at the candidate closest to `centroid`,
/// then repeatedly adds the candidate farthest from the chosen set. Ties go to the smaller (w, h).
/// Stops after n points or when only duplicates of chosen points remain.
/// Throws Error when `candidates` is empty (instance invisible in the view).
std::vector<Vec2> sample_prompts(std::span<const Vec2> candidates, const Vec2& centroid, int n);

enum class Provenance { propagated, segmenter, none };

std::string to_string(Provenance p);

struct RefinedMask {
    std::optional<Mask> mask;
    Provenance provenance = Provenance::none;
};

/// Chooses between the propagated mask and the segmenter mask by IoU with the rendered silhouette.
/// With a propagated mask the higher IoU wins (ties keep the propagated one); without it the
/// segmenter mask is kept only when its IoU exceeds tau_iou.
RefinedMask refine_mask(const Mask* propagated, const Mask& segmented, const Mask& rendered, double tau_iou);

struct InstanceView {
    std::vector<std::size_t> visible;  // scene indices of the instance's splats that reach a pixel
    Mask rendered;                     // full-opacity silhouette
};

/// Visible splats and silhouette of instance `label` in one view.
InstanceView instance_view(std::span<const Gaussian> scene, const Camera& camera, Label label);

/// Prompt points for a visible instance: projected splat centers inside the image.
std::vector<Vec2> instance_prompts(std::span<const Gaussian> scene, const Camera& camera,
                                   std::span<const std::size_t> visible, int n);

struct RefinementResult {
    std::vector<MaskSet> masks;  // refined masks with global labels, one set per view
    std::map<std::pair<int, Label>, Provenance> provenance;
    std::vector<std::string> failures;  // segmenter errors that triggered a fallback
};

/// Runs prompt sampling, segmentation and IoU-gated selection for every (view, instance) pair with
/// visible splats. `propagated[k]` holds the view-consistent masks of view k.
RefinementResult refine_all(std::span<const Gaussian> scene, std::span<const Camera> cameras,
                            std::span<const MaskSet> propagated, SegmenterPort& segmenter,
                            const RefinementConfig& cfg);

}  // namespace splitsplat
