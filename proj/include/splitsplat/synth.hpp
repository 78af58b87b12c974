#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "splitsplat/propagation.hpp"
#include "splitsplat/scene.hpp"

namespace splitsplat {

struct CorruptionSpec {
    bool permute_ids = true;
    double split_probability = 0.0;  // per view: split one random mask by a random line
    double drop_probability = 0.0;   // per mask
    int dilation_px = 0;

    void validate() const;
};

struct SynthSpec {
    int objects = 5;
    int gaussians_per_object = 400;
    double object_radius = 0.3;  // mean semi-axis of the ellipsoidal shells
    double spacing = 1.0;        // distance between neighboring object centers on the ring
    int cameras = 20;
    double orbit_radius = 3.5;
    double orbit_height = 1.5;
    double fov_deg = 50.0;
    int width = 128;
    int height = 128;
    bool ground = false;  // add a background plane under the objects (label 0)
    CorruptionSpec corruption;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthScene {
    Scene scene;  // GT labels 1..objects, background plane 0
    std::vector<Camera> cameras;
};

/// Objects are surface-sampled ellipsoids of flat Gaussians on a ring; cameras orbit the scene center.
SynthScene generate_scene(const SynthSpec& spec);

/// RGB render, depth of the argmax-weight splat (NaN where nothing contributes) and GT masks in the
/// raw stage: pixel owned by a Gaussian of label l that also lies in l's full-opacity silhouette.
std::vector<ViewAssets> render_gt_views(std::span<const Gaussian> scene, std::span<const Camera> cameras);

/// Per view: optional split of one mask, per-mask drop, dilation, then id permutation. Deterministic
/// in (seed, view_id).
std::vector<MaskSet> corrupt_masks(std::span<const MaskSet> gt, const CorruptionSpec& spec, std::uint64_t seed);

/// The GT masks of each view as label images keyed by view id.
std::map<int, LabelImage> gt_label_images(std::span<const ViewAssets> views);

/// Gaussian means with their labels, used both as the dense input cloud and as P_GT.
PointCloud scene_point_cloud(std::span<const Gaussian> scene);

}  // namespace splitsplat
