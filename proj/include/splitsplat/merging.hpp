#pragma once

#include <span>
#include <utility>
#include <vector>

#include "splitsplat/propagation.hpp"
#include "splitsplat/rasterizer.hpp"
#include "splitsplat/scene.hpp"

namespace splitsplat {

struct BoundingBox3D {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    Vec3 center() const { return 0.5 * (min + max); }
    double diagonal() const { return (max - min).norm(); }
    /// Closed-box membership.
    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
    BoundingBox3D united(const BoundingBox3D& o) const { return {min.cwiseMin(o.min), max.cwiseMax(o.max)}; }
    BoundingBox3D translated(const Vec3& t) const { return {min + t, max + t}; }
};

/// Axis-aligned box over mean +- 3 * max(scale) of every Gaussian. Throws Error when empty.
BoundingBox3D instance_bbox(std::span<const Gaussian> gaussians);

/// A set of Gaussians reconstructed (or merged) together, identified by `id`.
struct Instance {
    Label id = kBackground;
    Scene gaussians;
};

/// C(a, b) = fraction of instance a's Gaussian means inside box b.
struct CollisionMatrix {
    std::vector<Label> ids;
    std::vector<BoundingBox3D> boxes;
    Eigen::MatrixXd values;

    std::size_t size() const { return ids.size(); }
    /// max(C(a, b), C(b, a)) by row/column index.
    double pair_score(std::size_t a, std::size_t b) const { return std::max(values(a, b), values(b, a)); }
};

CollisionMatrix collision_matrix(std::span<const Instance> instances);

using MergePair = std::pair<Label, Label>;

struct MergeSchedule {
    std::vector<std::vector<MergePair>> rounds;
};

/// One round of disjoint pairs: greedy on the highest pair score, ties to the lexicographically
/// smaller id pair. When no pair overlaps, pairs instances by nearest box centers instead.
std::vector<MergePair> plan_round(const CollisionMatrix& c);

/// Full schedule until one instance remains. Merged instances score against others with the max
/// over their members and use the union of the member boxes.
MergeSchedule plan_merges(const CollisionMatrix& c);

/// Concatenation of a and b with every opacity reset to 0.
Scene merge_pair(std::span<const Gaussian> a, std::span<const Gaussian> b);

/// Mask-loss weight for merge round `round` (0-based): 0.05, 0.15, 0.25, 0.25, ...
double wmask_schedule(int round);

struct BoundaryRefineConfig {
    int steps = 50;
    double lr_opacity = 0.05;
    double lr_color = 0.01;
    double prune_threshold = 0.005;
    /// Opacity given to Gaussians that enter refinement at exactly 0 (freshly reset).
    double reset_opacity = 0.01;

    void validate() const;
};

struct RefineReport {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> history;  // loss before each step
    std::size_t pruned = 0;
};

/// Loss and gradients of a group over the training views. RGB targets are the images restricted
/// to the union of the group's refined masks (the full image when the group holds background);
/// the mask term averages over the (view, label) pairs that have a refined mask.
Gradients group_loss(std::span<const Gaussian> group, std::span<const ViewAssets> views,
                     std::span<const MaskSet> refined, double w_mask);

/// Adam on opacity and color, then pruning of near-transparent Gaussians. Returns the iterate with
/// the lowest loss seen, so the final loss never exceeds the initial one. Throws Error if the loss
/// becomes non-finite.
Scene boundary_refine(Scene group, std::span<const ViewAssets> views, std::span<const MaskSet> refined,
                      double w_mask, const BoundaryRefineConfig& cfg, RefineReport* report = nullptr);

struct AssembleConfig {
    BoundaryRefineConfig refine;
};

struct AssembleReport {
    std::vector<std::vector<MergePair>> rounds;
    std::vector<RefineReport> refinements;
};

/// Merges instances round by round (background, id 0, last) with boundary refinement after every
/// merge, and returns one labeled scene.
Scene assemble_scene(std::span<const Instance> instances, std::span<const ViewAssets> views,
                     std::span<const MaskSet> refined, const AssembleConfig& cfg, AssembleReport* report = nullptr);

/// Groups a labeled scene into one instance per label.
std::vector<Instance> split_instances(std::span<const Gaussian> scene);

}  // namespace splitsplat
