#pragma once

#include <map>
#include <span>
#include <vector>

#include "splitsplat/projection.hpp"
#include "splitsplat/scene.hpp"

namespace splitsplat {

inline constexpr double kDefaultTauLabel = 0.7;
inline constexpr double kDefaultLambdaInit = 0.5;

/// One calibrated view: camera, color image, depth and its per-view masks.
struct ViewAssets {
    Camera camera;
    Image image;
    DepthMap depth;
    MaskSet masks;
};

/// Which labeled points are warped into view k to build the virtual masks.
enum class WarpSource {
    previous_view,  // only the points labeled while processing view k-1
    accumulated,    // every point labeled so far, with its current argmax label
};

struct PropagationConfig {
    double tau_depth = kDefaultTauDepth;
    double tau_label = kDefaultTauLabel;
    double lambda_init = kDefaultLambdaInit;
    int erosion_radius = 1;
    double dbscan_eps = 0.0;  // <= 0: dbscan_eps_factor times the median nearest-neighbor distance
    double dbscan_eps_factor = 2.0;
    int dbscan_min_pts = 8;
    bool dbscan_enabled = true;
    int splat_radius = 2;
    // Smallest fraction of a local mask the best virtual mask must cover to pass its label on.
    // Disks stamped near an occlusion boundary bleed a few pixels onto neighbors; without a floor
    // such slivers hand a newly seen object its neighbor's label.
    double remap_min_overlap = 0.1;
    WarpSource warp_source = WarpSource::accumulated;

    void validate() const;
};

/// Global instance ids and the per-view local -> global mapping.
class GlobalLabelRegistry {
public:
    Label fresh() { return next_++; }
    Label next() const { return next_; }
    void map(int view, Label local, Label global) { views_[view][local] = global; }
    const std::map<Label, Label>& view_map(int view) const;
    const std::map<int, std::map<Label, Label>>& views() const { return views_; }

private:
    Label next_ = 1;
    std::map<int, std::map<Label, Label>> views_;
};

/// Local mask id -> indices (ProjectedPoint::index) of points whose floor pixel lies in the eroded mask.
std::map<Label, std::vector<std::size_t>> assign_points_to_masks(std::span<const ProjectedPoint> points,
                                                                 const MaskSet& masks, int erosion_radius);

/// Indices of points that are DBSCAN core points or lie within eps of one. Neighborhoods are closed
/// balls and include the point itself. Ascending order.
std::vector<std::size_t> dbscan_filter(std::span<const Vec3> points, double eps, int min_pts);

/// Labeled points that survive the in-bounds and surface tests in `camera`, stamped as disks.
std::map<Label, Mask> warp_virtual_masks(std::span<const Vec3> points, std::span<const Label> labels,
                                         const Camera& camera, const DepthMap& depth, int splat_radius,
                                         double tau_depth = kDefaultTauDepth);

/// Maps each local mask to the global label whose virtual mask intersects it most (ties to the
/// smaller label). Masks whose best intersection is empty or covers less than `min_overlap` of their
/// pixels get a fresh label from the registry.
std::map<Label, Label> remap_labels(const std::map<Label, Mask>& virtual_masks, const MaskSet& current,
                                    GlobalLabelRegistry& registry, double min_overlap = 0.0);

/// (point index, global label) observations of one view.
using ViewObservations = std::vector<std::pair<std::size_t, Label>>;

/// First observation of a point scores 1 + lambda_init, later ones add 1.
void update_weights(const ViewObservations& observations, std::vector<LabelWeights>& weights, double lambda_init);

struct FinalLabels {
    std::vector<std::size_t> kept;  // indices of points that passed tau_label
    std::vector<Label> labels;      // one per kept point
};

/// Normalizes each weight vector, takes the argmax (ties to the smaller label) and drops points whose
/// normalized maximum is below tau_label.
FinalLabels finalize_labels(std::span<const LabelWeights> weights, double tau_label);

struct PropagationResult {
    PointCloud labeled;                  // P_labeled: kept points with labels and raw weights
    std::vector<std::size_t> labeled_source;  // index into the dense cloud per labeled point
    std::vector<Label> dense_labels;     // per dense point; background when discarded
    std::vector<MaskSet> masks;          // view-consistent masks with global labels
    std::vector<LabelWeights> weights;   // per dense point
    GlobalLabelRegistry registry;
};

/// Sequential sweep over the views in input order, then voting and mask re-projection.
PropagationResult propagate(std::span<const ViewAssets> views, const PointCloud& dense, const PropagationConfig& cfg);

/// Relabels each raw mask of a view with the majority label of the labeled points it contains;
/// masks sharing a label are merged and masks without labeled points are dropped.
MaskSet reproject_masks(const MaskSet& raw, std::span<const Vec3> points, std::span<const Label> labels,
                        const Camera& camera, const DepthMap& depth, double tau_depth);

}  // namespace splitsplat
