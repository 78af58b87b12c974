#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "splitsplat/camera.hpp"
#include "splitsplat/merging.hpp"
#include "splitsplat/scene.hpp"

namespace splitsplat {

inline constexpr double kDefaultTauCorr = 0.02;

/// Instance descriptors f_obj and, optionally, per-Gaussian descriptors f_g. All unit-norm, one dimension.
struct DescriptorTable {
    std::map<Label, InstanceDescriptor> instances;
    std::map<std::size_t, InstanceDescriptor> gaussians;

    /// Common dimension, 0 when empty. Throws Error when entries disagree.
    Eigen::Index dim() const;
};

struct QueryConfig {
    double tau_corr = kDefaultTauCorr;

    void validate() const;
};

/// Mean of the per-view vectors, then L2-normalized. Throws Error on empty input, mismatched
/// dimensions or a zero mean.
InstanceDescriptor aggregate_instance_descriptor(std::span<const Eigen::VectorXd> views);

/// 1 - cosine similarity.
double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct QueryMatch {
    Label label;
    double distance;
};

/// Every instance whose cosine distance to f_text is within tau_corr of the best one, ascending by
/// distance (ties to the smaller label). Empty table gives an empty result.
std::vector<QueryMatch> query_open_vocab(const Eigen::VectorXd& f_text, const DescriptorTable& table,
                                         const QueryConfig& cfg = {});

/// Per camera, the union of the full-opacity masks of the matched labels.
std::vector<Mask> query_masks(std::span<const Label> labels, std::span<const Gaussian> scene,
                              std::span<const Camera> cameras);

/// Cameras on the upper hemisphere (z up) of radius 2 * box.diagonal() around `centroid`, all looking
/// at it. Elevations are (i + 0.5) * 90 / elevations degrees, azimuths j * 360 / azimuths degrees.
std::vector<Camera> sample_sphere_cameras(const BoundingBox3D& box, const Vec3& centroid, const Intrinsics& k,
                                          int elevations = 6, int azimuths = 12);

/// Same, centered on the mean of the instance's Gaussian positions.
std::vector<Camera> sample_sphere_cameras(std::span<const Gaussian> instance, const Intrinsics& k,
                                          int elevations = 6, int azimuths = 12);

/// Row-major H x W feature map with D channels per pixel.
struct FeatureMap {
    int width = 0;
    int height = 0;
    Eigen::Index dim = 0;
    std::vector<double> data;  // H*W*D

    FeatureMap() = default;
    FeatureMap(int w, int h, Eigen::Index d)
        : width(w), height(h), dim(d), data(static_cast<std::size_t>(w) * h * static_cast<std::size_t>(d), 0.0) {}
    Eigen::Map<const Eigen::VectorXd> at(int x, int y) const {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * static_cast<std::size_t>(dim), dim};
    }
    Eigen::Map<Eigen::VectorXd> at(int x, int y) {
        return {data.data() + (static_cast<std::size_t>(y) * width + x) * static_cast<std::size_t>(dim), dim};
    }
};

/// Per view, each pixel's feature goes to the Gaussian with the largest blending weight there; a
/// Gaussian's descriptor is the mean of its per-view averages over the views where it owned a pixel,
/// normalized. Gaussians that never own a pixel (or average to zero) get no entry.
std::map<std::size_t, InstanceDescriptor> assign_dense_descriptors(std::span<const Gaussian> scene,
                                                                   std::span<const Camera> cameras,
                                                                   std::span<const FeatureMap> features);

/// Same with precomputed argmax id maps (one per view).
std::map<std::size_t, InstanceDescriptor> assign_dense_descriptors(std::size_t scene_size,
                                                                   std::span<const Grid<std::int32_t>> ids,
                                                                   std::span<const FeatureMap> features);

}  // namespace splitsplat
