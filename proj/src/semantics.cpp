#include "splitsplat/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "splitsplat/image.hpp"
#include "splitsplat/rasterizer.hpp"

namespace splitsplat {

Eigen::Index DescriptorTable::dim() const {
    Eigen::Index d = 0;
    auto check = [&](const InstanceDescriptor& v) {
        if (d == 0) d = v.dim();
        if (v.dim() != d) throw Error("descriptor table: mixed dimensions");
    };
    for (const auto& [l, v] : instances) check(v);
    for (const auto& [i, v] : gaussians) check(v);
    return d;
}

void QueryConfig::validate() const {
    if (!(tau_corr >= 0.0)) throw Error("query: tau_corr must be >= 0");
}

InstanceDescriptor aggregate_instance_descriptor(std::span<const Eigen::VectorXd> views) {
    if (views.empty()) throw Error("aggregate_instance_descriptor: no views");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(views.front().size());
    for (const auto& v : views) {
        if (v.size() != sum.size()) throw Error("aggregate_instance_descriptor: dimension mismatch");
        sum += v;
    }
    return InstanceDescriptor::from_vector(sum / static_cast<double>(views.size()));
}

double cosine_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw Error("cosine_distance: dimension mismatch");
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw Error("cosine_distance: zero vector");
    return 1.0 - a.dot(b) / (na * nb);
}

std::vector<QueryMatch> query_open_vocab(const Eigen::VectorXd& f_text, const DescriptorTable& table,
                                         const QueryConfig& cfg) {
    cfg.validate();
    std::vector<QueryMatch> all;
    for (const auto& [l, d] : table.instances) all.push_back({l, cosine_distance(f_text, d.vector())});
    if (all.empty()) return all;
    std::sort(all.begin(), all.end(), [](const QueryMatch& a, const QueryMatch& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.label < b.label;
    });
    const double best = all.front().distance;
    std::vector<QueryMatch> out;
    for (const auto& m : all) {
        // The best match always qualifies, including at tau_corr = 0.
        if (out.empty() || std::abs(best - m.distance) < cfg.tau_corr) out.push_back(m);
    }
    return out;
}

std::vector<Mask> query_masks(std::span<const Label> labels, std::span<const Gaussian> scene,
                              std::span<const Camera> cameras) {
    std::vector<Mask> out;
    for (const auto& cam : cameras) {
        Mask m(cam.width, cam.height, 0);
        for (Label l : labels) m = mask_union(m, full_opacity_mask(scene, cam, l));
        out.push_back(std::move(m));
    }
    return out;
}

std::vector<Camera> sample_sphere_cameras(const BoundingBox3D& box, const Vec3& centroid, const Intrinsics& k,
                                          int elevations, int azimuths) {
    if (elevations < 1 || azimuths < 1) throw Error("sample_sphere_cameras: counts must be >= 1");
    const double d = box.diagonal();
    if (!(d > 0.0) || !std::isfinite(d)) throw Error("sample_sphere_cameras: degenerate bounding box");
    const double radius = 2.0 * d;
    constexpr double deg = std::numbers::pi / 180.0;
    std::vector<Camera> out;
    for (int i = 0; i < elevations; ++i) {
        const double el = (i + 0.5) * 90.0 / elevations * deg;
        for (int j = 0; j < azimuths; ++j) {
            const double az = j * 360.0 / azimuths * deg;
            const Vec3 dir(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
            out.push_back(look_at(centroid + radius * dir, centroid, Vec3::UnitZ(), k));
        }
    }
    return out;
}

std::vector<Camera> sample_sphere_cameras(std::span<const Gaussian> instance, const Intrinsics& k, int elevations,
                                          int azimuths) {
    if (instance.empty()) throw Error("sample_sphere_cameras: empty instance");
    Vec3 c = Vec3::Zero();
    for (const auto& g : instance) c += g.mean;
    c /= static_cast<double>(instance.size());
    return sample_sphere_cameras(instance_bbox(instance), c, k, elevations, azimuths);
}

std::map<std::size_t, InstanceDescriptor> assign_dense_descriptors(std::size_t scene_size,
                                                                   std::span<const Grid<std::int32_t>> ids,
                                                                   std::span<const FeatureMap> features) {
    if (ids.size() != features.size()) throw Error("assign_dense_descriptors: one feature map per view required");
    Eigen::Index dim = -1;
    for (const auto& f : features) {
        if (dim >= 0 && f.dim != dim) throw Error("assign_dense_descriptors: mixed feature dimensions");
        dim = f.dim;
    }
    if (dim <= 0) return {};
    std::vector<Eigen::VectorXd> sum(scene_size, Eigen::VectorXd::Zero(dim));
    std::vector<int> views_seen(scene_size, 0);

    for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto& idm = ids[k];
        const auto& fm = features[k];
        if (!idm.same_shape(fm.width, fm.height)) throw Error("assign_dense_descriptors: feature map size mismatch");
        std::map<std::size_t, std::pair<Eigen::VectorXd, int>> view_acc;
        for (int y = 0; y < idm.height; ++y)
            for (int x = 0; x < idm.width; ++x) {
                const std::int32_t id = idm(x, y);
                if (id < 0) continue;
                if (static_cast<std::size_t>(id) >= scene_size) throw Error("assign_dense_descriptors: id out of range");
                auto [it, fresh] = view_acc.try_emplace(static_cast<std::size_t>(id), Eigen::VectorXd::Zero(dim), 0);
                it->second.first += fm.at(x, y);
                ++it->second.second;
            }
        for (const auto& [g, acc] : view_acc) {
            sum[g] += acc.first / static_cast<double>(acc.second);
            ++views_seen[g];
        }
    }

    std::map<std::size_t, InstanceDescriptor> out;
    for (std::size_t g = 0; g < scene_size; ++g) {
        if (views_seen[g] == 0) continue;
        const Eigen::VectorXd mean = sum[g] / static_cast<double>(views_seen[g]);
        if (mean.norm() == 0.0 || !mean.allFinite()) continue;
        out.emplace(g, InstanceDescriptor::from_vector(mean));
    }
    return out;
}

std::map<std::size_t, InstanceDescriptor> assign_dense_descriptors(std::span<const Gaussian> scene,
                                                                   std::span<const Camera> cameras,
                                                                   std::span<const FeatureMap> features) {
    if (cameras.size() != features.size()) throw Error("assign_dense_descriptors: one feature map per camera required");
    std::vector<Grid<std::int32_t>> ids(cameras.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < cameras.size(); ++k) ids[k] = argmax_ids(scene, cameras[k]);
    return assign_dense_descriptors(scene.size(), ids, features);
}

}  // namespace splitsplat
