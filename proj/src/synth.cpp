#include "splitsplat/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "splitsplat/camera.hpp"
#include "splitsplat/image.hpp"
#include "splitsplat/rasterizer.hpp"

namespace splitsplat {

void CorruptionSpec::validate() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(split_probability) || !prob(drop_probability)) throw Error("corruption: probabilities must lie in [0, 1]");
    if (dilation_px < 0) throw Error("corruption: dilation must be >= 0");
}

void SynthSpec::validate() const {
    if (objects < 1 || gaussians_per_object < 1 || cameras < 1) throw Error("synth: counts must be >= 1");
    if (width < 1 || height < 1) throw Error("synth: image dimensions must be >= 1");
    if (!(object_radius > 0.0) || !(spacing > 0.0) || !(orbit_radius > 0.0))
        throw Error("synth: radii and spacing must be > 0");
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw Error("synth: fov must lie in (0, 180)");
    corruption.validate();
}

namespace {

// Rotation whose z axis is n.
Quat frame_from_normal(const Vec3& n) {
    return Quat::FromTwoVectors(Vec3::UnitZ(), n).normalized();
}

Vec3 object_color(int i) {
    // Evenly spaced hues, full saturation, mid value.
    const double h = std::fmod(i * 0.618033988749895, 1.0) * 6.0;
    const double x = 1.0 - std::abs(std::fmod(h, 2.0) - 1.0);
    Vec3 c;
    switch (static_cast<int>(h)) {
        case 0: c = {1, x, 0}; break;
        case 1: c = {x, 1, 0}; break;
        case 2: c = {0, 1, x}; break;
        case 3: c = {0, x, 1}; break;
        case 4: c = {x, 0, 1}; break;
        default: c = {1, 0, x}; break;
    }
    return 0.15 + 0.7 * c.array();
}

}  // namespace

SynthScene generate_scene(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    SynthScene out;

    const int n = spec.objects;
    const double ring = n == 1 ? 0.0 : spec.spacing / (2.0 * std::sin(std::numbers::pi / n));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / n;
        const Vec3 center(ring * std::cos(phi), ring * std::sin(phi), 0.0);
        const Vec3 axes = spec.object_radius * Vec3(0.8 + 0.4 * unit(rng), 0.8 + 0.4 * unit(rng), 0.8 + 0.4 * unit(rng));
        const Quat orient = Quat(Eigen::AngleAxisd(2.0 * std::numbers::pi * unit(rng), Vec3::UnitZ()));
        const Vec3 color = object_color(i);
        const int m = spec.gaussians_per_object;
        // Mean spacing of the samples on the shell sets the footprint of each flat splat.
        const double area = 4.0 * std::numbers::pi * std::pow(axes.prod(), 2.0 / 3.0);
        const double step = std::sqrt(area / m);
        for (int j = 0; j < m; ++j) {
            const double z = 1.0 - 2.0 * (j + 0.5) / m;
            const double r = std::sqrt(1.0 - z * z);
            const Vec3 u(r * std::cos(golden * j), r * std::sin(golden * j), z);
            Gaussian g;
            g.mean = center + orient * u.cwiseProduct(axes);
            g.rotation = frame_from_normal((orient * u.cwiseQuotient(axes)).normalized());
            g.scale = Vec3(0.6 * step, 0.6 * step, 0.05 * step);
            g.opacity = 0.9;
            const double shade = 0.9 + 0.1 * unit(rng);
            g.color = shade * color;
            g.label = i + 1;
            out.scene.push_back(g);
        }
    }

    if (spec.ground) {
        const double extent = ring + 2.0 * spec.object_radius;
        const double z = -1.3 * spec.object_radius;
        const int cells = std::max(8, static_cast<int>(std::ceil(2.0 * extent / (0.5 * spec.object_radius))));
        const double step = 2.0 * extent / cells;
        for (int a = 0; a <= cells; ++a)
            for (int b = 0; b <= cells; ++b) {
                Gaussian g;
                g.mean = Vec3(-extent + a * step, -extent + b * step, z);
                g.scale = Vec3(0.6 * step, 0.6 * step, 0.05 * step);
                g.opacity = 0.9;
                g.color = Vec3::Constant(0.35 + 0.1 * unit(rng));
                g.label = kBackground;
                out.scene.push_back(g);
            }
    }

    const Intrinsics k = Intrinsics::from_fov(spec.width, spec.height, spec.fov_deg);
    for (int c = 0; c < spec.cameras; ++c) {
        const double phi = 2.0 * std::numbers::pi * c / spec.cameras;
        const Vec3 eye(spec.orbit_radius * std::cos(phi), spec.orbit_radius * std::sin(phi), spec.orbit_height);
        out.cameras.push_back(look_at(eye, Vec3::Zero(), Vec3::UnitZ(), k));
    }
    return out;
}

std::vector<ViewAssets> render_gt_views(std::span<const Gaussian> scene, std::span<const Camera> cameras) {
    const auto labels = scene_labels(scene);
    std::vector<ViewAssets> views(cameras.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < cameras.size(); ++k) {
        const Camera& cam = cameras[k];
        RenderOptions opts;
        opts.want_ids = true;
        RenderOutput r = render(scene, cam, opts);
        ViewAssets& v = views[k];
        v.camera = cam;
        v.image = std::move(r.rgb);
        v.depth = DepthMap::invalid(cam.width, cam.height);
        v.masks.view_id = static_cast<int>(k);
        v.masks.stage = MaskStage::raw;
        v.masks.width = cam.width;
        v.masks.height = cam.height;
        std::map<Label, Mask> silhouettes;
        for (Label l : labels)
            if (l != kBackground) silhouettes.emplace(l, full_opacity_mask(scene, cam, l));
        for (int y = 0; y < cam.height; ++y)
            for (int x = 0; x < cam.width; ++x) {
                const std::int32_t id = r.ids(x, y);
                if (id < 0) continue;
                const Gaussian& g = scene[static_cast<std::size_t>(id)];
                v.depth(x, y) = static_cast<float>(cam.to_camera(g.mean).z());
                if (g.label == kBackground || !silhouettes.at(g.label)(x, y)) continue;
                auto [it, fresh] = v.masks.masks.try_emplace(g.label, cam.width, cam.height, 0);
                it->second(x, y) = 1;
            }
    }
    return views;
}

std::vector<MaskSet> corrupt_masks(std::span<const MaskSet> gt, const CorruptionSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::vector<MaskSet> out;
    for (const MaskSet& view : gt) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(view.view_id)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::vector<std::pair<Label, Mask>> masks(view.masks.begin(), view.masks.end());
        Label next_id = masks.empty() ? 1 : masks.back().first + 1;

        if (!masks.empty() && unit(rng) < spec.split_probability) {
            const std::size_t pick = std::uniform_int_distribution<std::size_t>(0, masks.size() - 1)(rng);
            const double angle = 2.0 * std::numbers::pi * unit(rng);
            Mask& m = masks[pick].second;
            Vec2 c = Vec2::Zero();
            std::size_t cnt = 0;
            for (int y = 0; y < m.height; ++y)
                for (int x = 0; x < m.width; ++x)
                    if (m(x, y)) {
                        c += Vec2(x + 0.5, y + 0.5);
                        ++cnt;
                    }
            if (cnt > 0) {
                c /= static_cast<double>(cnt);
                const Vec2 normal(std::cos(angle), std::sin(angle));
                Mask other(m.width, m.height, 0);
                for (int y = 0; y < m.height; ++y)
                    for (int x = 0; x < m.width; ++x)
                        if (m(x, y) && (Vec2(x + 0.5, y + 0.5) - c).dot(normal) >= 0.0) {
                            m(x, y) = 0;
                            other(x, y) = 1;
                        }
                masks.emplace_back(next_id++, std::move(other));
            }
        }

        std::erase_if(masks, [&](const auto&) { return unit(rng) < spec.drop_probability; });
        std::erase_if(masks, [](const auto& p) { return count(p.second) == 0; });
        if (spec.dilation_px > 0)
            for (auto& [id, m] : masks) m = dilate(m, spec.dilation_px);

        std::vector<Label> ids;
        for (const auto& p : masks) ids.push_back(p.first);
        if (spec.permute_ids) {
            std::vector<Label> fresh(masks.size());
            for (std::size_t i = 0; i < fresh.size(); ++i) fresh[i] = static_cast<Label>(i + 1);
            std::shuffle(fresh.begin(), fresh.end(), rng);
            ids = fresh;
        }

        MaskSet r;
        r.view_id = view.view_id;
        r.stage = MaskStage::raw;
        r.width = view.width;
        r.height = view.height;
        for (std::size_t i = 0; i < masks.size(); ++i) r.masks.emplace(ids[i], std::move(masks[i].second));
        out.push_back(std::move(r));
    }
    return out;
}

std::map<int, LabelImage> gt_label_images(std::span<const ViewAssets> views) {
    std::map<int, LabelImage> out;
    for (const auto& v : views) out.emplace(v.masks.view_id, v.masks.to_label_image());
    return out;
}

PointCloud scene_point_cloud(std::span<const Gaussian> scene) {
    PointCloud pc;
    for (const auto& g : scene) {
        pc.points.push_back(g.mean);
        pc.labels.push_back(g.label);
    }
    return pc;
}

}  // namespace splitsplat
