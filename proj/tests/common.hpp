#pragma once

#include <random>

#include "splitsplat/camera.hpp"
#include "splitsplat/scene.hpp"
#include "splitsplat/synth.hpp"

namespace testutil {

using namespace splitsplat;

// Camera at the origin looking down +z with the principal point at the image center.
inline Camera front_camera(int w, int h, double f) {
    Camera c;
    c.fx = c.fy = f;
    c.cx = w / 2.0;
    c.cy = h / 2.0;
    c.width = w;
    c.height = h;
    return c;
}

inline Quat random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Quat q(n(rng), n(rng), n(rng), n(rng));
    return q.normalized();
}

// n Gaussians in front of front_camera(w, h, f), spread over the image, depths in [2, 4].
inline Scene random_scene(std::mt19937_64& rng, int n, int w, int h, double f, double min_scale = 0.05,
                          double max_scale = 0.25) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Scene s;
    for (int i = 0; i < n; ++i) {
        Gaussian g;
        const double z = 2.0 + 2.0 * u(rng);
        const double px = 0.15 * w + 0.7 * w * u(rng), py = 0.15 * h + 0.7 * h * u(rng);
        g.mean = Vec3((px - w / 2.0) * z / f, (py - h / 2.0) * z / f, z);
        g.scale = Vec3(min_scale + (max_scale - min_scale) * u(rng), min_scale + (max_scale - min_scale) * u(rng),
                       min_scale + (max_scale - min_scale) * u(rng));
        g.rotation = random_rotation(rng);
        g.opacity = 0.2 + 0.75 * u(rng);
        g.color = Vec3(u(rng), u(rng), u(rng));
        g.label = 1 + i % 3;
        s.push_back(g);
    }
    return s;
}

inline Mask random_mask(std::mt19937_64& rng, int w, int h, double p) {
    std::bernoulli_distribution b(p);
    Mask m(w, h, 0);
    for (auto& v : m.data) v = b(rng);
    return m;
}

// Union of random filled rectangles; gives masks with interiors, unlike per-pixel noise.
inline Mask random_blob_mask(std::mt19937_64& rng, int w, int h, int rects) {
    Mask m(w, h, 0);
    std::uniform_int_distribution<int> ux(0, w - 1), uy(0, h - 1);
    for (int r = 0; r < rects; ++r) {
        int x0 = ux(rng), x1 = ux(rng), y0 = uy(rng), y1 = uy(rng);
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) m(x, y) = 1;
    }
    return m;
}

// Synthetic scene with GT views whose masks are replaced by corrupted copies.
struct SynthFixture {
    SynthScene synth;
    std::vector<ViewAssets> views;
    std::vector<MaskSet> gt_masks;
    PointCloud dense;  // Gaussian means; labels are the GT
};

inline SynthFixture make_synth(const SynthSpec& spec, const CorruptionSpec& corruption, std::uint64_t corruption_seed) {
    SynthFixture f;
    f.synth = generate_scene(spec);
    f.views = render_gt_views(f.synth.scene, f.synth.cameras);
    for (const auto& v : f.views) f.gt_masks.push_back(v.masks);
    const auto raw = corrupt_masks(f.gt_masks, corruption, corruption_seed);
    for (std::size_t k = 0; k < f.views.size(); ++k) f.views[k].masks = raw[k];
    f.dense = scene_point_cloud(f.synth.scene);
    return f;
}

// Two flat objects side by side at z = 3 seen by a few frontal cameras, plus a floater that belongs
// to object 1 but hangs in front of object 2. Views and masks are rendered from the clean scene, so
// the floater is absent from every mask and contradicts the colors behind it.
struct OcclusionFixture {
    Scene clean;
    std::size_t floater = 0;  // index of the floater in `with_floater`
    Scene with_floater;
    std::vector<ViewAssets> views;
    std::vector<MaskSet> refined;
};

inline OcclusionFixture make_occlusion() {
    OcclusionFixture f;
    auto patch = [&](double x0, Label label, const Vec3& color) {
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 8; ++j) {
                Gaussian g;
                g.mean = Vec3(x0 + 0.1 * i, -0.35 + 0.1 * j, 3.0);
                g.scale = Vec3(0.07, 0.07, 0.01);
                g.opacity = 0.95;
                g.color = color;
                g.label = label;
                f.clean.push_back(g);
            }
    };
    patch(-0.65, 1, Vec3(0.9, 0.2, 0.1));
    patch(0.15, 2, Vec3(0.1, 0.8, 0.3));
    Gaussian floater;
    floater.mean = Vec3(0.4, 0.0, 2.0);
    floater.scale = Vec3::Constant(0.06);
    floater.opacity = 0.9;
    floater.color = Vec3(0.05, 0.05, 0.6);
    floater.label = 1;
    f.with_floater = f.clean;
    f.floater = f.with_floater.size();
    f.with_floater.push_back(floater);

    std::vector<Camera> cams;
    for (int k = 0; k < 4; ++k) {
        Camera c = front_camera(48, 40, 40.0);
        c.translation = Vec3(-0.15 + 0.1 * k, 0.05 * (k % 2), 0.0);
        cams.push_back(c);
    }
    f.views = render_gt_views(f.clean, cams);
    for (const auto& v : f.views) {
        MaskSet m = v.masks;
        m.stage = MaskStage::refined;
        f.refined.push_back(m);
    }
    return f;
}

}  // namespace testutil
