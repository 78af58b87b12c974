#include "splitsplat/editing.hpp"

#include <algorithm>

namespace splitsplat {

namespace {

void require_label(const Scene& scene, Label l) {
    if (std::none_of(scene.begin(), scene.end(), [l](const Gaussian& g) { return g.label == l; }))
        throw Error("unknown instance label " + std::to_string(l));
}

}  // namespace

Scene remove_instance(Scene scene, Label l) {
    require_label(scene, l);
    std::erase_if(scene, [l](const Gaussian& g) { return g.label == l; });
    return scene;
}

Scene duplicate_instance(Scene scene, Label l, const Vec3& offset, Label* fresh_label) {
    require_label(scene, l);
    Label fresh = kBackground;
    for (const auto& g : scene) fresh = std::max(fresh, g.label);
    ++fresh;
    const std::size_t n = scene.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (scene[i].label != l) continue;
        Gaussian copy = scene[i];
        copy.mean += offset;
        copy.label = fresh;
        scene.push_back(copy);
    }
    if (fresh_label) *fresh_label = fresh;
    return scene;
}

Scene transform_instance(Scene scene, Label l, const RigidTransform& t) {
    require_label(scene, l);
    t.validate();
    if (t.rotation == Mat3::Identity() && t.translation.isZero(0.0)) return scene;
    const Quat q(t.rotation);
    for (auto& g : scene) {
        if (g.label != l) continue;
        g.mean = t.apply(g.mean);
        g.rotation = (q * g.rotation).normalized();
    }
    return scene;
}

Scene recolor_instance(Scene scene, Label l, const Vec3& rgb) {
    require_label(scene, l);
    if (!rgb.allFinite()) throw Error("recolor: color must be finite");
    for (auto& g : scene)
        if (g.label == l) g.color = rgb;
    return scene;
}

}  // namespace splitsplat
