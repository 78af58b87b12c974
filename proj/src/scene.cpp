#include "splitsplat/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace splitsplat {

void Camera::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw Error("camera: focal lengths must be positive");
    if (width < 1 || height < 1) throw Error("camera: image dimensions must be >= 1");
    if (std::abs(rotation.norm() - 1.0) > 1e-6) throw Error("camera: rotation quaternion is not unit");
    if (!translation.allFinite() || !std::isfinite(cx) || !std::isfinite(cy))
        throw Error("camera: non-finite parameters");
}

void Gaussian::validate() const {
    if (!mean.allFinite()) throw Error("gaussian: non-finite mean");
    if (!(scale.minCoeff() > 0.0)) throw Error("gaussian: scale components must be positive");
    if (!(opacity >= 0.0 && opacity <= 1.0)) throw Error("gaussian: opacity outside [0,1]");
    if (std::abs(rotation.norm() - 1.0) > 1e-6) throw Error("gaussian: rotation quaternion is not unit");
}

Mat3 Gaussian::covariance() const {
    const Mat3 r = rotation.toRotationMatrix();
    return r * scale.cwiseAbs2().asDiagonal() * r.transpose();
}

bool Gaussian::operator==(const Gaussian& o) const {
    return mean == o.mean && scale == o.scale && rotation.coeffs() == o.rotation.coeffs() &&
           opacity == o.opacity && color == o.color && label == o.label && descriptor_id == o.descriptor_id;
}

DepthMap DepthMap::invalid(int w, int h) {
    DepthMap d;
    d.width = w;
    d.height = h;
    d.data.assign(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::quiet_NaN());
    return d;
}

bool DepthMap::valid(int x, int y) const {
    const float v = (*this)(x, y);
    return std::isfinite(v) && v > 0.0f;
}

std::string to_string(MaskStage stage) {
    switch (stage) {
        case MaskStage::raw: return "raw";
        case MaskStage::propagated: return "propagated";
        case MaskStage::refined: return "refined";
    }
    return "raw";
}

MaskStage mask_stage_from_string(const std::string& s) {
    if (s == "raw") return MaskStage::raw;
    if (s == "propagated") return MaskStage::propagated;
    if (s == "refined") return MaskStage::refined;
    throw Error("unknown mask stage '" + s + "'");
}

void MaskSet::validate() const {
    for (const auto& [id, m] : masks) {
        if (!m.same_shape(width, height))
            throw Error("mask set of view " + std::to_string(view_id) + ": mask " + std::to_string(id) +
                        " does not match view dimensions");
    }
}

const Mask* MaskSet::find(Label id) const {
    auto it = masks.find(id);
    return it == masks.end() ? nullptr : &it->second;
}

LabelImage MaskSet::to_label_image() const {
    LabelImage img(width, height, 0);
    for (const auto& [id, m] : masks)
        for (std::size_t i = 0; i < m.data.size(); ++i)
            if (m.data[i]) img.data[i] = id;
    return img;
}

MaskSet MaskSet::from_label_image(const LabelImage& img, int view_id, MaskStage stage) {
    MaskSet set;
    set.view_id = view_id;
    set.stage = stage;
    set.width = img.width;
    set.height = img.height;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        const Label id = img.data[i];
        if (id == 0) continue;
        auto [it, inserted] = set.masks.try_emplace(id, img.width, img.height, std::uint8_t{0});
        it->second.data[i] = 1;
    }
    return set;
}

double LabelWeights::score(Label l) const {
    auto it = scores_.find(l);
    return it == scores_.end() ? 0.0 : it->second;
}

void LabelWeights::add(Label l, double v) { scores_[l] += v; }

void LabelWeights::set(Label l, double v) { scores_[l] = v; }

double LabelWeights::total() const {
    double s = 0.0;
    for (const auto& [l, v] : scores_) s += v;
    return s;
}

LabelWeights LabelWeights::normalized() const {
    LabelWeights out;
    const double t = total();
    if (t <= 0.0) return out;
    for (const auto& [l, v] : scores_) out.scores_[l] = v / t;
    return out;
}

std::pair<Label, double> LabelWeights::argmax() const {
    // std::map iterates labels ascending, so strict > keeps the smaller label on ties.
    std::pair<Label, double> best{kBackground, -1.0};
    for (const auto& [l, v] : scores_)
        if (v > best.second) best = {l, v};
    return best;
}

InstanceDescriptor InstanceDescriptor::from_vector(const Eigen::VectorXd& v) {
    if (!v.allFinite()) throw Error("descriptor: non-finite components");
    const double n = v.norm();
    if (!(n > 1e-12)) throw Error("degenerate descriptor: zero vector cannot be normalized");
    InstanceDescriptor d;
    d.v_ = v / n;
    return d;
}

Scene instance_subset(std::span<const Gaussian> scene, Label l) {
    Scene out;
    for (const auto& g : scene)
        if (g.label == l) out.push_back(g);
    return out;
}

std::vector<std::size_t> instance_indices(std::span<const Gaussian> scene, Label l) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (scene[i].label == l) out.push_back(i);
    return out;
}

std::vector<Label> scene_labels(std::span<const Gaussian> scene) {
    std::set<Label> s;
    for (const auto& g : scene) s.insert(g.label);
    return {s.begin(), s.end()};
}

std::vector<Vec3> gaussian_means(std::span<const Gaussian> scene) {
    std::vector<Vec3> out;
    out.reserve(scene.size());
    for (const auto& g : scene) out.push_back(g.mean);
    return out;
}

}  // namespace splitsplat
