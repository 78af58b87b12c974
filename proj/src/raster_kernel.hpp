#pragma once

// Per-pixel compositing shared by the tiled kernels and the serial reference.

#include <cmath>
#include <vector>

#include "splitsplat/rasterizer.hpp"

namespace splitsplat::kernel {

/// Contribution alpha*G of splat s at pixel (x, y), or 0 when truncated or below kMinContribution.
inline double contribution(const Splat2D& s, int x, int y, double& gauss) {
    const double q = s.mahalanobis2(x, y);
    if (q > kMaxMahalanobis2) return 0.0;
    gauss = std::exp(-0.5 * q);
    const double a = s.opacity * gauss;
    return a < kMinContribution ? 0.0 : a;
}

struct PixelSample {
    Vec3 color = Vec3::Zero();
    double alpha = 0.0;
    std::int32_t id = -1;
};

/// Front-to-back compositing over `order` (indices into splats, already depth sorted).
/// `on_contrib(k)` is called with the position in `order` of every contributing splat.
template <typename Order, typename OnContrib>
PixelSample composite(const std::vector<Splat2D>& splats, const Order& order, int x, int y, OnContrib&& on_contrib) {
    PixelSample px;
    double transmittance = 1.0;
    double best_weight = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Splat2D& s = splats[order[k]];
        double g = 0.0;
        const double a = contribution(s, x, y, g);
        if (a == 0.0) continue;
        const double w = a * transmittance;
        px.color += s.color * w;
        if (w > best_weight) {
            best_weight = w;
            px.id = static_cast<std::int32_t>(s.source);
        }
        transmittance *= 1.0 - a;
        on_contrib(k);
    }
    px.alpha = 1.0 - transmittance;
    return px;
}

struct Contribution {
    std::size_t slot;  // position in the pixel's splat order
    double a;
    double gauss;
    double transmittance;  // before this splat
};

struct PixelLoss {
    double rgb = 0.0;   // sum over channels of |C - target|
    double mask = 0.0;  // |A - target|
};

inline double l1_sign(double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }

/// Loss and gradient contributions of one pixel. `add_grad(slot, d_opacity, d_color)` receives the
/// per-splat terms, emitted back-to-front.
template <typename Order, typename AddGrad>
PixelLoss backward_pixel(const std::vector<Splat2D>& splats, const Order& order, int x, int y,
                         const LossTerms& terms, double rgb_scale, double mask_scale,
                         std::vector<Contribution>& scratch, AddGrad&& add_grad) {
    scratch.clear();
    Vec3 color = Vec3::Zero();
    double transmittance = 1.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Splat2D& s = splats[order[k]];
        double g = 0.0;
        const double a = contribution(s, x, y, g);
        if (a == 0.0) continue;
        scratch.push_back({k, a, g, transmittance});
        color += s.color * (a * transmittance);
        transmittance *= 1.0 - a;
    }
    const double alpha = 1.0 - transmittance;

    PixelLoss loss;
    Vec3 d_color_px = Vec3::Zero();
    double d_alpha_px = 0.0;
    if (terms.target_rgb) {
        const double* t = terms.target_rgb->at(x, y);
        for (int c = 0; c < 3; ++c) {
            const double diff = color[c] - t[c];
            loss.rgb += std::abs(diff);
            d_color_px[c] = rgb_scale * l1_sign(diff);
        }
    }
    if (terms.target_mask) {
        const double diff = alpha - static_cast<double>((*terms.target_mask)(x, y) != 0);
        loss.mask = std::abs(diff);
        d_alpha_px = mask_scale * l1_sign(diff);
    }
    if (d_color_px.isZero() && d_alpha_px == 0.0) return loss;

    // Color and alpha composited behind the current splat.
    Vec3 behind = Vec3::Zero();
    double behind_alpha = 0.0;
    for (auto it = scratch.rbegin(); it != scratch.rend(); ++it) {
        const Splat2D& s = splats[order[it->slot]];
        const double d_a = it->transmittance * (d_color_px.dot(s.color - behind) + d_alpha_px * (1.0 - behind_alpha));
        add_grad(it->slot, d_a * it->gauss, d_color_px * (it->a * it->transmittance));
        behind = s.color * it->a + behind * (1.0 - it->a);
        behind_alpha = it->a + behind_alpha * (1.0 - it->a);
    }
    return loss;
}

}  // namespace splitsplat::kernel
