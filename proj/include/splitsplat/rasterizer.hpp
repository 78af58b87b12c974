#pragma once

#include <optional>
#include <span>
#include <vector>

#include "splitsplat/scene.hpp"

namespace splitsplat {

/// Added to the diagonal of every projected covariance (px^2).
inline constexpr double kLowPassFilter = 0.3;
/// Contributions alpha*G below this are skipped.
inline constexpr double kMinContribution = 1.0 / 255.0;
/// Splats are truncated beyond Mahalanobis distance 3.
inline constexpr double kMaxMahalanobis2 = 9.0;
/// Accumulated-alpha threshold that binarizes full-opacity instance masks.
inline constexpr double kMaskThreshold = 0.5;

/// A Gaussian projected into one view. Pixel (x, y) is sampled at its center (x + 0.5, y + 0.5).
struct Splat2D {
    std::size_t source = 0;  // index into the rendered scene
    Vec2 mean = Vec2::Zero();
    Mat2 cov = Mat2::Identity();
    Mat2 conic = Mat2::Identity();  // inverse of cov
    double depth = 0.0;
    double opacity = 0.0;
    Vec3 color = Vec3::Zero();
    // Inclusive pixel range covered by the 3-sigma ellipse, clipped to the image.
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;

    /// Mahalanobis distance squared from the splat mean to the center of pixel (x, y).
    double mahalanobis2(int x, int y) const {
        const double dx = x + 0.5 - mean.x(), dy = y + 0.5 - mean.y();
        return conic(0, 0) * dx * dx + 2.0 * conic(0, 1) * dx * dy + conic(1, 1) * dy * dy;
    }
};

/// EWA projection with the low-pass term. std::nullopt when the Gaussian is at or behind the camera
/// plane or its 3-sigma footprint misses every pixel center.
std::optional<Splat2D> project_gaussian(const Gaussian& g, const Camera& camera, std::size_t source = 0);

struct RenderOptions {
    std::optional<Label> only_label;  // render just this instance
    bool full_opacity = false;        // treat every rendered Gaussian as alpha = 1
    bool want_ids = false;            // per-pixel id of the Gaussian with the largest blending weight
    bool want_contributors = false;   // per-Gaussian flag: contributed >= kMinContribution somewhere
};

struct RenderOutput {
    Image rgb;
    Grid<double> alpha;
    Grid<std::int32_t> ids;                // -1 where nothing contributes; empty unless requested
    std::vector<std::uint8_t> contributed;  // one per scene Gaussian; empty unless requested

    Mask alpha_mask(double threshold = kMaskThreshold) const;
};

/// Front-to-back over-compositing onto a black background.
RenderOutput render(std::span<const Gaussian> scene, const Camera& camera, const RenderOptions& opts = {});

/// Silhouette of instance `label` rendered at full opacity, binarized at kMaskThreshold.
Mask full_opacity_mask(std::span<const Gaussian> scene, const Camera& camera, Label label);

/// Per-pixel index of the Gaussian with the largest blending weight alpha*G*T, -1 if none.
Grid<std::int32_t> argmax_ids(std::span<const Gaussian> scene, const Camera& camera);

/// Loss l = rgb_weight * mean|C - target_rgb| + mask_weight * mean|A - target_mask|, where C is the
/// rendered color, A the accumulated alpha, and means run over pixels (and channels for RGB).
struct LossTerms {
    const Image* target_rgb = nullptr;
    double rgb_weight = 1.0;
    const Mask* target_mask = nullptr;
    double mask_weight = 0.0;
};

struct Gradients {
    std::vector<double> opacity;  // dl/d(alpha), one per scene Gaussian
    std::vector<Vec3> color;      // dl/d(color)
    double loss = 0.0;
    double loss_rgb = 0.0;   // unweighted
    double loss_mask = 0.0;  // unweighted

    explicit Gradients(std::size_t n = 0) : opacity(n, 0.0), color(n, Vec3::Zero()) {}
    void accumulate(const Gradients& o, double weight = 1.0);
};

/// Analytic gradients of the loss with respect to opacity and color. `opts.only_label` restricts the
/// render (and hence the gradients) to one instance; full_opacity is ignored. The result is
/// identical for any thread count.
Gradients loss_gradients(std::span<const Gaussian> scene, const Camera& camera, const LossTerms& terms,
                         const RenderOptions& opts = {});

/// l = l_rgb + w_mask * l_mask with the soft accumulated alpha as rendered mask.
Gradients backward_opacity_color(std::span<const Gaussian> scene, const Camera& camera, const Image& target_rgb,
                                 const Mask* target_mask, double w_mask);

namespace detail {

/// Splats sorted front-to-back (depth, then source index).
std::vector<Splat2D> prepare_splats(std::span<const Gaussian> scene, const Camera& camera,
                                    const RenderOptions& opts);

}  // namespace detail

}  // namespace splitsplat
