#include "splitsplat/rasterizer.hpp"

#include <algorithm>
#include <cmath>

#include "raster_kernel.hpp"

namespace splitsplat {

std::optional<Splat2D> project_gaussian(const Gaussian& g, const Camera& camera, std::size_t source) {
    const Mat3 w = camera.rotation_matrix();
    const Vec3 c = w * g.mean + camera.translation;
    const double z = c.z();
    if (!(z > 0.0)) return std::nullopt;

    Eigen::Matrix<double, 2, 3> j;
    j << camera.fx / z, 0.0, -camera.fx * c.x() / (z * z),  //
        0.0, camera.fy / z, -camera.fy * c.y() / (z * z);
    const Mat3 cov_cam = w * g.covariance() * w.transpose();
    Mat2 cov = j * cov_cam * j.transpose();
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += kLowPassFilter;

    Splat2D s;
    s.source = source;
    s.mean = {camera.fx * c.x() / z + camera.cx, camera.fy * c.y() / z + camera.cy};
    s.cov = cov;
    s.conic = cov.inverse();
    s.depth = z;
    s.opacity = g.opacity;
    s.color = g.color;

    const double rx = 3.0 * std::sqrt(cov(0, 0));
    const double ry = 3.0 * std::sqrt(cov(1, 1));
    const double fx0 = std::ceil(s.mean.x() - rx - 0.5), fx1 = std::floor(s.mean.x() + rx - 0.5);
    const double fy0 = std::ceil(s.mean.y() - ry - 0.5), fy1 = std::floor(s.mean.y() + ry - 0.5);
    if (!(fx1 >= 0.0 && fy1 >= 0.0 && fx0 <= camera.width - 1 && fy0 <= camera.height - 1)) return std::nullopt;
    s.x0 = static_cast<int>(std::max(fx0, 0.0));
    s.x1 = static_cast<int>(std::min(fx1, camera.width - 1.0));
    s.y0 = static_cast<int>(std::max(fy0, 0.0));
    s.y1 = static_cast<int>(std::min(fy1, camera.height - 1.0));
    if (s.x0 > s.x1 || s.y0 > s.y1) return std::nullopt;
    return s;
}

namespace detail {

std::vector<Splat2D> prepare_splats(std::span<const Gaussian> scene, const Camera& camera,
                                    const RenderOptions& opts) {
    const auto n = static_cast<std::ptrdiff_t>(scene.size());
    std::vector<std::optional<Splat2D>> projected(scene.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Gaussian& g = scene[i];
        if (opts.only_label && g.label != *opts.only_label) continue;
        projected[i] = project_gaussian(g, camera, static_cast<std::size_t>(i));
        if (projected[i] && opts.full_opacity) projected[i]->opacity = 1.0;
    }
    std::vector<Splat2D> splats;
    for (auto& p : projected)
        if (p) splats.push_back(*p);
    std::stable_sort(splats.begin(), splats.end(),
                     [](const Splat2D& a, const Splat2D& b) { return a.depth < b.depth; });
    return splats;
}

}  // namespace detail

namespace {

constexpr int kTile = 16;

// Splat lists per tile, each in front-to-back order.
struct TileBins {
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::vector<std::uint32_t>> lists;

    TileBins(const std::vector<Splat2D>& splats, int width, int height)
        : tiles_x((width + kTile - 1) / kTile), tiles_y((height + kTile - 1) / kTile),
          lists(static_cast<std::size_t>(tiles_x) * tiles_y) {
        for (std::uint32_t i = 0; i < splats.size(); ++i) {
            const Splat2D& s = splats[i];
            for (int ty = s.y0 / kTile; ty <= s.y1 / kTile; ++ty)
                for (int tx = s.x0 / kTile; tx <= s.x1 / kTile; ++tx)
                    lists[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(i);
        }
    }
    std::size_t count() const { return lists.size(); }
};

}  // namespace

Mask RenderOutput::alpha_mask(double threshold) const {
    Mask m(alpha.width, alpha.height, 0);
    for (std::size_t i = 0; i < alpha.data.size(); ++i) m.data[i] = alpha.data[i] >= threshold;
    return m;
}

RenderOutput render(std::span<const Gaussian> scene, const Camera& camera, const RenderOptions& opts) {
    const int width = camera.width, height = camera.height;
    RenderOutput out;
    out.rgb = Image(width, height, 0.0);
    out.alpha = Grid<double>(width, height, 0.0);
    if (opts.want_ids) out.ids = Grid<std::int32_t>(width, height, -1);
    if (opts.want_contributors) out.contributed.assign(scene.size(), 0);

    const std::vector<Splat2D> splats = detail::prepare_splats(scene, camera, opts);
    if (splats.empty()) return out;
    const TileBins bins(splats, width, height);
    const auto tiles = static_cast<std::ptrdiff_t>(bins.count());

    // Per-tile contributor flags, aligned with the tile's list.
    std::vector<std::vector<std::uint8_t>> touched(opts.want_contributors ? bins.count() : 0);

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < tiles; ++t) {
        const auto& list = bins.lists[t];
        if (list.empty()) continue;
        std::vector<std::uint8_t>* flags = nullptr;
        if (opts.want_contributors) {
            touched[t].assign(list.size(), 0);
            flags = &touched[t];
        }
        const int tx = static_cast<int>(t % bins.tiles_x), ty = static_cast<int>(t / bins.tiles_x);
        for (int y = ty * kTile; y < std::min(height, (ty + 1) * kTile); ++y) {
            for (int x = tx * kTile; x < std::min(width, (tx + 1) * kTile); ++x) {
                const auto px = kernel::composite(splats, list, x, y, [&](std::size_t k) {
                    if (flags) (*flags)[k] = 1;
                });
                std::copy_n(px.color.data(), 3, out.rgb.at(x, y));
                out.alpha(x, y) = px.alpha;
                if (opts.want_ids) out.ids(x, y) = px.id;
            }
        }
    }
    if (opts.want_contributors) {
        for (std::size_t t = 0; t < touched.size(); ++t)
            for (std::size_t k = 0; k < touched[t].size(); ++k)
                if (touched[t][k]) out.contributed[splats[bins.lists[t][k]].source] = 1;
    }
    return out;
}

Mask full_opacity_mask(std::span<const Gaussian> scene, const Camera& camera, Label label) {
    RenderOptions opts;
    opts.only_label = label;
    opts.full_opacity = true;
    return render(scene, camera, opts).alpha_mask();
}

Grid<std::int32_t> argmax_ids(std::span<const Gaussian> scene, const Camera& camera) {
    RenderOptions opts;
    opts.want_ids = true;
    return render(scene, camera, opts).ids;
}

void Gradients::accumulate(const Gradients& o, double weight) {
    for (std::size_t i = 0; i < opacity.size(); ++i) {
        opacity[i] += weight * o.opacity[i];
        color[i] += weight * o.color[i];
    }
    loss += weight * o.loss;
}

Gradients loss_gradients(std::span<const Gaussian> scene, const Camera& camera, const LossTerms& terms,
                         const RenderOptions& opts) {
    const int width = camera.width, height = camera.height;
    if (terms.target_rgb && !(terms.target_rgb->width == width && terms.target_rgb->height == height))
        throw Error("loss_gradients: target image does not match camera");
    if (terms.target_mask && !terms.target_mask->same_shape(width, height))
        throw Error("loss_gradients: target mask does not match camera");

    RenderOptions ropts = opts;
    ropts.full_opacity = false;
    Gradients grads(scene.size());
    const std::vector<Splat2D> splats = detail::prepare_splats(scene, camera, ropts);
    const double pixels = static_cast<double>(width) * height;
    const double rgb_scale = terms.target_rgb ? terms.rgb_weight / (3.0 * pixels) : 0.0;
    const double mask_scale = terms.target_mask ? terms.mask_weight / pixels : 0.0;

    std::vector<double> tile_rgb, tile_mask;
    std::vector<std::vector<double>> tile_d_opacity;
    std::vector<std::vector<Vec3>> tile_d_color;

    const TileBins bins(splats, width, height);
    const auto tiles = static_cast<std::ptrdiff_t>(bins.count());
    tile_rgb.assign(bins.count(), 0.0);
    tile_mask.assign(bins.count(), 0.0);
    tile_d_opacity.resize(bins.count());
    tile_d_color.resize(bins.count());

#pragma omp parallel
    {
        std::vector<kernel::Contribution> scratch;
#pragma omp for schedule(dynamic, 1)
        for (std::ptrdiff_t t = 0; t < tiles; ++t) {
            const auto& list = bins.lists[t];
            auto& d_op = tile_d_opacity[t];
            auto& d_col = tile_d_color[t];
            d_op.assign(list.size(), 0.0);
            d_col.assign(list.size(), Vec3::Zero());
            const int tx = static_cast<int>(t % bins.tiles_x), ty = static_cast<int>(t / bins.tiles_x);
            double rgb = 0.0, mask = 0.0;
            for (int y = ty * kTile; y < std::min(height, (ty + 1) * kTile); ++y) {
                for (int x = tx * kTile; x < std::min(width, (tx + 1) * kTile); ++x) {
                    const auto l = kernel::backward_pixel(splats, list, x, y, terms, rgb_scale, mask_scale, scratch,
                                                          [&](std::size_t k, double da, const Vec3& dc) {
                                                              d_op[k] += da;
                                                              d_col[k] += dc;
                                                          });
                    rgb += l.rgb;
                    mask += l.mask;
                }
            }
            tile_rgb[t] = rgb;
            tile_mask[t] = mask;
        }
    }

    // Ordered reduction: tile order is fixed, so the sums do not depend on the thread count.
    double rgb = 0.0, mask = 0.0;
    for (std::size_t t = 0; t < bins.count(); ++t) {
        rgb += tile_rgb[t];
        mask += tile_mask[t];
        const auto& list = bins.lists[t];
        for (std::size_t k = 0; k < list.size(); ++k) {
            const std::size_t src = splats[list[k]].source;
            grads.opacity[src] += tile_d_opacity[t][k];
            grads.color[src] += tile_d_color[t][k];
        }
    }
    grads.loss_rgb = terms.target_rgb ? rgb / (3.0 * pixels) : 0.0;
    grads.loss_mask = terms.target_mask ? mask / pixels : 0.0;
    grads.loss = (terms.target_rgb ? terms.rgb_weight * grads.loss_rgb : 0.0) +
                 (terms.target_mask ? terms.mask_weight * grads.loss_mask : 0.0);
    return grads;
}

Gradients backward_opacity_color(std::span<const Gaussian> scene, const Camera& camera, const Image& target_rgb,
                                 const Mask* target_mask, double w_mask) {
    LossTerms terms;
    terms.target_rgb = &target_rgb;
    terms.rgb_weight = 1.0;
    if (w_mask != 0.0 && target_mask) {
        terms.target_mask = target_mask;
        terms.mask_weight = w_mask;
    }
    return loss_gradients(scene, camera, terms);
}

}  // namespace splitsplat
