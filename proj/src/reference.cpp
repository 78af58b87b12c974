#include "splitsplat/reference.hpp"

#include <algorithm>
#include <numeric>

#include "raster_kernel.hpp"

namespace splitsplat::reference {

RenderOutput render(std::span<const Gaussian> scene, const Camera& camera, const RenderOptions& opts) {
    RenderOutput out;
    out.rgb = Image(camera.width, camera.height, 0.0);
    out.alpha = Grid<double>(camera.width, camera.height, 0.0);
    if (opts.want_ids) out.ids = Grid<std::int32_t>(camera.width, camera.height, -1);
    if (opts.want_contributors) out.contributed.assign(scene.size(), 0);

    const auto splats = detail::prepare_splats(scene, camera, opts);
    std::vector<std::uint32_t> order(splats.size());
    std::iota(order.begin(), order.end(), 0u);
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            const auto px = kernel::composite(splats, order, x, y, [&](std::size_t k) {
                if (opts.want_contributors) out.contributed[splats[k].source] = 1;
            });
            std::copy_n(px.color.data(), 3, out.rgb.at(x, y));
            out.alpha(x, y) = px.alpha;
            if (opts.want_ids) out.ids(x, y) = px.id;
        }
    }
    return out;
}

Gradients loss_gradients(std::span<const Gaussian> scene, const Camera& camera, const LossTerms& terms,
                         const RenderOptions& opts) {
    RenderOptions ropts = opts;
    ropts.full_opacity = false;
    const auto splats = detail::prepare_splats(scene, camera, ropts);
    std::vector<std::uint32_t> order(splats.size());
    std::iota(order.begin(), order.end(), 0u);

    const double pixels = static_cast<double>(camera.width) * camera.height;
    const double rgb_scale = terms.target_rgb ? terms.rgb_weight / (3.0 * pixels) : 0.0;
    const double mask_scale = terms.target_mask ? terms.mask_weight / pixels : 0.0;

    Gradients grads(scene.size());
    std::vector<kernel::Contribution> scratch;
    double rgb = 0.0, mask = 0.0;
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            const auto l = kernel::backward_pixel(splats, order, x, y, terms, rgb_scale, mask_scale, scratch,
                                                  [&](std::size_t k, double da, const Vec3& dc) {
                                                      grads.opacity[splats[k].source] += da;
                                                      grads.color[splats[k].source] += dc;
                                                  });
            rgb += l.rgb;
            mask += l.mask;
        }
    }
    grads.loss_rgb = terms.target_rgb ? rgb / (3.0 * pixels) : 0.0;
    grads.loss_mask = terms.target_mask ? mask / pixels : 0.0;
    grads.loss = (terms.target_rgb ? terms.rgb_weight * grads.loss_rgb : 0.0) +
                 (terms.target_mask ? terms.mask_weight * grads.loss_mask : 0.0);
    return grads;
}

}  // namespace splitsplat::reference
