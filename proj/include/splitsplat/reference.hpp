#pragma once

// Serial, untiled versions of the parallel kernels. Every pixel walks the full depth-sorted splat
// list; results must match the tiled kernels (bit-exact for forward passes).

#include <span>

#include "splitsplat/rasterizer.hpp"

namespace splitsplat::reference {

RenderOutput render(std::span<const Gaussian> scene, const Camera& camera, const RenderOptions& opts = {});

Gradients loss_gradients(std::span<const Gaussian> scene, const Camera& camera, const LossTerms& terms,
                         const RenderOptions& opts = {});

}  // namespace splitsplat::reference
