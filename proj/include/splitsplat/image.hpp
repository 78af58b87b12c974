#pragma once

#include "splitsplat/scene.hpp"

namespace splitsplat {

/// Morphological erosion with a (2r+1)^2 square element. Pixels outside the image count as unset.
Mask erode(const Mask& m, int radius);
Mask dilate(const Mask& m, int radius);

std::size_t count(const Mask& m);
std::size_t intersection_count(const Mask& a, const Mask& b);
Mask mask_union(const Mask& a, const Mask& b);

/// |a & b| / |a | b|; two empty masks give 1. Throws Error on shape mismatch.
double iou(const Mask& a, const Mask& b);

/// Sets every pixel whose center lies within `radius` of (x, y) (integer pixel coordinates).
void stamp_disk(Mask& m, int x, int y, int radius);

/// Pixels of `img` outside `m` set to zero.
Image apply_mask(const Image& img, const Mask& m);

}  // namespace splitsplat
