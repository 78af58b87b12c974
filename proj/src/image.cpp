#include "splitsplat/image.hpp"

#include <algorithm>

namespace splitsplat {

namespace {

// Running-window minimum/maximum along rows then columns (separable square element).
Mask morph(const Mask& m, int radius, bool erosion) {
    if (radius <= 0) return m;
    const int w = m.width, h = m.height;
    Mask tmp(w, h, 0), out(w, h, 0);
    // Count of set pixels in the window; erosion needs all 2r+1 set (out-of-image counts unset).
    const int full = 2 * radius + 1;
    for (int y = 0; y < h; ++y) {
        int cnt = 0;
        for (int x = -radius; x <= radius; ++x) cnt += (x >= 0 && x < w) ? m(x, y) : 0;
        for (int x = 0; x < w; ++x) {
            tmp(x, y) = erosion ? (cnt == full) : (cnt > 0);
            const int xo = x - radius, xi = x + radius + 1;
            if (xo >= 0) cnt -= m(xo, y);
            if (xi < w) cnt += m(xi, y);
        }
    }
    for (int x = 0; x < w; ++x) {
        int cnt = 0;
        for (int y = -radius; y <= radius; ++y) cnt += (y >= 0 && y < h) ? tmp(x, y) : 0;
        for (int y = 0; y < h; ++y) {
            out(x, y) = erosion ? (cnt == full) : (cnt > 0);
            const int yo = y - radius, yi = y + radius + 1;
            if (yo >= 0) cnt -= tmp(x, yo);
            if (yi < h) cnt += tmp(x, yi);
        }
    }
    return out;
}

void check_same(const Mask& a, const Mask& b) {
    if (!a.same_shape(b)) throw Error("mask dimension mismatch");
}

}  // namespace

Mask erode(const Mask& m, int radius) { return morph(m, radius, true); }
Mask dilate(const Mask& m, int radius) { return morph(m, radius, false); }

std::size_t count(const Mask& m) {
    return static_cast<std::size_t>(std::count_if(m.data.begin(), m.data.end(), [](auto v) { return v != 0; }));
}

std::size_t intersection_count(const Mask& a, const Mask& b) {
    check_same(a, b);
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) n += (a.data[i] && b.data[i]);
    return n;
}

Mask mask_union(const Mask& a, const Mask& b) {
    check_same(a, b);
    Mask out(a.width, a.height, 0);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = (a.data[i] || b.data[i]);
    return out;
}

double iou(const Mask& a, const Mask& b) {
    check_same(a, b);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const bool x = a.data[i] != 0, y = b.data[i] != 0;
        inter += (x && y);
        uni += (x || y);
    }
    if (uni == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

void stamp_disk(Mask& m, int x, int y, int radius) {
    const int r2 = radius * radius;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= r2 && m.contains(x + dx, y + dy)) m(x + dx, y + dy) = 1;
}

Image apply_mask(const Image& img, const Mask& m) {
    if (!m.same_shape(img.width, img.height)) throw Error("apply_mask: dimension mismatch");
    Image out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (!m(x, y)) std::fill_n(out.at(x, y), 3, 0.0);
    return out;
}

}  // namespace splitsplat
