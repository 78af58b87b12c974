#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "common.hpp"
#include "splitsplat/parallel.hpp"
#include "splitsplat/projection.hpp"
#include "splitsplat/rasterizer.hpp"
#include "splitsplat/reference.hpp"

using namespace splitsplat;
using testutil::front_camera;

// ---- projection -------------------------------------------------------------------------------

TEST(Projection, PinholeArithmetic) {
    Camera c = front_camera(1, 1, 1.0);
    c.cx = c.cy = 0.0;
    auto p = project_point(c, Vec3(0, 0, 1));
    ASSERT_TRUE(p);
    EXPECT_EQ(p->w, 0.0);
    EXPECT_EQ(p->h, 0.0);
    EXPECT_EQ(p->depth, 1.0);

    Camera d = front_camera(100, 100, 100.0);
    p = project_point(d, Vec3(0.1, 0, 1));
    ASSERT_TRUE(p);
    EXPECT_DOUBLE_EQ(p->w, 60.0);
    EXPECT_DOUBLE_EQ(p->h, 50.0);
    EXPECT_FALSE(project_point(d, Vec3(0, 0, -1)));
    EXPECT_THROW(project_point(d, Vec3(NAN, 0, 1)), Error);
}

TEST(Projection, InBoundsMatchesScalarRecheck) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3, 3);
    Camera c = front_camera(40, 30, 35.0);
    c.rotation = testutil::random_rotation(rng);
    c.translation = Vec3(0.1, -0.2, 0.3);
    std::vector<Vec3> pts;
    for (int i = 0; i < 1000; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        // Independent re-projection through the rotation matrix.
        const Vec3 q = c.rotation.toRotationMatrix() * pts[i] + c.translation;
        if (q.z() <= 0) continue;
        const double w = c.fx * q.x() / q.z() + c.cx, h = c.fy * q.y() / q.z() + c.cy;
        if (w >= 0 && w < c.width && h >= 0 && h < c.height) expect.push_back(i);
    }
    std::vector<std::size_t> got;
    for (const auto& p : filter_in_bounds(pts, c)) got.push_back(p.index);
    EXPECT_EQ(got, expect);
    EXPECT_GT(expect.size(), 50u);
}

TEST(Projection, OutOfImageDropped) {
    const Camera c = front_camera(10, 10, 10.0);
    // w = W + 3
    EXPECT_TRUE(filter_in_bounds(std::vector<Vec3>{Vec3(0.8, -0.3, 1.0)}, c).empty());
    EXPECT_EQ(filter_in_bounds(std::vector<Vec3>{Vec3(0, 0, 1.0)}, c).size(), 1u);
}

TEST(Projection, SurfaceConsistencyThreshold) {
    const Camera c = front_camera(4, 4, 4.0);
    DepthMap d(4, 4, 1.0f);
    std::vector<ProjectedPoint> pts = {{0, 2.5, 2.5, 1.01}, {1, 2.5, 2.5, 1.05}};
    const auto kept = filter_surface_consistent(pts, d, c, 0.02);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0].index, 0u);
    d(2, 2) = std::numeric_limits<float>::quiet_NaN();
    EXPECT_TRUE(filter_surface_consistent(pts, d, c, 0.02).empty());
    EXPECT_THROW(filter_surface_consistent(pts, DepthMap(3, 4, 1.0f), c, 0.02), Error);
    EXPECT_THROW(filter_surface_consistent(pts, d, c, 0.0), Error);
}

TEST(Projection, OccludedPlaneDropped) {
    const Camera c = front_camera(20, 20, 20.0);
    DepthMap d(20, 20, 1.0f);  // front plane z = 1 fills the view
    std::vector<Vec3> pts;
    for (int i = 0; i < 15; ++i)
        for (int j = 0; j < 15; ++j) {
            pts.emplace_back(-0.4 + 0.05 * i, -0.4 + 0.05 * j, 1.0);
            pts.emplace_back(-0.8 + 0.1 * i, -0.8 + 0.1 * j, 2.0);
        }
    for (const auto& p : filter_surface_consistent(filter_in_bounds(pts, c), d, c, 0.02))
        EXPECT_NEAR(p.depth, 1.0, 1e-12);
}

TEST(Projection, MonotoneInTau) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    const Camera c = front_camera(16, 16, 16.0);
    DepthMap d(16, 16);
    for (auto& v : d.data) v = static_cast<float>(u(rng));
    std::vector<Vec3> pts;
    for (int i = 0; i < 400; ++i) {
        const double z = u(rng);
        pts.emplace_back((u(rng) - 1.0) * z, (u(rng) - 1.0) * z, z);
    }
    const auto in = filter_in_bounds(pts, c);
    std::vector<std::size_t> prev;
    for (double tau : {0.001, 0.01, 0.05, 0.2, 1.0}) {
        std::vector<std::size_t> cur;
        for (const auto& p : filter_surface_consistent(in, d, c, tau)) cur.push_back(p.index);
        EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
        prev = cur;
    }
}

// ---- projection of Gaussians -------------------------------------------------------------------

TEST(Splat, IsotropicOnAxis) {
    const double f = 50.0, z = 3.0, s = 0.1;
    const Camera c = front_camera(64, 64, f);
    Gaussian g;
    g.mean = Vec3(0, 0, z);
    g.scale = Vec3::Constant(s);
    const auto sp = project_gaussian(g, c);
    ASSERT_TRUE(sp);
    const double v = std::pow(f * s / z, 2) + kLowPassFilter;
    EXPECT_NEAR(sp->cov(0, 0), v, 1e-9);
    EXPECT_NEAR(sp->cov(1, 1), v, 1e-9);
    EXPECT_NEAR(sp->cov(0, 1), 0.0, 1e-12);

    // Rotation about the viewing axis leaves an isotropic footprint unchanged.
    g.rotation = Quat(Eigen::AngleAxisd(0.7, Vec3::UnitZ()));
    const auto sr = project_gaussian(g, c);
    EXPECT_TRUE(sr->cov.isApprox(sp->cov, 1e-9));

    g.mean.z() = -1.0;
    EXPECT_FALSE(project_gaussian(g, c));
}

// ---- render -----------------------------------------------------------------------------------

TEST(Render, EmptyScene) {
    const auto out = render(Scene{}, front_camera(8, 8, 8.0));
    for (double v : out.rgb.data) EXPECT_EQ(v, 0.0);
    for (double v : out.alpha.data) EXPECT_EQ(v, 0.0);
}

TEST(Render, SingleGaussianMatchesAnalyticAlpha) {
    const Camera c = front_camera(16, 16, 20.0);
    Gaussian g;
    g.mean = Vec3(0.0, 0.0, 2.0);  // projects to (8, 8)
    g.scale = Vec3::Constant(0.2);
    g.opacity = 1.0;
    const auto out = render(Scene{g}, c);
    const double var = std::pow(20.0 * 0.2 / 2.0, 2) + kLowPassFilter;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            const double dx = x + 0.5 - 8.0, dy = y + 0.5 - 8.0;
            const double m2 = (dx * dx + dy * dy) / var;
            double a = std::exp(-0.5 * m2);
            if (m2 > kMaxMahalanobis2 || a < kMinContribution) a = 0.0;
            EXPECT_NEAR(out.alpha(x, y), a, 1e-12) << x << "," << y;
        }
}

TEST(Render, OcclusionOwnsArgmax) {
    const Camera c = front_camera(16, 16, 20.0);
    Gaussian front, back;
    front.mean = Vec3(0, 0, 2);
    front.scale = Vec3::Constant(0.5);
    front.opacity = 1.0;
    back = front;
    back.mean.z() = 3;
    back.scale = Vec3::Constant(1.0);
    const auto ids = argmax_ids(Scene{back, front}, c);
    EXPECT_EQ(ids(8, 8), 1);
}

// Independent per-pixel compositing, back to front ("under" order reversed), from the splat list.
static void back_to_front(const std::vector<Splat2D>& splats, int x, int y, Vec3& rgb, double& alpha) {
    rgb.setZero();
    alpha = 0.0;
    for (auto it = splats.rbegin(); it != splats.rend(); ++it) {
        if (x < it->x0 || x > it->x1 || y < it->y0 || y > it->y1) continue;
        const double m2 = it->mahalanobis2(x, y);
        if (m2 > kMaxMahalanobis2) continue;
        const double a = it->opacity * std::exp(-0.5 * m2);
        if (a < kMinContribution) continue;
        rgb = a * it->color + (1.0 - a) * rgb;
        alpha = a + (1.0 - a) * alpha;
    }
}

TEST(Render, FrontToBackEqualsBackToFront) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const Scene s = testutil::random_scene(rng, 10, 12, 12, 14.0, 0.2, 0.6);
        const Camera c = front_camera(12, 12, 14.0);
        const auto out = render(s, c);
        const auto splats = detail::prepare_splats(s, c, {});
        for (int y = 0; y < 12; ++y)
            for (int x = 0; x < 12; ++x) {
                Vec3 rgb;
                double a;
                back_to_front(splats, x, y, rgb, a);
                for (int k = 0; k < 3; ++k) EXPECT_NEAR(out.rgb.at(x, y)[k], rgb[k], 1e-9);
                EXPECT_NEAR(out.alpha(x, y), a, 1e-9);
            }
    }
}

TEST(Render, TiledMatchesReferenceBitExact) {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 8; ++t) {
        const int w = 37 + 5 * t, h = 29 + 3 * t;
        Scene s = testutil::random_scene(rng, 60, w, h, 40.0);
        const Camera c = front_camera(w, h, 40.0);
        RenderOptions o;
        o.want_ids = true;
        o.want_contributors = true;
        if (t % 2) o.only_label = 2;
        if (t % 3 == 0) o.full_opacity = true;
        const auto a = render(s, c, o), b = reference::render(s, c, o);
        EXPECT_EQ(a.rgb.data, b.rgb.data);
        EXPECT_EQ(a.alpha.data, b.alpha.data);
        EXPECT_EQ(a.ids.data, b.ids.data);
        EXPECT_EQ(a.contributed, b.contributed);
    }
}

TEST(Render, AlphaMonotoneInOpacity) {
    std::mt19937_64 rng(12);
    Scene s = testutil::random_scene(rng, 8, 16, 16, 18.0, 0.2, 0.5);
    const Camera c = front_camera(16, 16, 18.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        Scene lo = s, hi = s;
        lo[i].opacity = 0.3;
        hi[i].opacity = 0.9;
        const auto a = render(lo, c), b = render(hi, c);
        for (std::size_t p = 0; p < a.alpha.data.size(); ++p) EXPECT_LE(a.alpha.data[p], b.alpha.data[p] + 1e-15);
    }
}

TEST(Render, FullOpacityMaskIgnoresOtherLabels) {
    std::mt19937_64 rng(13);
    Scene s = testutil::random_scene(rng, 12, 20, 20, 22.0, 0.1, 0.4);
    const Camera c = front_camera(20, 20, 22.0);
    const Mask m = full_opacity_mask(s, c, 1);
    Scene more = s;
    for (Gaussian g : testutil::random_scene(rng, 12, 20, 20, 22.0)) {
        g.label = 7;
        more.push_back(g);
    }
    EXPECT_EQ(full_opacity_mask(more, c, 1), m);
}

// ---- gradients --------------------------------------------------------------------------------

static double loss_of(const Scene& s, const Camera& c, const Image& rgb, const Mask* m, double w) {
    return backward_opacity_color(s, c, rgb, m, w).loss;
}

struct FdResult {
    double worst = 0.0;
};

static FdResult check_fd(const Scene& s, const Camera& c, const Image& target, const Mask* m, double w) {
    const Gradients g = backward_opacity_color(s, c, target, m, w);
    const double h = 1e-4;
    FdResult r;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-7}); };
    for (std::size_t i = 0; i < s.size(); ++i) {
        Scene p = s, q = s;
        p[i].opacity += h;
        q[i].opacity -= h;
        const double fd = (loss_of(p, c, target, m, w) - loss_of(q, c, target, m, w)) / (2 * h);
        r.worst = std::max(r.worst, rel(g.opacity[i], fd));
        for (int k = 0; k < 3; ++k) {
            Scene a = s, b = s;
            a[i].color[k] += h;
            b[i].color[k] -= h;
            const double fdc = (loss_of(a, c, target, m, w) - loss_of(b, c, target, m, w)) / (2 * h);
            r.worst = std::max(r.worst, rel(g.color[i][k], fdc));
        }
    }
    return r;
}

TEST(Gradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 6; ++t) {
        Scene s = testutil::random_scene(rng, 5, 16, 16, 18.0, 0.2, 0.5);
        for (auto& g : s) g.opacity = std::min(g.opacity, 0.9);
        const Camera c = front_camera(16, 16, 18.0);
        Image target(16, 16);
        for (auto& v : target.data) v = u(rng);
        const Mask m = testutil::random_blob_mask(rng, 16, 16, 2);
        EXPECT_LT(check_fd(s, c, target, &m, 0.0).worst, 1e-3);
        EXPECT_LT(check_fd(s, c, target, &m, 0.25).worst, 1e-3);
    }
}

TEST(Gradients, ZeroAtPerfectFit) {
    std::mt19937_64 rng(22);
    Scene s = testutil::random_scene(rng, 5, 16, 16, 18.0);
    const Camera c = front_camera(16, 16, 18.0);
    const auto out = render(s, c);
    const Gradients g = backward_opacity_color(s, c, out.rgb, nullptr, 0.0);
    for (double v : g.opacity) EXPECT_EQ(v, 0.0);
    for (const auto& v : g.color) EXPECT_TRUE(v.isZero(0.0));
    EXPECT_EQ(g.loss, 0.0);
}

TEST(Gradients, MaskTargetIrrelevantWithoutWeight) {
    std::mt19937_64 rng(23);
    Scene s = testutil::random_scene(rng, 5, 16, 16, 18.0);
    const Camera c = front_camera(16, 16, 18.0);
    Image target(16, 16, 0.3);
    const Mask m1 = testutil::random_mask(rng, 16, 16, 0.5), m2 = testutil::random_mask(rng, 16, 16, 0.5);
    const auto a = backward_opacity_color(s, c, target, &m1, 0.0), b = backward_opacity_color(s, c, target, &m2, 0.0);
    EXPECT_EQ(a.opacity, b.opacity);
}

TEST(Gradients, TiledMatchesReferenceAndThreadCount) {
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(0, 1);
    Scene s = testutil::random_scene(rng, 80, 48, 40, 45.0);
    const Camera c = front_camera(48, 40, 45.0);
    Image target(48, 40);
    for (auto& v : target.data) v = u(rng);
    const Mask m = testutil::random_blob_mask(rng, 48, 40, 4);
    LossTerms t;
    t.target_rgb = &target;
    t.target_mask = &m;
    t.mask_weight = 0.25;
    Gradients one;
    {
        ScopedThreads st(1);
        one = loss_gradients(s, c, t);
    }
    Gradients many;
    {
        ScopedThreads st(8);
        many = loss_gradients(s, c, t);
    }
    EXPECT_EQ(one.opacity, many.opacity);
    EXPECT_EQ(one.loss, many.loss);
    const Gradients ref = reference::loss_gradients(s, c, t);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_NEAR(one.opacity[i], ref.opacity[i], 1e-12);
        EXPECT_TRUE(one.color[i].isApprox(ref.color[i], 1e-9) || (one.color[i] - ref.color[i]).norm() < 1e-12);
    }
    EXPECT_NEAR(one.loss, ref.loss, 1e-12);
}
