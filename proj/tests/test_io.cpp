#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include <unistd.h>

#include "common.hpp"
#include "splitsplat/io.hpp"
#include "splitsplat/ply.hpp"
#include "splitsplat/semantics.hpp"

using namespace splitsplat;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("splitsplat_io_" + std::to_string(getpid()) + "_" +
               ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    out << s;
}

Scene random_gaussians(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0, 1);
    Scene s;
    for (int i = 0; i < n; ++i) {
        Gaussian g;
        g.mean = Vec3(u(rng) * 4 - 2, u(rng) * 4 - 2, u(rng) * 4 - 2);
        g.scale = Vec3(0.001 + u(rng), 0.001 + u(rng), 0.001 + u(rng));
        g.rotation = testutil::random_rotation(rng);
        g.opacity = u(rng);
        g.color = Vec3(u(rng), u(rng), u(rng));
        g.label = static_cast<Label>(u(rng) * 9);
        s.push_back(g);
    }
    return s;
}

}  // namespace

// ---- Gaussians --------------------------------------------------------------------------------

TEST_F(IoTest, GaussianPlyLayout) {
    std::mt19937_64 rng(91);
    io::save_gaussians(dir / "g.ply", random_gaussians(rng, 3));
    const std::string bytes = slurp(dir / "g.ply");
    const std::string header = bytes.substr(0, bytes.find("end_header\n") + 11);
    const std::string expect =
        "ply\nformat binary_little_endian 1.0\nelement vertex 3\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property float nx\nproperty float ny\nproperty float nz\n"
        "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\n"
        "property float opacity\n"
        "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
        "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\n"
        "property int instance_label\nend_header\n";
    EXPECT_EQ(header, expect);
    EXPECT_EQ(bytes.size(), header.size() + 3 * (17 * 4 + 4));
}

TEST_F(IoTest, GaussianEncodingFollows3dgsConventions) {
    Gaussian g;
    g.mean = Vec3(1, 2, 3);
    g.scale = Vec3(0.5, 1.0, 2.0);
    g.opacity = 0.5;
    g.color = Vec3(0.5, 1.0, 0.0);
    g.label = 6;
    io::save_gaussians(dir / "g.ply", Scene{g});
    const auto t = ply::read(dir / "g.ply");
    EXPECT_EQ(t.column("opacity")[0], 0.0);  // logit(0.5)
    EXPECT_NEAR(t.column("scale_0")[0], std::log(0.5), 1e-7);
    EXPECT_EQ(t.column("scale_1")[0], 0.0);
    EXPECT_EQ(t.column("f_dc_0")[0], 0.0);  // (c - 0.5) / SH0
    EXPECT_NEAR(t.column("f_dc_1")[0], 0.5 / io::kSh0, 1e-6);
    EXPECT_EQ(t.column("rot_0")[0], 1.0);  // w first
    EXPECT_EQ(t.column("instance_label")[0], 6.0);
}

TEST_F(IoTest, GaussianRoundTrip) {
    std::mt19937_64 rng(92);
    const Scene s = random_gaussians(rng, 1000);
    io::save_gaussians(dir / "a.ply", s);
    const Scene a = io::load_gaussians(dir / "a.ply");
    ASSERT_EQ(a.size(), s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(a[i].label, s[i].label);
        EXPECT_LT((a[i].mean - s[i].mean).norm(), 1e-6);
        EXPECT_LT(std::abs(a[i].opacity - s[i].opacity), 1e-6);
        EXPECT_LT((a[i].scale - s[i].scale).cwiseQuotient(s[i].scale).norm(), 1e-6);
        EXPECT_LT((a[i].color - s[i].color).norm(), 1e-6);
        EXPECT_LT(a[i].rotation.angularDistance(s[i].rotation), 1e-3);
    }
    // Values already in storage precision survive further trips bit-exactly, fields and bytes.
    io::save_gaussians(dir / "b.ply", a);
    const Scene b = io::load_gaussians(dir / "b.ply");
    EXPECT_EQ(b, a);
    io::save_gaussians(dir / "c.ply", b);
    EXPECT_EQ(slurp(dir / "b.ply"), slurp(dir / "c.ply"));
}

TEST_F(IoTest, PlyWithoutLabelsLoadsAsBackground) {
    spit(dir / "plain.ply",
         "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
         "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\nproperty float opacity\n"
         "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
         "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\nend_header\n"
         "0 0 1 0 0 0 0 -2 -2 -2 2 0 0 0\n");
    const Scene s = io::load_gaussians(dir / "plain.ply");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].label, kBackground);
    EXPECT_EQ(s[0].opacity, 0.5);
    EXPECT_TRUE(s[0].rotation.coeffs().isApprox(Quat::Identity().coeffs()));  // normalized from (2,0,0,0)
}

TEST_F(IoTest, PlyErrors) {
    spit(dir / "trunc.ply", "ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty float x\nend_header\nabc");
    EXPECT_THROW(ply::read(dir / "trunc.ply"), Error);
    spit(dir / "list.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty list uchar int idx\nend_header\n1 2\n");
    EXPECT_THROW(ply::read(dir / "list.ply"), Error);
    spit(dir / "bad.ply", "plx\n");
    EXPECT_THROW(ply::read(dir / "bad.ply"), Error);
    spit(dir / "missing.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n0\n");
    EXPECT_THROW(io::load_gaussians(dir / "missing.ply"), Error);
    spit(dir / "nan.ply",
         "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
         "property float f_dc_0\nproperty float f_dc_1\nproperty float f_dc_2\nproperty float opacity\n"
         "property float scale_0\nproperty float scale_1\nproperty float scale_2\n"
         "property float rot_0\nproperty float rot_1\nproperty float rot_2\nproperty float rot_3\nend_header\n"
         "nan 0 1 0 0 0 0 -2 -2 -2 1 0 0 0\n");
    EXPECT_THROW(io::load_gaussians(dir / "nan.ply"), Error);
    EXPECT_THROW(io::load_gaussians(dir / "absent.ply"), Error);
}

// ---- other formats ----------------------------------------------------------------------------

TEST_F(IoTest, PointCloudRoundTrip) {
    std::mt19937_64 rng(93);
    std::normal_distribution<double> n(0, 3);
    PointCloud pc;
    for (int i = 0; i < 500; ++i) {
        pc.points.emplace_back(n(rng), n(rng), n(rng));
        pc.labels.push_back(i % 7);
    }
    io::save_point_cloud(dir / "p.ply", pc);
    const PointCloud back = io::load_point_cloud(dir / "p.ply");
    EXPECT_EQ(back.points, pc.points);
    EXPECT_EQ(back.labels, pc.labels);
    pc.labels.clear();
    io::save_point_cloud(dir / "q.ply", pc);
    EXPECT_FALSE(io::load_point_cloud(dir / "q.ply").has_labels());
}

TEST_F(IoTest, CamerasRoundTrip) {
    std::mt19937_64 rng(94);
    std::uniform_real_distribution<double> u(0.1, 500);
    std::vector<Camera> cams;
    for (int i = 0; i < 10; ++i) {
        Camera c;
        c.fx = u(rng);
        c.fy = u(rng);
        c.cx = u(rng);
        c.cy = u(rng);
        c.width = 64 + i;
        c.height = 48 + i;
        c.rotation = testutil::random_rotation(rng);
        c.translation = Vec3(u(rng), -u(rng), u(rng));
        cams.push_back(c);
    }
    io::save_cameras(dir / "c.json", cams);
    const auto back = io::load_cameras(dir / "c.json");
    ASSERT_EQ(back.size(), cams.size());
    for (std::size_t i = 0; i < cams.size(); ++i) {
        EXPECT_EQ(back[i].fx, cams[i].fx);
        EXPECT_EQ(back[i].cy, cams[i].cy);
        EXPECT_EQ(back[i].width, cams[i].width);
        EXPECT_EQ(back[i].rotation.coeffs(), cams[i].rotation.coeffs());
        EXPECT_EQ(back[i].translation, cams[i].translation);
    }
    spit(dir / "bad.json", R"([{"fx": 1, "fy": 1, "cx": 0, "cy": 0, "W": 4, "H": 4, "quaternion": [2, 0, 0, 0], "translation": [0, 0, 0]}])");
    EXPECT_THROW(io::load_cameras(dir / "bad.json"), Error);
}

TEST_F(IoTest, DepthRoundTripAndErrors) {
    DepthMap d(7, 5);
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = 0.25f * static_cast<float>(i) + 1e-3f;
    d(2, 3) = std::numeric_limits<float>::quiet_NaN();
    io::save_depth(dir / "d.depth", d);
    const std::string bytes = slurp(dir / "d.depth");
    EXPECT_EQ(bytes.size(), 16u + 35u * 4u);
    EXPECT_EQ(bytes.substr(0, 4), "SSDP");
    const DepthMap back = io::load_depth(dir / "d.depth");
    EXPECT_EQ(std::memcmp(back.data.data(), d.data.data(), d.data.size() * 4), 0);
    EXPECT_FALSE(back.valid(2, 3));

    std::string bad = bytes;
    bad[0] = 'X';
    spit(dir / "magic.depth", bad);
    EXPECT_THROW(io::load_depth(dir / "magic.depth"), Error);
    spit(dir / "trunc.depth", bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(io::load_depth(dir / "trunc.depth"), Error);
    spit(dir / "long.depth", bytes + "x");
    EXPECT_THROW(io::load_depth(dir / "long.depth"), Error);
}

TEST_F(IoTest, MaskSetRoundTrip) {
    std::mt19937_64 rng(95);
    MaskSet m;
    m.view_id = 12;
    m.stage = MaskStage::refined;
    m.width = 40;
    m.height = 30;
    // Disjoint masks round-trip exactly through the label image.
    const LabelImage img = [&] {
        LabelImage l(40, 30, 0);
        std::uniform_int_distribution<int> id(0, 4);
        for (auto& v : l.data) v = id(rng) * 300;
        return l;
    }();
    m = MaskSet::from_label_image(img, 12, MaskStage::refined);
    io::save_mask_set(dir, m);
    EXPECT_TRUE(fs::exists(dir / "view_0012.pgm"));
    EXPECT_TRUE(fs::exists(dir / "view_0012.json"));
    const MaskSet back = io::load_mask_set(dir, 12);
    EXPECT_EQ(back.masks, m.masks);
    EXPECT_EQ(back.stage, MaskStage::refined);
    EXPECT_EQ(back.view_id, 12);

    spit(dir / "view_0012.json", R"({"view_id": 12, "stage": "refined", "ids": [300, 7]})");
    EXPECT_THROW(io::load_mask_set(dir, 12), Error);
}

TEST_F(IoTest, LabelImageSixteenBit) {
    LabelImage l(3, 2, 0);
    l(2, 1) = 65535;
    l(0, 0) = 258;
    io::save_label_image(dir / "l.pgm", l);
    EXPECT_EQ(io::load_label_image(dir / "l.pgm"), l);
    l(1, 1) = 70000;
    EXPECT_THROW(io::save_label_image(dir / "x.pgm", l), Error);
}

TEST_F(IoTest, ImagesRoundTrip) {
    std::mt19937_64 rng(96);
    std::uniform_real_distribution<double> u(0, 1);
    Image img(9, 4);
    for (auto& v : img.data) v = static_cast<float>(u(rng));  // float-representable
    io::save_image(dir / "i.pfm", img);
    EXPECT_EQ(io::load_image(dir / "i.pfm"), img);
    Image q(5, 3);
    for (auto& v : q.data) v = std::round(u(rng) * 255.0) / 255.0;
    io::save_image(dir / "i.ppm", q);
    const Image back = io::load_image(dir / "i.ppm");
    for (std::size_t i = 0; i < q.data.size(); ++i) EXPECT_EQ(std::lround(back.data[i] * 255), std::lround(q.data[i] * 255));
    EXPECT_THROW(io::save_image(dir / "i.png", q), Error);
}

TEST_F(IoTest, DescriptorsRoundTripAndAggregate) {
    io::DescriptorEntries e = {{3, Eigen::Vector4d(1, 2, 3, 4)}, {3, Eigen::Vector4d(1, 0, 0, 0)}, {5, Eigen::Vector4d(0, 0.5, 0, 0)}};
    io::save_descriptor_entries(dir / "d.bin", e);
    const auto back = io::load_descriptor_entries(dir / "d.bin");
    ASSERT_EQ(back.size(), 3u);
    for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_EQ(back[i].first, e[i].first);
        EXPECT_EQ(back[i].second, e[i].second);
    }
    const DescriptorTable t = io::load_descriptors(dir / "d.bin");
    EXPECT_EQ(t.instances.size(), 2u);
    EXPECT_TRUE(t.instances.at(3).vector().isApprox(Eigen::Vector4d(2, 2, 3, 4).normalized()));
    EXPECT_TRUE(t.instances.at(5).vector().isApprox(Eigen::Vector4d(0, 1, 0, 0)));
    EXPECT_EQ(io::load_text_vector(dir / "d.bin"), e[0].second);

    io::save_descriptor_entries(dir / "empty.bin", {});
    EXPECT_TRUE(io::load_descriptors(dir / "empty.bin").instances.empty());

    std::string bytes = slurp(dir / "d.bin");
    spit(dir / "trunc.bin", bytes.substr(0, bytes.size() - 1));
    EXPECT_THROW(io::load_descriptor_entries(dir / "trunc.bin"), Error);
    bytes[3] = 'X';
    spit(dir / "magic.bin", bytes);
    EXPECT_THROW(io::load_descriptor_entries(dir / "magic.bin"), Error);

    spit(dir / "text.json", "[0.5, -1, 2]");
    EXPECT_EQ(io::load_text_vector(dir / "text.json"), Eigen::Vector3d(0.5, -1, 2));
}

TEST_F(IoTest, ManifestAndViews) {
    SynthSpec s;
    s.objects = 2;
    s.cameras = 5;
    s.gaussians_per_object = 80;
    s.width = s.height = 32;
    const auto sc = generate_scene(s);
    const auto views = render_gt_views(sc.scene, sc.cameras);
    io::Manifest m;
    io::save_views(dir, views, m);
    m.points = "points.ply";
    io::save_point_cloud(dir / "points.ply", scene_point_cloud(sc.scene));
    m.config = {{"tau_depth", 0.05}};
    io::save_manifest(dir / "manifest.json", m);
    const io::Manifest back = io::load_manifest(dir / "manifest.json");
    EXPECT_EQ(back.config.at("tau_depth").get<double>(), 0.05);

    const auto all = io::load_views(back, 1);
    ASSERT_EQ(all.size(), 5u);
    for (std::size_t k = 0; k < all.size(); ++k) {
        EXPECT_EQ(all[k].masks.masks, views[k].masks.masks);
        EXPECT_EQ(std::memcmp(all[k].depth.data.data(), views[k].depth.data.data(), views[k].depth.data.size() * 4), 0);
        for (std::size_t i = 0; i < all[k].image.data.size(); ++i)
            EXPECT_EQ(all[k].image.data[i], static_cast<double>(static_cast<float>(views[k].image.data[i])));
    }
    const auto sub = io::load_views(back, 2);
    ASSERT_EQ(sub.size(), 3u);
    EXPECT_EQ(sub[1].masks.view_id, 2);
    EXPECT_THROW(io::load_views(back, 0), Error);

    fs::remove(dir / "points.ply");
    EXPECT_THROW(io::load_manifest(dir / "manifest.json"), Error);
}
