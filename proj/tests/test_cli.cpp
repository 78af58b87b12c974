#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "splitsplat/io.hpp"
#include "splitsplat/merging.hpp"

using namespace splitsplat;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(SPLITSPLAT_CLI) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return {-1, {}};
    std::string out;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) out.append(buf, n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::map<std::string, double> read_kv(const fs::path& p) {
    std::map<std::string, double> kv;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = std::stod(line.substr(eq + 1));
    }
    return kv;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("splitsplat_cli_" + std::to_string(getpid()) + "_" +
               ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string at(const std::string& name) const { return (dir / name).string(); }

    void synth(const std::string& extra = "") {
        const auto r = run("synth --out " + at("scene") +
                           " --objects 3 --gaussians 200 --cameras 16 --width 64 --height 64 --seed 4 " + extra);
        ASSERT_EQ(r.code, 0) << r.out;
    }
    fs::path dir;
};

}  // namespace

TEST_F(CliTest, SynthSplitEvalOnCleanMasks) {
    synth("--split-prob 0 --drop-prob 0");
    ASSERT_TRUE(fs::exists(dir / "scene/manifest.json"));
    ASSERT_TRUE(fs::exists(dir / "scene/gt_points.ply"));
    const auto s = run("split --manifest " + at("scene/manifest.json") + " --out " + at("split"));
    ASSERT_EQ(s.code, 0);
    EXPECT_NE(s.out.find("instances"), std::string::npos);
    const auto e = run("eval --points " + at("split/labeled.ply") + " --gt " + at("scene/gt_points.ply") + " --kv " +
                       at("report.txt"));
    ASSERT_EQ(e.code, 0);
    EXPECT_NE(e.out.find("mIoU"), std::string::npos);
    const auto kv = read_kv(dir / "report.txt");
    EXPECT_GE(kv.at("miou"), 99.0);
    EXPECT_EQ(kv.at("instances"), 3.0);
}

TEST_F(CliTest, SplatWithFileSegmenter) {
    synth("--split-prob 0 --drop-prob 0");
    ASSERT_EQ(run("split --manifest " + at("scene/manifest.json") + " --out " + at("split")).code, 0);
    const auto r = run("splat --manifest " + at("scene/manifest.json") + " --split " + at("split") + " --scene " +
                       at("scene/scene.ply") + " --segmenter-dir " + at("scene/gt_masks") + " --out " + at("splat") +
                       " --refine-steps 5");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("merge rounds"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "splat/refined_masks/view_0000.pgm"));
    // Merging keeps every propagated instance; points never labeled stay background.
    const Scene merged = io::load_gaussians(dir / "splat/scene.ply");
    const PointCloud labeled = io::load_point_cloud(dir / "split/labeled.ply");
    std::set<Label> expect(labeled.labels.begin(), labeled.labels.end());
    expect.insert(kBackground);
    const auto got = scene_labels(merged);
    EXPECT_EQ(std::set<Label>(got.begin(), got.end()), expect);
}

TEST_F(CliTest, ThreadCountDoesNotChangeOutputs) {
    synth("--split-prob 0.3 --drop-prob 0.1");
    ASSERT_EQ(run("--threads 1 split --manifest " + at("scene/manifest.json") + " --out " + at("s1")).code, 0);
    ASSERT_EQ(run("--threads 8 split --manifest " + at("scene/manifest.json") + " --out " + at("s8")).code, 0);
    EXPECT_EQ(slurp(dir / "s1/labeled.ply"), slurp(dir / "s8/labeled.ply"));
    EXPECT_EQ(slurp(dir / "s1/dense_labels.ply"), slurp(dir / "s8/dense_labels.ply"));
    EXPECT_EQ(slurp(dir / "s1/masks/view_0003.pgm"), slurp(dir / "s8/masks/view_0003.pgm"));
}

TEST_F(CliTest, QueryEmptyDescriptors) {
    io::save_descriptor_entries(dir / "empty.bin", {});
    std::ofstream(dir / "text.json") << "[1, 0, 0]";
    const auto r = run("query --descriptors " + at("empty.bin") + " --text " + at("text.json"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "");
}

TEST_F(CliTest, QueryRanksByDistance) {
    io::save_descriptor_entries(dir / "d.bin", {{1, Eigen::Vector3d(0, 1, 0)}, {2, Eigen::Vector3d(1, 0.01, 0)}});
    std::ofstream(dir / "text.json") << "[1, 0, 0]";
    const auto r = run("query --tau-corr 0.02 --descriptors " + at("d.bin") + " --text " + at("text.json"));
    ASSERT_EQ(r.code, 0);
    std::istringstream is(r.out);
    int label = 0;
    double d = 0;
    ASSERT_TRUE(is >> label >> d);
    EXPECT_EQ(label, 2);
    EXPECT_FALSE(is >> label);  // label 1 is far outside the gap
}

TEST_F(CliTest, EditOps) {
    synth();
    const std::string in = at("scene/scene.ply");
    const Scene s = io::load_gaussians(in);
    ASSERT_EQ(run("edit remove 2 --in " + in + " --out " + at("r.ply")).code, 0);
    EXPECT_TRUE(instance_subset(io::load_gaussians(dir / "r.ply"), 2).empty());

    const auto d = run("edit duplicate 1 --offset 0 0 1 --in " + in + " --out " + at("d.ply"));
    ASSERT_EQ(d.code, 0);
    EXPECT_NE(d.out.find("duplicate label 4"), std::string::npos);
    EXPECT_EQ(instance_subset(io::load_gaussians(dir / "d.ply"), 4).size(), instance_subset(s, 1).size());

    ASSERT_EQ(run("edit recolor 3 --rgb 1 0 0 --in " + in + " --out " + at("c.ply")).code, 0);
    for (const auto& g : instance_subset(io::load_gaussians(dir / "c.ply"), 3))
        EXPECT_LT((g.color - Vec3(1, 0, 0)).norm(), 1e-6);

    ASSERT_EQ(run("edit transform 1 --translation 0 0 2 --in " + in + " --out " + at("t.ply")).code, 0);
    const auto before = instance_bbox(instance_subset(s, 1));
    const auto after = instance_bbox(instance_subset(io::load_gaussians(dir / "t.ply"), 1));
    EXPECT_NEAR(after.min.z() - before.min.z(), 2.0, 1e-5);
}

TEST_F(CliTest, ErrorsExitNonzero) {
    synth();
    EXPECT_NE(run("edit remove 99 --in " + at("scene/scene.ply") + " --out " + at("x.ply")).code, 0);
    EXPECT_NE(run("edit recolor 1 --in " + at("scene/scene.ply") + " --out " + at("x.ply")).code, 0);
    EXPECT_NE(run("split --manifest " + at("nope.json") + " --out " + at("x")).code, 0);
    EXPECT_NE(run("bogus").code, 0);
    EXPECT_NE(run("eval --gt " + at("scene/gt_points.ply")).code, 0);
    EXPECT_NE(run("splat --manifest " + at("scene/manifest.json") + " --split " + at("scene") + " --scene " +
                  at("scene/scene.ply") + " --out " + at("x"))
                  .code,
              0);
}
