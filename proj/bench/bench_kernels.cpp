// Tiled OpenMP kernels vs the serial reference, and thread scaling of the tiled kernels.
#include <benchmark/benchmark.h>

#include "splitsplat/parallel.hpp"
#include "splitsplat/propagation.hpp"
#include "splitsplat/rasterizer.hpp"
#include "splitsplat/reference.hpp"
#include "splitsplat/synth.hpp"

using namespace splitsplat;

namespace {

struct Fixture {
    SynthScene synth;
    std::vector<ViewAssets> views;
    PointCloud dense;
    Image target;
    Mask mask;
};

const Fixture& fixture() {
    static const Fixture f = [] {
        Fixture f;
        SynthSpec s;
        s.objects = 5;
        s.cameras = 20;
        s.gaussians_per_object = 800;
        s.width = s.height = 192;
        s.seed = 1;
        f.synth = generate_scene(s);
        f.views = render_gt_views(f.synth.scene, f.synth.cameras);
        CorruptionSpec c;
        c.split_probability = 0.3;
        c.drop_probability = 0.1;
        std::vector<MaskSet> gt;
        for (const auto& v : f.views) gt.push_back(v.masks);
        const auto raw = corrupt_masks(gt, c, 1);
        for (std::size_t k = 0; k < f.views.size(); ++k) f.views[k].masks = raw[k];
        f.dense = scene_point_cloud(f.synth.scene);
        f.target = f.views[0].image;
        for (auto& v : f.target.data) v = 1.0 - v;
        f.mask = f.views[0].masks.masks.begin()->second;
        return f;
    }();
    return f;
}

void BM_RenderTiled(benchmark::State& st) {
    const auto& f = fixture();
    ScopedThreads threads(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(render(f.synth.scene, f.synth.cameras[0]));
}

void BM_RenderReference(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(reference::render(f.synth.scene, f.synth.cameras[0]));
}

LossTerms terms(const Fixture& f) {
    LossTerms t;
    t.target_rgb = &f.target;
    t.target_mask = &f.mask;
    t.mask_weight = 0.25;
    return t;
}

void BM_GradientsTiled(benchmark::State& st) {
    const auto& f = fixture();
    ScopedThreads threads(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(loss_gradients(f.synth.scene, f.synth.cameras[0], terms(f)));
}

void BM_GradientsReference(benchmark::State& st) {
    const auto& f = fixture();
    for (auto _ : st) benchmark::DoNotOptimize(reference::loss_gradients(f.synth.scene, f.synth.cameras[0], terms(f)));
}

void BM_Propagate(benchmark::State& st) {
    const auto& f = fixture();
    ScopedThreads threads(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(propagate(f.views, f.dense, PropagationConfig{}));
}

}  // namespace

BENCHMARK(BM_RenderReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderTiled)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientsReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GradientsTiled)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Propagate)->Arg(1)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
