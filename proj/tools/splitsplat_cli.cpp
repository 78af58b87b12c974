// Command-line driver for the Split&Splat pipeline.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitsplat/camera.hpp"
#include "splitsplat/editing.hpp"
#include "splitsplat/image.hpp"
#include "splitsplat/io.hpp"
#include "splitsplat/merging.hpp"
#include "splitsplat/metrics.hpp"
#include "splitsplat/parallel.hpp"
#include "splitsplat/propagation.hpp"
#include "splitsplat/refinement.hpp"
#include "splitsplat/semantics.hpp"
#include "splitsplat/spatial.hpp"
#include "splitsplat/synth.hpp"

namespace fs = std::filesystem;
using namespace splitsplat;

namespace {

struct Knobs {
    double tau_depth = kDefaultTauDepth;
    double tau_label = kDefaultTauLabel;
    double tau_iou = kDefaultTauIou;
    double tau_corr = kDefaultTauCorr;
    double lambda_init = kDefaultLambdaInit;
    int subsample = 1;
    std::uint64_t seed = 0;
    int threads = 0;
};

// Manifest config values apply unless the flag was given explicitly.
void apply_config(const nlohmann::json& cfg, const CLI::App& app, Knobs& k) {
    auto take = [&](const char* key, const char* flag, auto& field) {
        if (cfg.contains(key) && app.get_option(flag)->count() == 0)
            field = cfg.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    take("tau_depth", "--tau-depth", k.tau_depth);
    take("tau_label", "--tau-label", k.tau_label);
    take("tau_iou", "--tau-iou", k.tau_iou);
    take("tau_corr", "--tau-corr", k.tau_corr);
    take("lambda_init", "--lambda-init", k.lambda_init);
    take("subsample", "--subsample", k.subsample);
}

Vec3 parse_vec3(const std::vector<double>& v, const char* what) {
    if (v.size() != 3) throw Error(std::string(what) + " needs 3 values");
    return {v[0], v[1], v[2]};
}

// Labels each Gaussian with the label of its nearest point (dense cloud with propagated labels).
void label_scene(Scene& scene, const PointCloud& labeled) {
    if (!labeled.has_labels()) throw Error("label source point cloud has no labels");
    const auto means = gaussian_means(scene);
    const auto labels = transfer_labels_to_gt(labeled.points, labeled.labels, means);
    for (std::size_t i = 0; i < scene.size(); ++i) scene[i].label = labels[i];
}

std::unique_ptr<SegmenterPort> make_segmenter(const std::string& command, const std::string& socket,
                                              const std::string& dir, int timeout_ms) {
    const int given = !command.empty() + !socket.empty() + !dir.empty();
    if (given != 1) throw Error("splat: give exactly one of --segmenter, --segmenter-socket, --segmenter-dir");
    const std::chrono::milliseconds timeout(timeout_ms);
    if (!command.empty()) return ProcessSegmenter::spawn(command, timeout);
    if (!socket.empty()) return ProcessSegmenter::connect(socket, timeout);
    return std::make_unique<FileSegmenter>(FileSegmenter::from_directory(dir));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Split&Splat: panoptic segmentation and editing of Gaussian splatting scenes"};
    app.require_subcommand(1);
    app.fallthrough();
    Knobs k;
    app.add_option("--tau-depth", k.tau_depth, "surface consistency threshold (m)")->capture_default_str();
    app.add_option("--tau-label", k.tau_label, "voting confidence threshold")->capture_default_str();
    app.add_option("--tau-iou", k.tau_iou, "segmenter mask acceptance IoU")->capture_default_str();
    app.add_option("--tau-corr", k.tau_corr, "open-vocabulary match gap")->capture_default_str();
    app.add_option("--lambda-init", k.lambda_init, "first-observation bonus")->capture_default_str();
    app.add_option("--subsample", k.subsample, "use every Nth view")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", k.seed, "random seed")->capture_default_str();
    app.add_option("--threads", k.threads, std::string("worker threads (default: $") + kThreadsEnv + " or all cores)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark scene");
    SynthSpec spec;
    std::string synth_out;
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--objects", spec.objects)->capture_default_str();
    synth->add_option("--gaussians", spec.gaussians_per_object, "Gaussians per object")->capture_default_str();
    synth->add_option("--cameras", spec.cameras)->capture_default_str();
    synth->add_option("--width", spec.width)->capture_default_str();
    synth->add_option("--height", spec.height)->capture_default_str();
    synth->add_option("--spacing", spec.spacing)->capture_default_str();
    synth->add_option("--split-prob", spec.corruption.split_probability)->capture_default_str();
    synth->add_option("--drop-prob", spec.corruption.drop_probability)->capture_default_str();
    synth->add_option("--dilate", spec.corruption.dilation_px)->capture_default_str();
    bool keep_ids = false;
    synth->add_flag("--no-permute", keep_ids, "keep GT ids in the raw masks");
    synth->add_flag("--ground", spec.ground, "add a background plane");

    // split
    auto* split = app.add_subcommand("split", "propagate raw masks into view-consistent 3D labels");
    std::string manifest_path, split_out;
    bool previous_warp = false, no_dbscan = false;
    split->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    split->add_option("--out", split_out, "output directory")->required();
    split->add_flag("--warp-previous", previous_warp, "warp only the points labeled in the previous view");
    split->add_flag("--no-dbscan", no_dbscan, "skip the DBSCAN outlier filter");

    // splat
    auto* splat = app.add_subcommand("splat", "refine masks with the segmenter and merge instances");
    std::string splat_manifest, splat_split, splat_scene, splat_out, seg_cmd, seg_socket, seg_dir;
    int seg_timeout = 30000, refine_steps = 50;
    bool no_merge = false;
    splat->add_option("--manifest", splat_manifest)->required()->check(CLI::ExistingFile);
    splat->add_option("--split", splat_split, "output directory of `split`")->required()->check(CLI::ExistingDirectory);
    splat->add_option("--scene", splat_scene, "Gaussian PLY to label and merge")->required()->check(CLI::ExistingFile);
    splat->add_option("--out", splat_out, "output directory")->required();
    splat->add_option("--segmenter", seg_cmd, "command serving the segmenter protocol on stdio");
    splat->add_option("--segmenter-socket", seg_socket, "Unix socket of a segmenter server");
    splat->add_option("--segmenter-dir", seg_dir, "directory of per-view label images answering prompts");
    splat->add_option("--segmenter-timeout-ms", seg_timeout)->capture_default_str();
    splat->add_option("--refine-steps", refine_steps)->capture_default_str();
    splat->add_flag("--no-merge", no_merge, "stop after mask refinement");

    // query
    auto* query = app.add_subcommand("query", "open-vocabulary instance retrieval");
    std::string q_desc, q_text, q_scene, q_manifest, q_out;
    query->add_option("--descriptors", q_desc)->required()->check(CLI::ExistingFile);
    query->add_option("--text", q_text, "query vector: JSON array or descriptor file")->required()->check(CLI::ExistingFile);
    query->add_option("--scene", q_scene, "labeled Gaussian PLY, to emit per-view masks");
    query->add_option("--manifest", q_manifest, "cameras for the emitted masks");
    query->add_option("--out", q_out, "directory for the per-view masks");

    // edit
    auto* edit = app.add_subcommand("edit", "label-addressed scene edits");
    std::string e_in, e_out, e_op;
    Label e_label = 0;
    std::vector<double> e_offset, e_rgb, e_quat, e_translation;
    edit->add_option("--in", e_in)->required()->check(CLI::ExistingFile);
    edit->add_option("--out", e_out)->required();
    edit->add_option("op", e_op, "remove | duplicate | transform | recolor")
        ->required()
        ->check(CLI::IsMember({"remove", "duplicate", "transform", "recolor"}));
    edit->add_option("label", e_label)->required();
    edit->add_option("--offset", e_offset, "duplicate offset x y z")->expected(3);
    edit->add_option("--rgb", e_rgb, "recolor r g b")->expected(3);
    edit->add_option("--rotation", e_quat, "transform rotation quaternion w x y z")->expected(4);
    edit->add_option("--translation", e_translation, "transform translation x y z")->expected(3);

    // eval
    auto* eval = app.add_subcommand("eval", "mIoU / mAcc against labeled GT points");
    std::string v_scene, v_points, v_gt, v_kv;
    bool many = false;
    eval->add_option("--scene", v_scene, "labeled Gaussian PLY");
    eval->add_option("--points", v_points, "labeled point cloud PLY (e.g. split/labeled.ply)");
    eval->add_option("--gt", v_gt, "labeled GT point cloud")->required()->check(CLI::ExistingFile);
    eval->add_option("--kv", v_kv, "write key=value report here");
    eval->add_flag("--many-to-one", many, "let predictions match several GT instances");

    CLI11_PARSE(app, argc, argv);

    try {
        init_threads_from_env();
        if (k.threads > 0) set_threads(k.threads);

        if (synth->parsed()) {
            spec.seed = k.seed;
            spec.corruption.permute_ids = !keep_ids;
            const SynthScene sc = generate_scene(spec);
            auto views = render_gt_views(sc.scene, sc.cameras);
            const fs::path out(synth_out);
            std::vector<MaskSet> gt;
            for (const auto& v : views) gt.push_back(v.masks);
            for (const auto& m : gt) io::save_mask_set(out / "gt_masks", m);
            const auto raw = corrupt_masks(gt, spec.corruption, k.seed);
            for (std::size_t i = 0; i < views.size(); ++i) views[i].masks = raw[i];
            io::Manifest m;
            io::save_views(out, views, m);
            PointCloud pts = scene_point_cloud(sc.scene);
            io::save_point_cloud(out / "gt_points.ply", pts);
            pts.labels.clear();
            io::save_point_cloud(out / "points.ply", pts);
            io::save_gaussians(out / "scene.ply", sc.scene);
            m.points = "points.ply";
            m.gt_points = "gt_points.ply";
            io::save_manifest(out / "manifest.json", m);
            std::printf("wrote %zu Gaussians, %zu views to %s\n", sc.scene.size(), views.size(), out.c_str());
        } else if (split->parsed()) {
            const io::Manifest m = io::load_manifest(manifest_path);
            apply_config(m.config, app, k);
            const auto views = io::load_views(m, k.subsample);
            const PointCloud dense = io::load_point_cloud(m.points);
            PropagationConfig cfg;
            cfg.tau_depth = k.tau_depth;
            cfg.tau_label = k.tau_label;
            cfg.lambda_init = k.lambda_init;
            cfg.dbscan_enabled = !no_dbscan;
            if (previous_warp) cfg.warp_source = WarpSource::previous_view;
            const auto res = propagate(views, dense, cfg);
            const fs::path out(split_out);
            io::save_point_cloud(out / "labeled.ply", res.labeled);
            PointCloud all{dense.points, res.dense_labels, {}};
            io::save_point_cloud(out / "dense_labels.ply", all);
            for (const auto& ms : res.masks) io::save_mask_set(out / "masks", ms);
            std::set<Label> labels(res.labeled.labels.begin(), res.labeled.labels.end());
            std::printf("views %zu, labeled points %zu / %zu, instances %zu\n", views.size(), res.labeled.size(),
                        dense.size(), labels.size());
        } else if (splat->parsed()) {
            const io::Manifest m = io::load_manifest(splat_manifest);
            apply_config(m.config, app, k);
            const auto views = io::load_views(m, k.subsample);
            const fs::path split_dir(splat_split);
            Scene scene = io::load_gaussians(splat_scene);
            label_scene(scene, io::load_point_cloud(split_dir / "dense_labels.ply"));
            std::vector<Camera> cams;
            std::vector<MaskSet> propagated;
            for (const auto& v : views) {
                cams.push_back(v.camera);
                propagated.push_back(io::load_mask_set(split_dir / "masks", v.masks.view_id));
            }
            auto seg = make_segmenter(seg_cmd, seg_socket, seg_dir, seg_timeout);
            RefinementConfig rc;
            rc.tau_iou = k.tau_iou;
            const auto refined = refine_all(scene, cams, propagated, *seg, rc);
            const fs::path out(splat_out);
            for (const auto& ms : refined.masks) io::save_mask_set(out / "refined_masks", ms);
            for (const auto& f : refined.failures) std::fprintf(stderr, "segmenter fallback: %s\n", f.c_str());
            if (!no_merge) {
                AssembleConfig ac;
                ac.refine.steps = refine_steps;
                AssembleReport rep;
                const auto instances = split_instances(scene);
                scene = assemble_scene(instances, views, refined.masks, ac, &rep);
                std::printf("merge rounds %zu, refinements %zu\n", rep.rounds.size(), rep.refinements.size());
            }
            io::save_gaussians(out / "scene.ply", scene);
            std::printf("wrote %zu Gaussians to %s\n", scene.size(), (out / "scene.ply").c_str());
        } else if (query->parsed()) {
            const DescriptorTable table = io::load_descriptors(q_desc);
            const Eigen::VectorXd text = io::load_text_vector(q_text);
            QueryConfig qc;
            qc.tau_corr = k.tau_corr;
            const auto matches = query_open_vocab(text, table, qc);
            for (const auto& mt : matches) std::printf("%d %.17g\n", mt.label, mt.distance);
            if (!q_out.empty()) {
                if (q_scene.empty() || q_manifest.empty()) throw Error("query: --out needs --scene and --manifest");
                const Scene scene = io::load_gaussians(q_scene);
                const auto cams = io::load_cameras(io::load_manifest(q_manifest).cameras);
                std::vector<Label> labels;
                for (const auto& mt : matches) labels.push_back(mt.label);
                const auto masks = query_masks(labels, scene, cams);
                for (std::size_t i = 0; i < masks.size(); ++i) {
                    MaskSet ms;
                    ms.view_id = static_cast<int>(i);
                    ms.stage = MaskStage::refined;
                    ms.width = masks[i].width;
                    ms.height = masks[i].height;
                    if (count(masks[i]) > 0) ms.masks.emplace(1, masks[i]);
                    io::save_mask_set(q_out, ms);
                }
            }
        } else if (edit->parsed()) {
            Scene scene = io::load_gaussians(e_in);
            if (e_op == "remove") {
                scene = remove_instance(std::move(scene), e_label);
            } else if (e_op == "duplicate") {
                Label fresh = 0;
                scene = duplicate_instance(std::move(scene), e_label,
                                           e_offset.empty() ? Vec3::Zero() : parse_vec3(e_offset, "--offset"), &fresh);
                std::printf("duplicate label %d\n", fresh);
            } else if (e_op == "transform") {
                RigidTransform t;
                if (!e_quat.empty())
                    t.rotation = Quat(e_quat[0], e_quat[1], e_quat[2], e_quat[3]).normalized().toRotationMatrix();
                if (!e_translation.empty()) t.translation = parse_vec3(e_translation, "--translation");
                scene = transform_instance(std::move(scene), e_label, t);
            } else {
                if (e_rgb.empty()) throw Error("recolor needs --rgb");
                scene = recolor_instance(std::move(scene), e_label, parse_vec3(e_rgb, "--rgb"));
            }
            io::save_gaussians(e_out, scene);
        } else if (eval->parsed()) {
            if (v_scene.empty() == v_points.empty()) throw Error("eval: give exactly one of --scene, --points");
            const PointCloud gt = io::load_point_cloud(v_gt);
            if (!gt.has_labels()) throw Error("eval: GT point cloud has no labels");
            std::vector<Label> pred;
            if (!v_scene.empty()) {
                pred = transfer_labels_to_gt(io::load_gaussians(v_scene), gt.points);
            } else {
                const PointCloud src = io::load_point_cloud(v_points);
                if (!src.has_labels()) throw Error("eval: --points has no labels");
                pred = transfer_labels_to_gt(src.points, src.labels, gt.points);
            }
            const auto rep = evaluate(pred, gt.labels, many ? MatchMode::many_to_one : MatchMode::one_to_one);
            std::fputs(format_report(rep).c_str(), stdout);
            if (!v_kv.empty()) {
                std::ofstream f(v_kv);
                f << format_report_kv(rep);
                if (!f) throw Error("cannot write " + v_kv);
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
