#include "splitsplat/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "splitsplat/spatial.hpp"

namespace splitsplat {

std::vector<Label> transfer_labels_to_gt(std::span<const Vec3> source, std::span<const Label> source_labels,
                                         std::span<const Vec3> gt_points) {
    if (source.size() != source_labels.size()) throw Error("transfer_labels_to_gt: one label per point required");
    std::vector<Label> out(gt_points.size(), kBackground);
    if (source.empty()) return out;
    const KdTree tree(source);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < gt_points.size(); ++i) out[i] = source_labels[tree.nearest(gt_points[i]).index];
    return out;
}

std::vector<Label> transfer_labels_to_gt(std::span<const Gaussian> scene, std::span<const Vec3> gt_points) {
    std::vector<Label> labels;
    for (const auto& g : scene) labels.push_back(g.label);
    const auto means = gaussian_means(scene);
    return transfer_labels_to_gt(means, labels, gt_points);
}

EvalReport evaluate(std::span<const Label> pred, std::span<const Label> gt, MatchMode mode,
                    const std::vector<int>& thresholds) {
    if (pred.size() != gt.size()) throw Error("evaluate: prediction and GT sizes differ");
    std::map<Label, std::size_t> gt_size, pred_size;
    std::map<std::pair<Label, Label>, std::size_t> inter;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] != kBackground) ++gt_size[gt[i]];
        if (pred[i] != kBackground) ++pred_size[pred[i]];
        if (gt[i] != kBackground && pred[i] != kBackground) ++inter[{gt[i], pred[i]}];
    }

    EvalReport r;
    std::map<Label, std::size_t> row;
    for (const auto& [g, n] : gt_size) {
        row[g] = r.gt_ids.size();
        r.gt_ids.push_back(g);
    }
    r.ious.assign(r.gt_ids.size(), 0.0);
    r.matched.assign(r.gt_ids.size(), kBackground);

    struct Cand {
        double iou;
        Label g, p;
    };
    std::vector<Cand> cands;
    for (const auto& [key, n] : inter) {
        const auto [g, p] = key;
        const double u = static_cast<double>(gt_size[g] + pred_size[p] - n);
        cands.push_back({static_cast<double>(n) / u, g, p});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.iou != b.iou ? a.iou > b.iou : std::tie(a.g, a.p) < std::tie(b.g, b.p);
    });
    std::map<Label, bool> pred_used;
    std::vector<std::uint8_t> gt_done(r.gt_ids.size(), 0);
    for (const auto& c : cands) {
        const std::size_t i = row[c.g];
        if (gt_done[i]) continue;
        if (mode == MatchMode::one_to_one && pred_used[c.p]) continue;
        gt_done[i] = 1;
        pred_used[c.p] = true;
        r.ious[i] = c.iou;
        r.matched[i] = c.p;
    }

    const double n = static_cast<double>(r.gt_ids.size());
    for (int t : thresholds) {
        std::size_t hit = 0;
        for (double v : r.ious) hit += v >= t / 100.0;
        r.macc[t] = n > 0 ? 100.0 * static_cast<double>(hit) / n : 0.0;
    }
    double sum = 0.0;
    for (double v : r.ious) sum += v;
    r.miou = n > 0 ? 100.0 * sum / n : 0.0;
    return r;
}

std::string format_report(const EvalReport& r) {
    std::ostringstream os;
    char buf[128];
    os << "instance  matched  IoU\n";
    for (std::size_t i = 0; i < r.gt_ids.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%8d  %7d  %6.2f\n", r.gt_ids[i], r.matched[i], 100.0 * r.ious[i]);
        os << buf;
    }
    os << "\n  mIoU";
    for (const auto& [t, v] : r.macc) os << "  mAcc(" << t << ")";
    std::snprintf(buf, sizeof buf, "\n%6.2f", r.miou);
    os << buf;
    for (const auto& [t, v] : r.macc) {
        std::snprintf(buf, sizeof buf, "  %*.2f", static_cast<int>(std::to_string(t).size()) + 6, v);
        os << buf;
    }
    os << "\n";
    return os.str();
}

std::string format_report_kv(const EvalReport& r) {
    std::ostringstream os;
    os.precision(17);
    os << "miou=" << r.miou << "\n";
    for (const auto& [t, v] : r.macc) os << "macc_" << t << "=" << v << "\n";
    os << "instances=" << r.gt_ids.size() << "\n";
    for (std::size_t i = 0; i < r.gt_ids.size(); ++i) os << "iou_" << r.gt_ids[i] << "=" << r.ious[i] << "\n";
    return os.str();
}

}  // namespace splitsplat
