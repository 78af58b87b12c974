#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "splitsplat/scene.hpp"

namespace splitsplat {

/// Each GT point takes the label of its nearest source point (ties to the smaller index). An empty
/// source yields all-background labels.
std::vector<Label> transfer_labels_to_gt(std::span<const Vec3> source, std::span<const Label> source_labels,
                                         std::span<const Vec3> gt_points);
std::vector<Label> transfer_labels_to_gt(std::span<const Gaussian> scene, std::span<const Vec3> gt_points);

enum class MatchMode {
    one_to_one,   // greedy by descending IoU, each prediction used once
    many_to_one,  // every GT instance takes its best prediction
};

struct EvalReport {
    std::vector<Label> gt_ids;      // GT instances (background excluded), ascending
    std::vector<double> ious;       // one per GT instance, in [0, 1]
    std::vector<Label> matched;     // matched prediction per GT instance, kBackground if none
    double miou = 0.0;              // percent
    std::map<int, double> macc;     // threshold (percent) -> percent of GT instances at or above it
};

/// Point-wise IoU matching of predicted against GT instance labels. Background (0) is excluded on
/// both sides. With no GT instances the report is empty with mIoU 0.
EvalReport evaluate(std::span<const Label> pred, std::span<const Label> gt, MatchMode mode = MatchMode::one_to_one,
                    const std::vector<int>& thresholds = {25, 50});

/// Human-readable table: one row per GT instance, then mIoU and mAcc columns.
std::string format_report(const EvalReport& r);
/// `key=value` lines: miou, macc_<x>, instances, iou_<gt id>.
std::string format_report_kv(const EvalReport& r);

}  // namespace splitsplat
