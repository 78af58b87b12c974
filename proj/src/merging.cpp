#include "splitsplat/merging.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "splitsplat/image.hpp"
#include "splitsplat/rasterizer.hpp"

namespace splitsplat {

BoundingBox3D instance_bbox(std::span<const Gaussian> gaussians) {
    if (gaussians.empty()) throw Error("instance_bbox: empty instance");
    BoundingBox3D box;
    box.min = Vec3::Constant(std::numeric_limits<double>::infinity());
    box.max = -box.min;
    for (const auto& g : gaussians) {
        const Vec3 r = Vec3::Constant(3.0 * g.scale.maxCoeff());
        box.min = box.min.cwiseMin(g.mean - r);
        box.max = box.max.cwiseMax(g.mean + r);
    }
    return box;
}

CollisionMatrix collision_matrix(std::span<const Instance> instances) {
    CollisionMatrix c;
    const std::size_t n = instances.size();
    c.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& inst : instances) {
        c.ids.push_back(inst.id);
        c.boxes.push_back(instance_bbox(inst.gaussians));
    }
    for (std::size_t a = 0; a < n; ++a) {
        const auto& ga = instances[a].gaussians;
        for (std::size_t b = 0; b < n; ++b) {
            std::size_t inside = 0;
            for (const auto& g : ga) inside += c.boxes[b].contains(g.mean);
            c.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                static_cast<double>(inside) / static_cast<double>(ga.size());
        }
    }
    return c;
}

namespace {

// Planning state: each group knows its member rows and united box.
struct PlanGroup {
    Label id;
    std::vector<std::size_t> members;
    BoundingBox3D box;
};

double group_score(const CollisionMatrix& c, const PlanGroup& a, const PlanGroup& b) {
    double s = 0.0;
    for (std::size_t i : a.members)
        for (std::size_t j : b.members) s = std::max(s, c.pair_score(i, j));
    return s;
}

std::vector<std::pair<std::size_t, std::size_t>> round_over(const CollisionMatrix& c, const std::vector<PlanGroup>& groups) {
    struct Cand {
        double key;  // score (descending) or distance (ascending)
        Label lo, hi;
        std::size_t i, j;
    };
    const std::size_t n = groups.size();
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = group_score(c, groups[i], groups[j]);
            if (s > 0.0)
                cands.push_back({s, std::min(groups[i].id, groups[j].id), std::max(groups[i].id, groups[j].id), i, j});
        }
    const bool by_overlap = !cands.empty();
    if (by_overlap) {
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            return a.key != b.key ? a.key > b.key : std::tie(a.lo, a.hi) < std::tie(b.lo, b.hi);
        });
    } else {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                cands.push_back({(groups[i].box.center() - groups[j].box.center()).norm(),
                                 std::min(groups[i].id, groups[j].id), std::max(groups[i].id, groups[j].id), i, j});
        std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
            return a.key != b.key ? a.key < b.key : std::tie(a.lo, a.hi) < std::tie(b.lo, b.hi);
        });
    }
    std::vector<std::uint8_t> used(n, 0);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& cand : cands) {
        if (used[cand.i] || used[cand.j]) continue;
        used[cand.i] = used[cand.j] = 1;
        pairs.emplace_back(cand.i, cand.j);
    }
    return pairs;
}

std::vector<PlanGroup> initial_groups(const CollisionMatrix& c) {
    std::vector<PlanGroup> groups;
    for (std::size_t i = 0; i < c.size(); ++i) groups.push_back({c.ids[i], {i}, c.boxes[i]});
    return groups;
}

MergePair ordered(Label a, Label b) { return {std::min(a, b), std::max(a, b)}; }

}  // namespace

std::vector<MergePair> plan_round(const CollisionMatrix& c) {
    const auto groups = initial_groups(c);
    std::vector<MergePair> out;
    for (const auto& [i, j] : round_over(c, groups)) out.push_back(ordered(groups[i].id, groups[j].id));
    return out;
}

MergeSchedule plan_merges(const CollisionMatrix& c) {
    MergeSchedule schedule;
    auto groups = initial_groups(c);
    while (groups.size() > 1) {
        const auto pairs = round_over(c, groups);
        std::vector<MergePair> round;
        std::vector<std::uint8_t> merged(groups.size(), 0);
        std::vector<PlanGroup> next;
        for (const auto& [i, j] : pairs) {
            round.push_back(ordered(groups[i].id, groups[j].id));
            PlanGroup g{std::min(groups[i].id, groups[j].id), groups[i].members, groups[i].box.united(groups[j].box)};
            g.members.insert(g.members.end(), groups[j].members.begin(), groups[j].members.end());
            next.push_back(std::move(g));
            merged[i] = merged[j] = 1;
        }
        for (std::size_t i = 0; i < groups.size(); ++i)
            if (!merged[i]) next.push_back(groups[i]);
        std::sort(next.begin(), next.end(), [](const PlanGroup& a, const PlanGroup& b) { return a.id < b.id; });
        groups = std::move(next);
        schedule.rounds.push_back(std::move(round));
    }
    return schedule;
}

Scene merge_pair(std::span<const Gaussian> a, std::span<const Gaussian> b) {
    Scene out(a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    for (auto& g : out) g.opacity = 0.0;
    return out;
}

double wmask_schedule(int round) {
    if (round < 0) throw Error("wmask_schedule: round must be >= 0");
    // Exact decimal steps instead of 0.05 + 0.1 * round, which drifts in binary floating point.
    static constexpr double kSteps[] = {0.05, 0.15, 0.25};
    return round < 3 ? kSteps[round] : 0.25;
}

void BoundaryRefineConfig::validate() const {
    if (steps < 0) throw Error("boundary_refine: steps must be >= 0");
    if (!(lr_opacity >= 0.0) || !(lr_color >= 0.0)) throw Error("boundary_refine: learning rates must be >= 0");
    if (!(reset_opacity > 0.0 && reset_opacity <= 1.0)) throw Error("boundary_refine: reset opacity must lie in (0, 1]");
}

Gradients group_loss(std::span<const Gaussian> group, std::span<const ViewAssets> views,
                     std::span<const MaskSet> refined, double w_mask) {
    if (refined.size() != views.size()) throw Error("group_loss: one refined mask set per view required");
    const auto labels = scene_labels(group);
    const bool has_background = std::binary_search(labels.begin(), labels.end(), kBackground);

    std::size_t mask_pairs = 0;
    for (std::size_t k = 0; k < views.size(); ++k)
        for (Label l : labels)
            if (l != kBackground && refined[k].find(l)) ++mask_pairs;

    Gradients total(group.size());
    const double view_weight = views.empty() ? 0.0 : 1.0 / static_cast<double>(views.size());
    for (std::size_t k = 0; k < views.size(); ++k) {
        const Camera& cam = views[k].camera;
        Image target;
        if (has_background) {
            target = views[k].image;
        } else {
            Mask support(cam.width, cam.height, 0);
            for (Label l : labels)
                if (const Mask* m = refined[k].find(l)) support = mask_union(support, *m);
            target = apply_mask(views[k].image, support);
        }
        LossTerms rgb;
        rgb.target_rgb = &target;
        rgb.rgb_weight = view_weight;
        total.accumulate(loss_gradients(group, cam, rgb));

        if (w_mask == 0.0 || mask_pairs == 0) continue;
        for (Label l : labels) {
            if (l == kBackground) continue;
            const Mask* m = refined[k].find(l);
            if (!m) continue;
            LossTerms mt;
            mt.target_mask = m;
            mt.mask_weight = w_mask / static_cast<double>(mask_pairs);
            RenderOptions only;
            only.only_label = l;
            total.accumulate(loss_gradients(group, cam, mt, only));
        }
    }
    return total;
}

Scene boundary_refine(Scene group, std::span<const ViewAssets> views, std::span<const MaskSet> refined,
                      double w_mask, const BoundaryRefineConfig& cfg, RefineReport* report) {
    cfg.validate();
    RefineReport rep;
    for (auto& g : group)
        if (g.opacity == 0.0) g.opacity = cfg.reset_opacity;

    const std::size_t n = group.size();
    std::vector<double> m_op(n, 0.0), v_op(n, 0.0);
    std::vector<Vec3> m_col(n, Vec3::Zero()), v_col(n, Vec3::Zero());
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

    Scene best = group;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int step = 0; step <= cfg.steps; ++step) {
        const Gradients g = group_loss(group, views, refined, w_mask);
        if (!std::isfinite(g.loss))
            throw Error("boundary_refine: loss became non-finite at step " + std::to_string(step));
        rep.history.push_back(g.loss);
        if (step == 0) rep.initial_loss = g.loss;
        if (g.loss < best_loss) {
            best_loss = g.loss;
            best = group;
        }
        if (step == cfg.steps) break;

        const double c1 = 1.0 - std::pow(beta1, step + 1), c2 = 1.0 - std::pow(beta2, step + 1);
        for (std::size_t i = 0; i < n; ++i) {
            m_op[i] = beta1 * m_op[i] + (1.0 - beta1) * g.opacity[i];
            v_op[i] = beta2 * v_op[i] + (1.0 - beta2) * g.opacity[i] * g.opacity[i];
            group[i].opacity -= cfg.lr_opacity * (m_op[i] / c1) / (std::sqrt(v_op[i] / c2) + eps);
            group[i].opacity = std::clamp(group[i].opacity, 0.0, 1.0);

            m_col[i] = beta1 * m_col[i] + (1.0 - beta1) * g.color[i];
            v_col[i] = beta2 * v_col[i] + (1.0 - beta2) * g.color[i].cwiseAbs2();
            const Vec3 step_col = (m_col[i] / c1).array() / ((v_col[i] / c2).array().sqrt() + eps);
            group[i].color = (group[i].color - cfg.lr_color * step_col).cwiseMax(0.0).cwiseMin(1.0);
        }
    }

    const std::size_t before = best.size();
    std::erase_if(best, [&](const Gaussian& g) { return g.opacity < cfg.prune_threshold; });
    rep.pruned = before - best.size();
    rep.final_loss = best_loss;
    if (report) *report = std::move(rep);
    return best;
}

std::vector<Instance> split_instances(std::span<const Gaussian> scene) {
    std::vector<Instance> out;
    for (Label l : scene_labels(scene)) out.push_back({l, instance_subset(scene, l)});
    return out;
}

Scene assemble_scene(std::span<const Instance> instances, std::span<const ViewAssets> views,
                     std::span<const MaskSet> refined, const AssembleConfig& cfg, AssembleReport* report) {
    if (instances.empty()) throw Error("assemble_scene: at least one instance is required");
    AssembleReport rep;
    std::vector<Instance> groups;
    std::optional<Instance> background;
    for (const auto& inst : instances) {
        if (inst.gaussians.empty()) continue;
        if (inst.id == kBackground)
            background = inst;
        else
            groups.push_back(inst);
    }
    std::sort(groups.begin(), groups.end(), [](const Instance& a, const Instance& b) { return a.id < b.id; });

    int round = 0;
    auto refine_pair = [&](const Instance& a, const Instance& b) {
        RefineReport rr;
        Instance merged{std::min(a.id, b.id), boundary_refine(merge_pair(a.gaussians, b.gaussians), views, refined,
                                                              wmask_schedule(round), cfg.refine, &rr)};
        rep.refinements.push_back(rr);
        return merged;
    };

    while (groups.size() > 1) {
        const auto pairs = plan_round(collision_matrix(groups));
        std::map<Label, std::size_t> index;
        for (std::size_t i = 0; i < groups.size(); ++i) index[groups[i].id] = i;
        std::vector<std::uint8_t> merged(groups.size(), 0);
        std::vector<Instance> next;
        for (const auto& [a, b] : pairs) {
            const std::size_t ia = index.at(a), ib = index.at(b);
            next.push_back(refine_pair(groups[ia], groups[ib]));
            merged[ia] = merged[ib] = 1;
        }
        for (std::size_t i = 0; i < groups.size(); ++i)
            if (!merged[i]) next.push_back(std::move(groups[i]));
        std::erase_if(next, [](const Instance& g) { return g.gaussians.empty(); });
        std::sort(next.begin(), next.end(), [](const Instance& a, const Instance& b) { return a.id < b.id; });
        groups = std::move(next);
        rep.rounds.push_back(pairs);
        ++round;
    }

    Scene out = groups.empty() ? Scene{} : std::move(groups.front().gaussians);
    if (background) {
        if (out.empty()) {
            out = background->gaussians;
        } else {
            out = refine_pair(Instance{1, std::move(out)}, *background).gaussians;
            rep.rounds.push_back({{kBackground, 1}});
        }
    }
    if (report) *report = std::move(rep);
    return out;
}

}  // namespace splitsplat
