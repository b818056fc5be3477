#include "apptrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "apptrack/association.hpp"
#include "apptrack/geometry.hpp"

namespace apptrack {

namespace {

double record_iou(const Box& ga, const std::optional<RleMask>& gm, const Box& pa,
                  const std::optional<RleMask>& pm, IouKind kind) {
    if (kind == IouKind::Box) return box_iou(ga, pa);
    if (!gm || !pm) throw MissingMask("mask IoU requested but a record lacks a mask");
    return mask_iou(*gm, *pm);
}

double pair_iou(const GtRecord& g, const TrackRecord& p, IouKind kind) {
    return record_iou(g.box, g.mask, p.box, p.mask, kind);
}

// Frames of one (sequence, category) slice, each holding pointers into the
// caller's records.
struct FrameSlice {
    std::vector<const GtRecord*> gt;
    std::vector<const TrackRecord*> pred;
};

using SequenceFrames = std::map<std::int64_t, FrameSlice>;

// sequence -> frame -> slice, for one category.
std::map<std::string, SequenceFrames> slice_category(const GroundTruth& gt,
                                                     const std::vector<TrackRecord>& pred,
                                                     const std::string& category) {
    std::map<std::string, SequenceFrames> out;
    for (const auto& r : gt.records) {
        if (r.category.name == category) out[r.sequence][r.frame].gt.push_back(&r);
    }
    for (const auto& r : pred) {
        if (r.category.name == category) out[r.sequence][r.frame].pred.push_back(&r);
    }
    return out;
}

std::vector<std::string> gt_categories(const GroundTruth& gt) {
    std::set<std::string> names;
    for (const auto& r : gt.records) names.insert(r.category.name);
    return {names.begin(), names.end()};
}

}  // namespace

FrameMatch frame_matching(const std::vector<const GtRecord*>& gt,
                          const std::vector<const TrackRecord*>& pred,
                          IouKind kind, double alpha) {
    // Negated IoU, gated at alpha. The solver maximizes cardinality first,
    // then total IoU.
    CostMatrix m = CostMatrix::sized(gt.size(), pred.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        for (std::size_t j = 0; j < pred.size(); ++j) {
            const double iou = pair_iou(*gt[i], *pred[j], kind);
            if (iou >= alpha) m.at(i, j) = -iou;
        }
    }
    const Assignment assignment = hungarian_solve(m);

    FrameMatch out;
    std::vector<char> gt_used(gt.size(), 0), pred_used(pred.size(), 0);
    for (const auto& [i, j] : assignment.pairs) {
        out.pairs.emplace_back(i, j);
        gt_used[i] = 1;
        pred_used[j] = 1;
    }
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (!gt_used[i]) out.unmatched_gt.push_back(i);
    }
    for (std::size_t j = 0; j < pred.size(); ++j) {
        if (!pred_used[j]) out.unmatched_pred.push_back(j);
    }
    return out;
}

std::map<std::string, ClearResult> compute_mota(const GroundTruth& gt,
                                                const std::vector<TrackRecord>& pred,
                                                IouKind kind, double alpha) {
    std::map<std::string, ClearResult> out;
    for (const std::string& cat : gt_categories(gt)) {
        ClearResult res;
        for (auto& [seq, frames] : slice_category(gt, pred, cat)) {
            // last_match: most recent track id matched to each gt id, for
            // switch counting. prev_match: the previous frame's
            // correspondences, used for match continuity.
            std::map<std::int64_t, std::int64_t> last_match;
            std::map<std::int64_t, std::int64_t> prev_match;
            for (auto& [frame, slice] : frames) {
                res.gt_count += static_cast<std::int64_t>(slice.gt.size());

                std::vector<char> gt_used(slice.gt.size(), 0);
                std::vector<char> pred_used(slice.pred.size(), 0);
                std::vector<std::pair<std::size_t, std::size_t>> matches;

                // Persist previous-frame correspondences that still overlap.
                for (std::size_t i = 0; i < slice.gt.size(); ++i) {
                    auto it = prev_match.find(slice.gt[i]->gt_id);
                    if (it == prev_match.end()) continue;
                    for (std::size_t j = 0; j < slice.pred.size(); ++j) {
                        if (pred_used[j] || slice.pred[j]->track_id != it->second) continue;
                        if (pair_iou(*slice.gt[i], *slice.pred[j], kind) >= alpha) {
                            matches.emplace_back(i, j);
                            gt_used[i] = 1;
                            pred_used[j] = 1;
                        }
                        break;
                    }
                }

                // Optimal matching over the remainder.
                std::vector<const GtRecord*> rest_gt;
                std::vector<const TrackRecord*> rest_pred;
                std::vector<std::size_t> gt_map, pred_map;
                for (std::size_t i = 0; i < slice.gt.size(); ++i) {
                    if (!gt_used[i]) {
                        rest_gt.push_back(slice.gt[i]);
                        gt_map.push_back(i);
                    }
                }
                for (std::size_t j = 0; j < slice.pred.size(); ++j) {
                    if (!pred_used[j]) {
                        rest_pred.push_back(slice.pred[j]);
                        pred_map.push_back(j);
                    }
                }
                const FrameMatch fm = frame_matching(rest_gt, rest_pred, kind, alpha);
                for (const auto& [i, j] : fm.pairs) {
                    matches.emplace_back(gt_map[i], pred_map[j]);
                }

                prev_match.clear();
                for (const auto& [i, j] : matches) {
                    const std::int64_t gid = slice.gt[i]->gt_id;
                    const std::int64_t tid = slice.pred[j]->track_id;
                    res.tp += 1;
                    auto it = last_match.find(gid);
                    if (it != last_match.end() && it->second != tid) res.idsw += 1;
                    last_match[gid] = tid;
                    prev_match[gid] = tid;
                }
                res.fn += static_cast<std::int64_t>(slice.gt.size() - matches.size());
                res.fp += static_cast<std::int64_t>(slice.pred.size() - matches.size());
            }
        }
        if (res.gt_count == 0) continue;
        res.mota = 1.0 - static_cast<double>(res.fn + res.fp + res.idsw) /
                             static_cast<double>(res.gt_count);
        out[cat] = res;
    }
    return out;
}

std::map<std::string, double> compute_idf1(const GroundTruth& gt,
                                           const std::vector<TrackRecord>& pred,
                                           IouKind kind, double alpha) {
    std::map<std::string, double> out;
    for (const std::string& cat : gt_categories(gt)) {
        std::int64_t idtp = 0, gt_len_total = 0, pred_len_total = 0;
        for (auto& [seq, frames] : slice_category(gt, pred, cat)) {
            // Trajectory lengths and per-frame overlap counts.
            std::map<std::int64_t, std::int64_t> gt_len, pred_len;
            std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> overlap;
            for (auto& [frame, slice] : frames) {
                for (const auto* g : slice.gt) gt_len[g->gt_id] += 1;
                for (const auto* p : slice.pred) pred_len[p->track_id] += 1;
                for (const auto* g : slice.gt) {
                    for (const auto* p : slice.pred) {
                        if (pair_iou(*g, *p, kind) >= alpha) {
                            overlap[{g->gt_id, p->track_id}] += 1;
                        }
                    }
                }
            }
            for (const auto& [id, len] : gt_len) gt_len_total += len;
            for (const auto& [id, len] : pred_len) pred_len_total += len;

            // Globally optimal identity correspondence maximizing IDTP, via
            // the augmented square: pairing identity i with track j costs the
            // misses plus spurious frames of that pairing, and every identity
            // also has a leave-unmatched slot costing its full length. The
            // minimum assignment then minimizes IDFN + IDFP.
            std::vector<std::int64_t> gids, pids;
            for (const auto& [id, len] : gt_len) gids.push_back(id);
            for (const auto& [id, len] : pred_len) pids.push_back(id);
            const std::size_t ng = gids.size(), np = pids.size();
            CostMatrix m = CostMatrix::sized(ng + np, np + ng);
            for (std::size_t i = 0; i < ng; ++i) {
                for (std::size_t j = 0; j < np; ++j) {
                    std::int64_t o = 0;
                    auto it = overlap.find({gids[i], pids[j]});
                    if (it != overlap.end()) o = it->second;
                    m.at(i, j) = static_cast<double>(gt_len[gids[i]] +
                                                     pred_len[pids[j]] - 2 * o);
                }
                m.at(i, np + i) = static_cast<double>(gt_len[gids[i]]);
            }
            for (std::size_t j = 0; j < np; ++j) {
                m.at(ng + j, j) = static_cast<double>(pred_len[pids[j]]);
                for (std::size_t i = 0; i < ng; ++i) m.at(ng + j, np + i) = 0.0;
            }
            const Assignment assignment = hungarian_solve(m);
            for (const auto& [r, c] : assignment.pairs) {
                if (r < ng && c < np) {
                    auto it = overlap.find({gids[r], pids[c]});
                    if (it != overlap.end()) idtp += it->second;
                }
            }
        }
        if (gt_len_total == 0) continue;
        const std::int64_t idfn = gt_len_total - idtp;
        const std::int64_t idfp = pred_len_total - idtp;
        const double denom = static_cast<double>(2 * idtp + idfp + idfn);
        out[cat] = denom > 0.0 ? 2.0 * static_cast<double>(idtp) / denom : 0.0;
    }
    return out;
}

std::map<std::string, HotaResult> compute_hota(const GroundTruth& gt,
                                               const std::vector<TrackRecord>& pred,
                                               IouKind kind) {
    std::map<std::string, HotaResult> out;
    std::vector<double> grid;
    for (int i = 1; i <= 19; ++i) grid.push_back(static_cast<double>(i) / 20.0);

    for (const std::string& cat : gt_categories(gt)) {
        auto slices = slice_category(gt, pred, cat);

        // Trajectory lengths per sequence (alpha-independent).
        std::map<std::string, std::map<std::int64_t, std::int64_t>> gt_len, pred_len;
        std::int64_t gt_total = 0;
        for (auto& [seq, frames] : slices) {
            for (auto& [frame, slice] : frames) {
                for (const auto* g : slice.gt) {
                    gt_len[seq][g->gt_id] += 1;
                    ++gt_total;
                }
                for (const auto* p : slice.pred) pred_len[seq][p->track_id] += 1;
            }
        }
        if (gt_total == 0) continue;

        HotaResult res;
        res.alpha_grid = grid;
        for (const double alpha : grid) {
            std::int64_t tp = 0, fn = 0, fp = 0;
            double ass_sum = 0.0;
            for (auto& [seq, frames] : slices) {
                // Matched (gt id, track id) pair counts at this alpha.
                std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> pair_count;
                std::vector<std::pair<std::int64_t, std::int64_t>> tp_pairs;
                for (auto& [frame, slice] : frames) {
                    const FrameMatch fm = frame_matching(slice.gt, slice.pred, kind, alpha);
                    for (const auto& [i, j] : fm.pairs) {
                        const auto key = std::pair{slice.gt[i]->gt_id,
                                                   slice.pred[j]->track_id};
                        pair_count[key] += 1;
                        tp_pairs.push_back(key);
                    }
                    tp += static_cast<std::int64_t>(fm.pairs.size());
                    fn += static_cast<std::int64_t>(fm.unmatched_gt.size());
                    fp += static_cast<std::int64_t>(fm.unmatched_pred.size());
                }
                for (const auto& key : tp_pairs) {
                    const double tpa = static_cast<double>(pair_count[key]);
                    const double union_len =
                        static_cast<double>(gt_len[seq][key.first] +
                                            pred_len[seq][key.second]) -
                        tpa;
                    ass_sum += tpa / union_len;
                }
            }
            const double det_a =
                tp + fn + fp > 0
                    ? static_cast<double>(tp) / static_cast<double>(tp + fn + fp)
                    : 0.0;
            const double ass_a = tp > 0 ? ass_sum / static_cast<double>(tp) : 0.0;
            res.det_a_alpha.push_back(det_a);
            res.ass_a_alpha.push_back(ass_a);
            res.hota_alpha.push_back(std::sqrt(det_a * ass_a));
        }
        const auto mean = [](const std::vector<double>& xs) {
            double s = 0.0;
            for (double x : xs) s += x;
            return s / static_cast<double>(xs.size());
        };
        res.hota = mean(res.hota_alpha);
        res.det_a = mean(res.det_a_alpha);
        res.ass_a = mean(res.ass_a_alpha);
        out[cat] = res;
    }
    return out;
}

MetricsReport summarize(const std::vector<CategoryMetrics>& per_category) {
    if (per_category.empty()) throw NoCategories("no categories with ground truth");
    MetricsReport report;
    report.categories = per_category;
    std::sort(report.categories.begin(), report.categories.end(),
              [](const CategoryMetrics& a, const CategoryMetrics& b) {
                  return a.category.name < b.category.name;
              });
    const double n = static_cast<double>(report.categories.size());
    for (const auto& c : report.categories) {
        report.m_mota += c.mota / n;
        report.m_idf1 += c.idf1 / n;
        report.m_hota += c.hota / n;
        report.m_det_a += c.det_a / n;
        report.m_ass_a += c.ass_a / n;
    }
    return report;
}

MetricsReport evaluate(const GroundTruth& gt, const std::vector<TrackRecord>& pred,
                       IouKind kind, double alpha) {
    const auto clear = compute_mota(gt, pred, kind, alpha);
    const auto idf1 = compute_idf1(gt, pred, kind, alpha);
    const auto hota = compute_hota(gt, pred, kind);

    std::vector<CategoryMetrics> per_category;
    for (const auto& [name, c] : clear) {
        CategoryMetrics cm;
        cm.category = Category{name};
        cm.mota = c.mota;
        cm.tp = c.tp;
        cm.fn = c.fn;
        cm.fp = c.fp;
        cm.idsw = c.idsw;
        cm.gt_count = c.gt_count;
        cm.idf1 = idf1.at(name);
        const HotaResult& h = hota.at(name);
        cm.hota = h.hota;
        cm.det_a = h.det_a;
        cm.ass_a = h.ass_a;
        cm.alpha_grid = h.alpha_grid;
        cm.hota_alpha = h.hota_alpha;
        cm.det_a_alpha = h.det_a_alpha;
        cm.ass_a_alpha = h.ass_a_alpha;
        per_category.push_back(std::move(cm));
    }
    return summarize(per_category);
}

}  // namespace apptrack
