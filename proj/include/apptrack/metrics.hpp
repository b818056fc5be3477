#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apptrack/types.hpp"

namespace apptrack {

enum class IouKind { Box, Mask };

// One annotated object in one frame.
struct GtRecord {
    std::string sequence;
    std::int64_t frame = 0;
    std::int64_t gt_id = 0;
    Category category;
    Box box;
    std::optional<RleMask> mask;
};

struct GroundTruth {
    std::vector<GtRecord> records;
};

// Per-frame bipartite matching between ground truth and predictions:
// maximum cardinality first, then maximum total IoU, over pairs with
// IoU >= alpha. Indices refer to the input vectors.
struct FrameMatch {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::size_t> unmatched_gt;
    std::vector<std::size_t> unmatched_pred;
};

FrameMatch frame_matching(const std::vector<const GtRecord*>& gt,
                          const std::vector<const TrackRecord*>& pred,
                          IouKind kind, double alpha);

// CLEAR counts for one category. MOTA = 1 - (FN + FP + IDSW) / GT.
struct ClearResult {
    double mota = 0.0;
    std::int64_t tp = 0, fn = 0, fp = 0, idsw = 0, gt_count = 0;
};

// HOTA for one category, averaged over the alpha grid {0.05, ..., 0.95};
// the per-alpha curves are kept for inspection.
struct HotaResult {
    double hota = 0.0, det_a = 0.0, ass_a = 0.0;
    std::vector<double> alpha_grid, hota_alpha, det_a_alpha, ass_a_alpha;
};

// All computations are keyed by category name and skip categories that have
// no ground truth.
std::map<std::string, ClearResult> compute_mota(const GroundTruth& gt,
                                                const std::vector<TrackRecord>& pred,
                                                IouKind kind, double alpha = 0.5);

std::map<std::string, double> compute_idf1(const GroundTruth& gt,
                                           const std::vector<TrackRecord>& pred,
                                           IouKind kind, double alpha = 0.5);

std::map<std::string, HotaResult> compute_hota(const GroundTruth& gt,
                                               const std::vector<TrackRecord>& pred,
                                               IouKind kind);

struct CategoryMetrics {
    Category category;
    double mota = 0.0, idf1 = 0.0, hota = 0.0, det_a = 0.0, ass_a = 0.0;
    std::int64_t tp = 0, fn = 0, fp = 0, idsw = 0, gt_count = 0;
    std::vector<double> alpha_grid, hota_alpha, det_a_alpha, ass_a_alpha;
};

struct MetricsReport {
    std::vector<CategoryMetrics> categories;  // sorted by name, nonzero GT only
    double m_mota = 0.0, m_idf1 = 0.0, m_hota = 0.0, m_det_a = 0.0, m_ass_a = 0.0;
};

// Unweighted means over the given per-category results.
// Throws NoCategories when the list is empty.
MetricsReport summarize(const std::vector<CategoryMetrics>& per_category);

// Runs MOTA, IDF1 and HOTA and assembles the report.
MetricsReport evaluate(const GroundTruth& gt, const std::vector<TrackRecord>& pred,
                       IouKind kind, double alpha = 0.5);

}  // namespace apptrack
