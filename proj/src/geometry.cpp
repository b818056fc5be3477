#include "apptrack/geometry.hpp"

#include <algorithm>
#include <numeric>

namespace apptrack {

double box_iou(const Box& a, const Box& b) {
    const double ix = std::max(a.x, b.x);
    const double iy = std::max(a.y, b.y);
    const double ix2 = std::min(a.x + a.w, b.x + b.w);
    const double iy2 = std::min(a.y + a.h, b.y + b.h);
    const double inter = std::max(0.0, ix2 - ix) * std::max(0.0, iy2 - iy);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

double mask_iou(const RleMask& a, const RleMask& b) {
    if (a.height != b.height || a.width != b.width) {
        throw CanvasMismatch("mask canvases differ: " + std::to_string(a.height) + "x" +
                             std::to_string(a.width) + " vs " + std::to_string(b.height) +
                             "x" + std::to_string(b.width));
    }
    // Walk both run lists in lockstep over the pixel axis. A run at even
    // index is background, odd is foreground.
    std::uint64_t inter = 0;
    std::size_t ia = 0, ib = 0;
    std::uint64_t ra = ia < a.counts.size() ? a.counts[ia] : 0;
    std::uint64_t rb = ib < b.counts.size() ? b.counts[ib] : 0;
    while (ia < a.counts.size() && ib < b.counts.size()) {
        while (ra == 0 && ++ia < a.counts.size()) ra = a.counts[ia];
        while (rb == 0 && ++ib < b.counts.size()) rb = b.counts[ib];
        if (ia >= a.counts.size() || ib >= b.counts.size()) break;
        const std::uint64_t step = std::min(ra, rb);
        if ((ia % 2 == 1) && (ib % 2 == 1)) inter += step;
        ra -= step;
        rb -= step;
    }
    const std::uint64_t fa = a.foreground();
    const std::uint64_t fb = b.foreground();
    const std::uint64_t uni = fa + fb - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<Detection> multiclass_nms(const std::vector<Detection>& detections,
                                      const std::map<std::string, double>& thresholds) {
    // Per category: indices sorted by score descending, input order on ties.
    std::map<std::string, std::vector<std::size_t>> by_category;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        by_category[detections[i].category.name].push_back(i);
    }

    std::vector<char> keep(detections.size(), 0);
    for (auto& [name, order] : by_category) {
        auto it = thresholds.find(name);
        if (it == thresholds.end()) {
            throw MissingThreshold("no nms threshold for category '" + name + "'");
        }
        const double thresh = it->second;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
            return detections[l].score > detections[r].score;
        });
        std::vector<std::size_t> kept;
        for (std::size_t idx : order) {
            bool suppressed = false;
            for (std::size_t k : kept) {
                if (box_iou(detections[idx].box, detections[k].box) > thresh) {
                    suppressed = true;
                    break;
                }
            }
            if (!suppressed) {
                kept.push_back(idx);
                keep[idx] = 1;
            }
        }
    }

    std::vector<Detection> survivors;
    survivors.reserve(detections.size());
    for (std::size_t i = 0; i < detections.size(); ++i) {
        if (keep[i]) survivors.push_back(detections[i]);
    }
    return survivors;
}

}  // namespace apptrack
