#pragma once

#include <map>
#include <string>
#include <vector>

#include "apptrack/types.hpp"

namespace apptrack {

// Intersection over union of two boxes; 0 when the union has zero area.
double box_iou(const Box& a, const Box& b);

// IoU of two run-length encoded masks, computed on the runs directly.
// Throws CanvasMismatch when the canvas dimensions differ. Two empty masks
// have IoU 0.
double mask_iou(const RleMask& a, const RleMask& b);

// Greedy per-category NMS over one frame of detections. Within a category,
// detections are visited by descending score (ties: earlier input index
// first); a kept detection suppresses later same-category detections whose
// box IoU is strictly greater than the category threshold. Survivors keep
// their original input order. Throws MissingThreshold for an unmapped
// category.
std::vector<Detection> multiclass_nms(const std::vector<Detection>& detections,
                                      const std::map<std::string, double>& thresholds);

}  // namespace apptrack
