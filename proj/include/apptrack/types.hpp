#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "apptrack/errors.hpp"

namespace apptrack {

// Object category, identified by name. The default set is the 8 classes of
// the driving benchmark; arbitrary extra categories may be registered.
struct Category {
    std::string name;

    bool operator==(const Category& o) const { return name == o.name; }
    bool operator!=(const Category& o) const { return name != o.name; }
    bool operator<(const Category& o) const { return name < o.name; }
};

// The 8 default categories, in benchmark order.
const std::vector<Category>& default_categories();

// Axis-aligned box, top-left corner plus size, in pixels.
struct Box {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    bool valid() const;
};

// Run-length encoded binary mask. Runs alternate background/foreground in
// column-major pixel order, starting with background; only the first run may
// be zero-length.
struct RleMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint64_t> counts;

    std::uint64_t pixel_count() const {
        return static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width);
    }
    // Number of foreground pixels (sum of odd-position runs).
    std::uint64_t foreground() const;
    bool valid() const;
};

// Appearance feature vector. Dimension must be uniform within a sequence.
struct Embedding {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    double norm() const;
    bool finite() const;
};

// One detected object in one frame.
struct Detection {
    std::string sequence;
    std::int64_t frame = 0;
    Category category;
    Box box;
    std::optional<RleMask> mask;
    double score = 0.0;
    Embedding embedding;
};

enum class TrackletState { Tentative, Confirmed, Lost, Removed };

const char* to_string(TrackletState s);

// One emitted output row. The mask is carried through from the matched
// detection when present so that mask-IoU evaluation of tracker output works.
struct TrackRecord {
    std::string sequence;
    std::int64_t frame = 0;
    std::int64_t track_id = 0;
    Category category;
    Box box;
    double score = 0.0;
    std::optional<RleMask> mask;
};

// A tracked identity. Mutated only by its owning tracker.
struct Tracklet {
    std::int64_t id = 0;
    Category category;
    TrackletState state = TrackletState::Tentative;
    int hits = 0;         // consecutive matched frames while tentative
    int frames_lost = 0;  // frames since last match
    std::vector<std::pair<Embedding, double>> history;  // (embedding, score), at most tau
    Embedding aggregate;  // score-weighted mean of history, unit norm
    Box last_box;
    std::int64_t last_frame = -1;
    std::vector<TrackRecord> pending;  // buffered tentative-frame records for backfill
};

// All tracker thresholds. Defaults follow the reference operating point.
struct TrackerConfig {
    double high_thresh = 0.84;
    double low_thresh = 0.3;
    int tau = 30;
    double gate_stage1 = 0.45;
    double gate_stage2 = 0.45;
    double gate_tentative = 0.35;
    int min_hits = 2;
    int max_lost = 10;
    std::vector<Category> categories = default_categories();
    std::map<std::string, double> nms_thresholds = default_nms_thresholds();
    bool backfill_on_confirm = false;

    static std::map<std::string, double> default_nms_thresholds();
};

// One violated config invariant.
struct ConfigError {
    enum class Code { ThresholdOrder, OutOfRange, UnknownCategory };
    Code code;
    std::string message;
};

// Returns every violated invariant, not just the first. Empty means valid.
std::vector<ConfigError> validate_config(const TrackerConfig& config);

}  // namespace apptrack
