#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "apptrack/association.hpp"
#include "apptrack/types.hpp"

namespace apptrack {

enum class TrackEvent { Created, Confirmed, Lost, Recovered, Removed };

const char* to_string(TrackEvent e);

// Per-frame step output: emitted records plus lifecycle events.
struct FrameResult {
    std::int64_t frame = 0;
    std::vector<TrackRecord> records;
    std::vector<std::pair<TrackEvent, std::int64_t>> events;
};

// Online per-sequence tracker. Association uses appearance only: detections
// are split into high/low score bands, matched to tracklets in two cascaded
// stages by aggregate-embedding cosine distance, with a third stage matching
// tentative tracklets against leftover high-score detections.
//
// A tracker instance is a sequential state machine; step calls must be
// externally ordered. Distinct instances share nothing.
class Tracker {
public:
    explicit Tracker(const TrackerConfig& config);

    // Processes one frame. `frame` must exceed any previously stepped frame;
    // skipped indices count as empty frames for lost/tentative accounting.
    FrameResult step(std::int64_t frame, const std::vector<Detection>& detections);

    const TrackerConfig& config() const { return config_; }
    const std::vector<Tracklet>& tracklets() const { return tracklets_; }

private:
    void age_unmatched(const std::vector<char>& matched, FrameResult& result);
    void remove_dead();

    TrackerConfig config_;
    std::vector<Tracklet> tracklets_;  // live set; removed tracklets are dropped
    std::int64_t next_id_ = 1;
    std::int64_t last_frame_ = -1;
    bool started_ = false;
};

// Runs a whole sequence: frames ordered by index, gaps treated as empty
// frames. Returns all records sorted by (frame, track id).
std::vector<TrackRecord> run_sequence(
    const TrackerConfig& config,
    const std::map<std::int64_t, std::vector<Detection>>& frames);

}  // namespace apptrack
