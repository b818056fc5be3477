#include "apptrack/tracker.hpp"

#include <algorithm>

namespace apptrack {

const char* to_string(TrackEvent e) {
    switch (e) {
        case TrackEvent::Created: return "Created";
        case TrackEvent::Confirmed: return "Confirmed";
        case TrackEvent::Lost: return "Lost";
        case TrackEvent::Recovered: return "Recovered";
        case TrackEvent::Removed: return "Removed";
    }
    return "?";
}

Tracker::Tracker(const TrackerConfig& config) : config_(config) {
    const auto errors = validate_config(config_);
    if (!errors.empty()) {
        std::string msg = "invalid tracker config:";
        for (const auto& e : errors) msg += " " + e.message + ";";
        throw TrackError(msg);
    }
}

namespace {

TrackRecord make_record(const Tracklet& t, const Detection& d) {
    TrackRecord rec;
    rec.sequence = d.sequence;
    rec.frame = d.frame;
    rec.track_id = t.id;
    rec.category = t.category;
    rec.box = d.box;
    rec.score = d.score;
    rec.mask = d.mask;
    return rec;
}

}  // namespace

void Tracker::age_unmatched(const std::vector<char>& matched, FrameResult& result) {
    for (std::size_t i = 0; i < tracklets_.size(); ++i) {
        if (matched[i]) continue;
        Tracklet& t = tracklets_[i];
        switch (t.state) {
            case TrackletState::Tentative:
                // consecutiveness broken
                t.state = TrackletState::Removed;
                result.events.emplace_back(TrackEvent::Removed, t.id);
                break;
            case TrackletState::Confirmed:
                t.state = TrackletState::Lost;
                result.events.emplace_back(TrackEvent::Lost, t.id);
                [[fallthrough]];
            case TrackletState::Lost:
                t.frames_lost += 1;
                if (t.frames_lost > config_.max_lost) {
                    t.state = TrackletState::Removed;
                    result.events.emplace_back(TrackEvent::Removed, t.id);
                }
                break;
            case TrackletState::Removed:
                break;
        }
    }
}

void Tracker::remove_dead() {
    std::erase_if(tracklets_,
                  [](const Tracklet& t) { return t.state == TrackletState::Removed; });
}

FrameResult Tracker::step(std::int64_t frame, const std::vector<Detection>& detections) {
    if (started_ && frame <= last_frame_) {
        throw NonMonotonicFrame("frame " + std::to_string(frame) +
                                " not beyond previous frame " + std::to_string(last_frame_));
    }

    FrameResult result;
    result.frame = frame;

    // Missing indices count as empty frames: every tracklet goes unmatched.
    if (started_) {
        for (std::int64_t f = last_frame_ + 1; f < frame; ++f) {
            std::vector<char> none(tracklets_.size(), 0);
            age_unmatched(none, result);
            remove_dead();
        }
    }
    started_ = true;
    last_frame_ = frame;

    // (1) Partition by score band; below low_thresh is dropped outright.
    std::vector<std::size_t> high, low;
    for (std::size_t j = 0; j < detections.size(); ++j) {
        const double s = detections[j].score;
        if (s >= config_.high_thresh) {
            high.push_back(j);
        } else if (s >= config_.low_thresh) {
            low.push_back(j);
        }
    }

    std::vector<char> trk_matched(tracklets_.size(), 0);
    std::vector<char> det_matched(detections.size(), 0);

    auto update_matched = [&](Tracklet& t, const Detection& d) {
        t.history.emplace_back(d.embedding, d.score);
        if (static_cast<int>(t.history.size()) > config_.tau) {
            t.history.erase(t.history.begin(),
                            t.history.begin() + (t.history.size() - config_.tau));
        }
        t.aggregate = aggregate_embedding(t.history);
        t.last_box = d.box;
        t.last_frame = frame;
        t.frames_lost = 0;
    };

    auto run_stage = [&](const std::vector<std::size_t>& trk_idx,
                         const std::vector<std::size_t>& det_idx, double gate) {
        CostMatrix m;
        std::vector<const Tracklet*> tp;
        std::vector<const Detection*> dp;
        for (std::size_t i : trk_idx) tp.push_back(&tracklets_[i]);
        for (std::size_t j : det_idx) dp.push_back(&detections[j]);
        m = build_cost_matrix(tp, dp, gate);
        m.rows = trk_idx;
        m.cols = det_idx;
        return std::pair{hungarian_solve(m), m};
    };

    auto stage_candidates = [&](auto&& pred) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < tracklets_.size(); ++i) {
            if (!trk_matched[i] && pred(tracklets_[i].state)) idx.push_back(i);
        }
        return idx;
    };
    auto unmatched_of = [&](const std::vector<std::size_t>& det_idx) {
        std::vector<std::size_t> idx;
        for (std::size_t j : det_idx) {
            if (!det_matched[j]) idx.push_back(j);
        }
        return idx;
    };

    // (2)+(3) Stages 1 and 2: confirmed and lost tracklets against the high
    // band first, then against the low band.
    const auto established = [](TrackletState s) {
        return s == TrackletState::Confirmed || s == TrackletState::Lost;
    };
    for (int stage = 0; stage < 2; ++stage) {
        const auto trk_idx = stage_candidates(established);
        const auto det_idx = unmatched_of(stage == 0 ? high : low);
        const double gate = stage == 0 ? config_.gate_stage1 : config_.gate_stage2;
        const auto [assignment, m] = run_stage(trk_idx, det_idx, gate);
        for (const auto& [r, c] : assignment.pairs) {
            Tracklet& t = tracklets_[m.rows[r]];
            const Detection& d = detections[m.cols[c]];
            trk_matched[m.rows[r]] = 1;
            det_matched[m.cols[c]] = 1;
            if (t.state == TrackletState::Lost) {
                result.events.emplace_back(TrackEvent::Recovered, t.id);
            }
            t.state = TrackletState::Confirmed;
            update_matched(t, d);
            result.records.push_back(make_record(t, d));
        }
    }

    // (4) Stage 3: tentative tracklets against leftover high-score boxes.
    {
        const auto trk_idx = stage_candidates(
            [](TrackletState s) { return s == TrackletState::Tentative; });
        const auto det_idx = unmatched_of(high);
        const auto [assignment, m] = run_stage(trk_idx, det_idx, config_.gate_tentative);
        for (const auto& [r, c] : assignment.pairs) {
            Tracklet& t = tracklets_[m.rows[r]];
            const Detection& d = detections[m.cols[c]];
            trk_matched[m.rows[r]] = 1;
            det_matched[m.cols[c]] = 1;
            t.hits += 1;
            update_matched(t, d);
            if (t.hits >= config_.min_hits) {
                t.state = TrackletState::Confirmed;
                result.events.emplace_back(TrackEvent::Confirmed, t.id);
                if (config_.backfill_on_confirm) {
                    for (auto& rec : t.pending) result.records.push_back(rec);
                }
                t.pending.clear();
                result.records.push_back(make_record(t, d));
            } else {
                t.pending.push_back(make_record(t, d));
            }
        }
    }

    // (5)+(7) Unmatched tracklets age; tentative ones are removed.
    age_unmatched(trk_matched, result);

    // (6) Leftover high-score boxes seed new tentative tracklets.
    for (std::size_t j : unmatched_of(high)) {
        const Detection& d = detections[j];
        Tracklet t;
        t.id = next_id_++;
        t.category = d.category;
        t.state = TrackletState::Tentative;
        t.hits = 1;
        t.history.emplace_back(d.embedding, d.score);
        t.aggregate = aggregate_embedding(t.history);
        t.last_box = d.box;
        t.last_frame = frame;
        result.events.emplace_back(TrackEvent::Created, t.id);
        if (t.hits >= config_.min_hits) {
            t.state = TrackletState::Confirmed;
            result.events.emplace_back(TrackEvent::Confirmed, t.id);
            result.records.push_back(make_record(t, d));
        } else {
            t.pending.push_back(make_record(t, d));
        }
        tracklets_.push_back(std::move(t));
    }

    remove_dead();
    return result;
}

std::vector<TrackRecord> run_sequence(
    const TrackerConfig& config,
    const std::map<std::int64_t, std::vector<Detection>>& frames) {
    Tracker tracker(config);
    std::vector<TrackRecord> records;
    for (const auto& [frame, dets] : frames) {
        FrameResult r = tracker.step(frame, dets);
        records.insert(records.end(), r.records.begin(), r.records.end());
    }
    std::sort(records.begin(), records.end(), [](const TrackRecord& a, const TrackRecord& b) {
        if (a.frame != b.frame) return a.frame < b.frame;
        return a.track_id < b.track_id;
    });
    return records;
}

}  // namespace apptrack
