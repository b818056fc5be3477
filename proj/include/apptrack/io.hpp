#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "apptrack/metrics.hpp"
#include "apptrack/synth.hpp"
#include "apptrack/types.hpp"

namespace apptrack {

// All file formats are JSON Lines: one object per line, keys sorted, reals
// rounded to 6 decimal places so identical data always serializes to
// identical bytes.

using DetectionMap = std::map<std::string, std::map<std::int64_t, std::vector<Detection>>>;

struct ParsedDetections {
    DetectionMap sequences;
    std::vector<std::string> warnings;  // non-fatal issues, e.g. box outside mask canvas
};

// Parses detection lines, grouping by sequence and frame. Embedding
// dimension must be uniform within a sequence (DimensionMismatch otherwise).
ParsedDetections parse_detections(const std::string& path);

void write_detections(const DetectionMap& sequences, const std::string& path);

// Ground-truth lines; duplicate (sequence, frame, id) triples are rejected.
GroundTruth parse_ground_truth(const std::string& path);
void write_ground_truth(const GroundTruth& gt, const std::string& path);

// Track records, written sorted by (sequence, frame, track id).
std::vector<TrackRecord> parse_tracks(const std::string& path);
void write_tracks(std::vector<TrackRecord> records, const std::string& path);

// Conventional 10-column MOT rows, one file per sequence inside `dir`, plus
// a categories.txt index table.
void write_mot_export(const std::vector<TrackRecord>& records, const std::string& dir);

void write_report_text(const MetricsReport& report, std::ostream& os);
void write_report_json(const MetricsReport& report, const std::string& path);

SynthConfig parse_synth_config(const std::string& path);

// Nearest multiple of 1e-6; the value every serialized real passes through.
double round6(double v);

}  // namespace apptrack
