// apptrack command line: nms, track, eval, synth.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "apptrack/geometry.hpp"
#include "apptrack/io.hpp"
#include "apptrack/metrics.hpp"
#include "apptrack/synth.hpp"
#include "apptrack/tracker.hpp"

namespace {

using namespace apptrack;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

// "CATEGORY=VALUE" pairs from repeated --nms-thresh flags, merged over the
// defaults.
std::map<std::string, double> merge_nms_thresholds(const std::vector<std::string>& specs) {
    auto thresholds = TrackerConfig::default_nms_thresholds();
    for (const auto& spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw CLI::ValidationError("--nms-thresh", "expected CATEGORY=VALUE");
        }
        const std::string name = spec.substr(0, eq);
        double value = 0.0;
        try {
            value = std::stod(spec.substr(eq + 1));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--nms-thresh", "bad value in '" + spec + "'");
        }
        thresholds[name] = value;
    }
    return thresholds;
}

int thread_count(std::size_t jobs) {
    unsigned n = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("APPTRACK_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) n = static_cast<unsigned>(v);
    }
    if (n == 0) n = 1;
    return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

int run_nms(const std::string& input, const std::string& output,
            const std::vector<std::string>& thresh_specs) {
    const auto thresholds = merge_nms_thresholds(thresh_specs);
    ParsedDetections parsed = parse_detections(input);
    print_warnings(parsed.warnings);
    for (auto& [seq, frames] : parsed.sequences) {
        for (auto& [frame, dets] : frames) {
            dets = multiclass_nms(dets, thresholds);
        }
    }
    write_detections(parsed.sequences, output);
    return kExitOk;
}

int run_track(const std::string& input, const std::string& output,
              const std::string& mot_dir, TrackerConfig config, bool apply_nms) {
    // An --nms-thresh flag for a new category declares it.
    for (const auto& [name, thresh] : config.nms_thresholds) {
        const bool known =
            std::any_of(config.categories.begin(), config.categories.end(),
                        [&](const Category& c) { return c.name == name; });
        if (!known) config.categories.push_back(Category{name});
    }
    const auto errors = validate_config(config);
    if (!errors.empty()) {
        for (const auto& e : errors) std::cerr << "error: " << e.message << '\n';
        return kExitUsage;
    }
    ParsedDetections parsed = parse_detections(input);
    print_warnings(parsed.warnings);

    std::vector<std::pair<std::string, const std::map<std::int64_t, std::vector<Detection>>*>>
        jobs;
    for (const auto& [seq, frames] : parsed.sequences) jobs.emplace_back(seq, &frames);

    std::vector<std::vector<TrackRecord>> per_sequence(jobs.size());
    const int workers = thread_count(jobs.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(jobs.size());
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) return;
                try {
                    if (apply_nms) {
                        auto frames = *jobs[i].second;
                        for (auto& [frame, dets] : frames) {
                            dets = multiclass_nms(dets, config.nms_thresholds);
                        }
                        per_sequence[i] = run_sequence(config, frames);
                    } else {
                        per_sequence[i] = run_sequence(config, *jobs[i].second);
                    }
                } catch (...) {
                    failures[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }

    std::vector<TrackRecord> records;
    for (auto& rs : per_sequence) {
        records.insert(records.end(), rs.begin(), rs.end());
    }
    write_tracks(records, output);
    if (!mot_dir.empty()) write_mot_export(records, mot_dir);
    return kExitOk;
}

int run_eval(const std::string& gt_path, const std::string& pred_path,
             const std::string& iou, double alpha, const std::string& report_path) {
    const GroundTruth gt = parse_ground_truth(gt_path);
    const std::vector<TrackRecord> pred = parse_tracks(pred_path);
    const IouKind kind = iou == "mask" ? IouKind::Mask : IouKind::Box;
    const MetricsReport report = evaluate(gt, pred, kind, alpha);
    write_report_text(report, std::cout);
    if (!report_path.empty()) write_report_json(report, report_path);
    return kExitOk;
}

int run_synth(const std::string& config_path, std::int64_t seed_override,
              const std::string& det_out, const std::string& gt_out) {
    SynthConfig config = parse_synth_config(config_path);
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);
    const SynthResult result = generate(config);

    DetectionMap sequences;
    auto& frames = sequences[config.sequence];
    for (const auto& [frame, dets] : result.frames) {
        if (!dets.empty()) frames[frame] = dets;
    }
    write_detections(sequences, det_out);
    write_ground_truth(result.ground_truth, gt_out);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"appearance-only multi-object tracking toolkit"};
    app.require_subcommand(1);

    // nms
    auto* nms = app.add_subcommand("nms", "apply per-category NMS to a detection file");
    std::string nms_input, nms_output;
    std::vector<std::string> nms_specs;
    nms->add_option("input", nms_input, "detection file")->required();
    nms->add_option("-o,--output", nms_output, "output detection file")->required();
    nms->add_option("--nms-thresh", nms_specs, "CATEGORY=VALUE override (repeatable)");

    // track
    auto* track = app.add_subcommand("track", "run the tracker over a detection file");
    std::string track_input, track_output, mot_dir;
    TrackerConfig config;
    bool apply_nms = false;
    std::vector<std::string> track_nms_specs;
    track->add_option("input", track_input, "detection file")->required();
    track->add_option("-o,--output", track_output, "output track file")->required();
    track->add_option("--high-thresh", config.high_thresh, "high score threshold");
    track->add_option("--low-thresh", config.low_thresh, "low score threshold");
    track->add_option("--tau", config.tau, "embedding history window");
    track->add_option("--gate1", config.gate_stage1, "stage-1 cosine distance gate");
    track->add_option("--gate2", config.gate_stage2, "stage-2 cosine distance gate");
    track->add_option("--gate-tentative", config.gate_tentative, "tentative-stage gate");
    track->add_option("--min-hits", config.min_hits, "consecutive frames to confirm");
    track->add_option("--max-lost", config.max_lost, "frames a lost track is kept");
    track->add_flag("--backfill", config.backfill_on_confirm,
                    "emit buffered tentative frames on confirmation");
    track->add_flag("--apply-nms", apply_nms, "run NMS before tracking");
    track->add_option("--nms-thresh", track_nms_specs, "CATEGORY=VALUE override");
    track->add_option("--mot-dir", mot_dir, "also export 10-column MOT files here");

    // eval
    auto* eval = app.add_subcommand("eval", "score a track file against ground truth");
    std::string gt_path, pred_path, iou = "box", report_path;
    double alpha = 0.5;
    eval->add_option("--gt", gt_path, "ground-truth file")->required();
    eval->add_option("--pred", pred_path, "track file")->required();
    eval->add_option("--iou", iou, "box or mask")
        ->check(CLI::IsMember({"box", "mask"}));
    eval->add_option("--alpha", alpha, "IoU threshold for MOTA/IDF1");
    eval->add_option("--report", report_path, "write a JSON report here");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
    std::string synth_config_path, det_out = "detections.jsonl", gt_out = "gt.jsonl";
    std::int64_t seed_override = -1;
    synth->add_option("config", synth_config_path, "synth config JSON")->required();
    synth->add_option("--seed", seed_override, "override the config seed");
    synth->add_option("--det-out", det_out, "detections output path");
    synth->add_option("--gt-out", gt_out, "ground-truth output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (nms->parsed()) return run_nms(nms_input, nms_output, nms_specs);
        if (track->parsed()) {
            config.nms_thresholds = merge_nms_thresholds(track_nms_specs);
            return run_track(track_input, track_output, mot_dir, config, apply_nms);
        }
        if (eval->parsed()) return run_eval(gt_path, pred_path, iou, alpha, report_path);
        if (synth->parsed()) {
            return run_synth(synth_config_path, seed_override, det_out, gt_out);
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const DimensionMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const MissingThreshold& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const SeparationInfeasible& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const MissingMask& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const CanvasMismatch& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const TrackError& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}
