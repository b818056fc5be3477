#include "apptrack/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <tuple>

#include <json.hpp>

namespace apptrack {

using nlohmann::json;

double round6(double v) {
    return std::round(v * 1e6) / 1e6;
}

namespace {

json box_to_json(const Box& b) {
    return json::array({round6(b.x), round6(b.y), round6(b.w), round6(b.h)});
}

Box box_from_json(const json& j, std::size_t line) {
    if (!j.is_array() || j.size() != 4) {
        throw ParseError("bbox must be [x, y, w, h]", line);
    }
    Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
    if (!b.valid()) throw ParseError("bbox has negative size or non-finite values", line);
    return b;
}

json mask_to_json(const RleMask& m) {
    return json{{"size", {m.height, m.width}}, {"counts", m.counts}};
}

RleMask mask_from_json(const json& j, std::size_t line) {
    RleMask m;
    if (!j.contains("size") || !j["size"].is_array() || j["size"].size() != 2) {
        throw ParseError("mask.size must be [height, width]", line);
    }
    m.height = j["size"][0].get<int>();
    m.width = j["size"][1].get<int>();
    if (!j.contains("counts") || !j["counts"].is_array()) {
        throw ParseError("mask.counts must be an array", line);
    }
    for (const auto& c : j["counts"]) {
        const auto v = c.get<std::int64_t>();
        if (v < 0) throw ParseError("mask run lengths must be >= 0", line);
        m.counts.push_back(static_cast<std::uint64_t>(v));
    }
    if (!m.valid()) {
        throw ParseError("mask runs are inconsistent with the canvas size", line);
    }
    return m;
}

std::string category_from_json(const json& j, std::size_t line) {
    const std::string name = j.get<std::string>();
    if (name.empty()) throw ParseError("category name must be non-empty", line);
    return name;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path + " for reading");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

json parse_line(const std::string& text, std::size_t line) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("malformed record", line);
    }
    return j;
}

// Box corners inside the mask canvas, with a small tolerance for clipping.
bool box_within_canvas(const Box& b, const RleMask& m) {
    return b.x >= -1e-6 && b.y >= -1e-6 && b.x + b.w <= m.width + 1e-6 &&
           b.y + b.h <= m.height + 1e-6;
}

}  // namespace

ParsedDetections parse_detections(const std::string& path) {
    std::ifstream in = open_input(path);
    ParsedDetections out;
    std::map<std::string, std::size_t> dims;  // sequence -> embedding dim
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty()) continue;
        const json j = parse_line(text, line);
        try {
            Detection d;
            d.sequence = j.at("sequence").get<std::string>();
            d.frame = j.at("frame").get<std::int64_t>();
            if (d.frame < 0) throw ParseError("negative frame index", line);
            d.category = Category{category_from_json(j.at("category"), line)};
            d.box = box_from_json(j.at("bbox"), line);
            d.score = j.at("score").get<double>();
            if (!(d.score >= 0.0 && d.score <= 1.0)) {
                throw ParseError("score must lie in [0, 1]", line);
            }
            for (const auto& v : j.at("embedding")) {
                d.embedding.values.push_back(v.get<double>());
            }
            if (d.embedding.dim() == 0 || !d.embedding.finite()) {
                throw ParseError("embedding must be non-empty and finite", line);
            }
            if (j.contains("mask")) {
                d.mask = mask_from_json(j["mask"], line);
                if (!box_within_canvas(d.box, *d.mask)) {
                    out.warnings.push_back("line " + std::to_string(line) +
                                           ": box extends outside the mask canvas");
                }
            }
            auto [it, inserted] = dims.try_emplace(d.sequence, d.embedding.dim());
            if (!inserted && it->second != d.embedding.dim()) {
                throw DimensionMismatch(
                    "embedding dim " + std::to_string(d.embedding.dim()) + " at line " +
                    std::to_string(line) + " differs from dim " +
                    std::to_string(it->second) + " in sequence '" + d.sequence + "'");
            }
            out.sequences[d.sequence][d.frame].push_back(std::move(d));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad detection record: ") + e.what(), line);
        }
    }
    return out;
}

void write_detections(const DetectionMap& sequences, const std::string& path) {
    std::ofstream out = open_output(path);
    for (const auto& [seq, frames] : sequences) {
        for (const auto& [frame, dets] : frames) {
            for (const Detection& d : dets) {
                json j{{"sequence", d.sequence}, {"frame", d.frame},
                       {"category", d.category.name}, {"bbox", box_to_json(d.box)},
                       {"score", round6(d.score)}};
                json emb = json::array();
                for (double v : d.embedding.values) emb.push_back(round6(v));
                j["embedding"] = std::move(emb);
                if (d.mask) j["mask"] = mask_to_json(*d.mask);
                out << j.dump() << '\n';
            }
        }
    }
}

GroundTruth parse_ground_truth(const std::string& path) {
    std::ifstream in = open_input(path);
    GroundTruth gt;
    std::set<std::tuple<std::string, std::int64_t, std::int64_t>> seen;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty()) continue;
        const json j = parse_line(text, line);
        try {
            GtRecord r;
            r.sequence = j.at("sequence").get<std::string>();
            r.frame = j.at("frame").get<std::int64_t>();
            if (r.frame < 0) throw ParseError("negative frame index", line);
            r.gt_id = j.at("id").get<std::int64_t>();
            r.category = Category{category_from_json(j.at("category"), line)};
            r.box = box_from_json(j.at("bbox"), line);
            if (j.contains("mask")) r.mask = mask_from_json(j["mask"], line);
            if (!seen.insert({r.sequence, r.frame, r.gt_id}).second) {
                throw ParseError("duplicate (sequence, frame, id) ground-truth record",
                                 line);
            }
            gt.records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad ground-truth record: ") + e.what(), line);
        }
    }
    return gt;
}

void write_ground_truth(const GroundTruth& gt, const std::string& path) {
    std::ofstream out = open_output(path);
    auto records = gt.records;
    std::sort(records.begin(), records.end(), [](const GtRecord& a, const GtRecord& b) {
        return std::tie(a.sequence, a.frame, a.gt_id) <
               std::tie(b.sequence, b.frame, b.gt_id);
    });
    for (const GtRecord& r : records) {
        json j{{"sequence", r.sequence}, {"frame", r.frame}, {"id", r.gt_id},
               {"category", r.category.name}, {"bbox", box_to_json(r.box)}};
        if (r.mask) j["mask"] = mask_to_json(*r.mask);
        out << j.dump() << '\n';
    }
}

std::vector<TrackRecord> parse_tracks(const std::string& path) {
    std::ifstream in = open_input(path);
    std::vector<TrackRecord> records;
    std::set<std::tuple<std::string, std::int64_t, std::int64_t>> seen;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.empty()) continue;
        const json j = parse_line(text, line);
        try {
            TrackRecord r;
            r.sequence = j.at("sequence").get<std::string>();
            r.frame = j.at("frame").get<std::int64_t>();
            if (r.frame < 0) throw ParseError("negative frame index", line);
            r.track_id = j.at("id").get<std::int64_t>();
            r.category = Category{category_from_json(j.at("category"), line)};
            r.box = box_from_json(j.at("bbox"), line);
            r.score = j.at("score").get<double>();
            if (j.contains("mask")) r.mask = mask_from_json(j["mask"], line);
            if (!seen.insert({r.sequence, r.frame, r.track_id}).second) {
                throw ParseError("duplicate (sequence, frame, id) track record", line);
            }
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad track record: ") + e.what(), line);
        }
    }
    return records;
}

void write_tracks(std::vector<TrackRecord> records, const std::string& path) {
    std::sort(records.begin(), records.end(),
              [](const TrackRecord& a, const TrackRecord& b) {
                  return std::tie(a.sequence, a.frame, a.track_id) <
                         std::tie(b.sequence, b.frame, b.track_id);
              });
    std::ofstream out = open_output(path);
    for (const TrackRecord& r : records) {
        json j{{"sequence", r.sequence}, {"frame", r.frame}, {"id", r.track_id},
               {"category", r.category.name}, {"bbox", box_to_json(r.box)},
               {"score", round6(r.score)}};
        if (r.mask) j["mask"] = mask_to_json(*r.mask);
        out << j.dump() << '\n';
    }
}

void write_mot_export(const std::vector<TrackRecord>& records, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
    // Stable category index: sorted names, 1-based.
    std::set<std::string> names;
    std::set<std::string> sequences;
    for (const auto& r : records) {
        names.insert(r.category.name);
        sequences.insert(r.sequence);
    }
    std::map<std::string, int> index;
    {
        std::ofstream table = open_output(dir + "/categories.txt");
        int next = 1;
        for (const auto& n : names) {
            index[n] = next;
            table << next << ' ' << n << '\n';
            ++next;
        }
    }
    for (const auto& seq : sequences) {
        auto rows = records;
        std::erase_if(rows, [&](const TrackRecord& r) { return r.sequence != seq; });
        std::sort(rows.begin(), rows.end(), [](const TrackRecord& a, const TrackRecord& b) {
            return std::tie(a.frame, a.track_id) < std::tie(b.frame, b.track_id);
        });
        std::ofstream out = open_output(dir + "/" + seq + ".txt");
        char buf[256];
        for (const TrackRecord& r : rows) {
            std::snprintf(buf, sizeof(buf), "%lld,%lld,%.6f,%.6f,%.6f,%.6f,%.6f,%d,-1,-1\n",
                          static_cast<long long>(r.frame), static_cast<long long>(r.track_id),
                          r.box.x, r.box.y, r.box.w, r.box.h, r.score,
                          index[r.category.name]);
            out << buf;
        }
    }
}

namespace {

void report_line(std::ostream& os, const std::string& key, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", round6(value));
    os << key << ' ' << buf << '\n';
}

}  // namespace

void write_report_text(const MetricsReport& report, std::ostream& os) {
    report_line(os, "mHOTA", report.m_hota);
    report_line(os, "mMOTA", report.m_mota);
    report_line(os, "mIDF1", report.m_idf1);
    report_line(os, "mDetA", report.m_det_a);
    report_line(os, "mAssA", report.m_ass_a);
    for (const auto& c : report.categories) {
        os << "[category " << c.category.name << "]\n";
        report_line(os, "HOTA", c.hota);
        report_line(os, "MOTA", c.mota);
        report_line(os, "IDF1", c.idf1);
        report_line(os, "DetA", c.det_a);
        report_line(os, "AssA", c.ass_a);
        os << "TP " << c.tp << '\n';
        os << "FN " << c.fn << '\n';
        os << "FP " << c.fp << '\n';
        os << "IDSW " << c.idsw << '\n';
        os << "GT " << c.gt_count << '\n';
    }
}

void write_report_json(const MetricsReport& report, const std::string& path) {
    json j{{"mHOTA", round6(report.m_hota)}, {"mMOTA", round6(report.m_mota)},
           {"mIDF1", round6(report.m_idf1)}, {"mDetA", round6(report.m_det_a)},
           {"mAssA", round6(report.m_ass_a)}};
    json cats = json::object();
    for (const auto& c : report.categories) {
        cats[c.category.name] = {{"HOTA", round6(c.hota)}, {"MOTA", round6(c.mota)},
                                 {"IDF1", round6(c.idf1)}, {"DetA", round6(c.det_a)},
                                 {"AssA", round6(c.ass_a)}, {"TP", c.tp},
                                 {"FN", c.fn},             {"FP", c.fp},
                                 {"IDSW", c.idsw},         {"GT", c.gt_count}};
    }
    j["categories"] = std::move(cats);
    std::ofstream out = open_output(path);
    out << j.dump(2) << '\n';
}

SynthConfig parse_synth_config(const std::string& path) {
    std::ifstream in = open_input(path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw ParseError("synth config must be a JSON object", 1);
    }
    SynthConfig c;
    try {
        c.seed = j.value("seed", c.seed);
        c.num_identities = j.value("num_identities", c.num_identities);
        c.num_frames = j.value("num_frames", c.num_frames);
        c.embed_dim = j.value("embed_dim", c.embed_dim);
        c.min_identity_separation =
            j.value("min_identity_separation", c.min_identity_separation);
        c.embed_noise_sigma = j.value("embed_noise_sigma", c.embed_noise_sigma);
        if (j.contains("canvas")) {
            c.canvas_width = j["canvas"][0].get<double>();
            c.canvas_height = j["canvas"][1].get<double>();
        }
        c.motion_step = j.value("motion_step", c.motion_step);
        c.miss_prob = j.value("miss_prob", c.miss_prob);
        c.low_score_prob = j.value("low_score_prob", c.low_score_prob);
        c.fp_rate = j.value("fp_rate", c.fp_rate);
        c.sequence = j.value("sequence", c.sequence);
        if (j.contains("occlusions")) {
            for (const auto& o : j["occlusions"]) {
                OcclusionWindow w;
                w.identity = o.at("identity").get<std::size_t>();
                w.start = o.at("start").get<std::int64_t>();
                w.duration = o.at("duration").get<std::int64_t>();
                c.occlusions.push_back(w);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad synth config: ") + e.what(), 1);
    }
    return c;
}

}  // namespace apptrack
