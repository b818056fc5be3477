#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "apptrack/io.hpp"

using namespace apptrack;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("apptrack-io-" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const char* name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("empty detection file parses to an empty map") {
    TempDir dir;
    write_file(dir.file("d.jsonl"), "");
    const auto parsed = parse_detections(dir.file("d.jsonl"));
    CHECK(parsed.sequences.empty());
}

TEST_CASE("a single well-formed line parses to one detection") {
    TempDir dir;
    write_file(dir.file("d.jsonl"),
               R"({"sequence":"a","frame":3,"category":"car","bbox":[1,2,3,4],)"
               R"("score":0.75,"embedding":[0.5,0.5]})"
               "\n");
    const auto parsed = parse_detections(dir.file("d.jsonl"));
    REQUIRE(parsed.sequences.count("a"));
    const auto& dets = parsed.sequences.at("a").at(3);
    REQUIRE(dets.size() == 1);
    CHECK(dets[0].score == doctest::Approx(0.75));
    CHECK(dets[0].embedding.dim() == 2);
}

TEST_CASE("mixed embedding dimensions in one sequence are rejected") {
    TempDir dir;
    write_file(dir.file("d.jsonl"),
               R"({"sequence":"a","frame":0,"category":"car","bbox":[0,0,1,1],"score":0.5,"embedding":[1,0,0]})"
               "\n"
               R"({"sequence":"a","frame":1,"category":"car","bbox":[0,0,1,1],"score":0.5,"embedding":[1,0]})"
               "\n");
    CHECK_THROWS_AS(parse_detections(dir.file("d.jsonl")), DimensionMismatch);
}

TEST_CASE("negative frames and out-of-range scores are parse errors") {
    TempDir dir;
    write_file(dir.file("neg.jsonl"),
               R"({"sequence":"a","frame":-1,"category":"car","bbox":[0,0,1,1],"score":0.5,"embedding":[1]})"
               "\n");
    CHECK_THROWS_AS(parse_detections(dir.file("neg.jsonl")), ParseError);
    write_file(dir.file("score.jsonl"),
               R"({"sequence":"a","frame":0,"category":"car","bbox":[0,0,1,1],"score":1.5,"embedding":[1]})"
               "\n");
    CHECK_THROWS_AS(parse_detections(dir.file("score.jsonl")), ParseError);
}

TEST_CASE("parse errors carry the line number") {
    TempDir dir;
    write_file(dir.file("d.jsonl"),
               R"({"sequence":"a","frame":0,"category":"car","bbox":[0,0,1,1],"score":0.5,"embedding":[1]})"
               "\n"
               "not json\n");
    try {
        parse_detections(dir.file("d.jsonl"));
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("box outside the mask canvas is a warning, not an error") {
    TempDir dir;
    write_file(dir.file("d.jsonl"),
               R"({"sequence":"a","frame":0,"category":"car","bbox":[0,0,50,50],)"
               R"("score":0.5,"embedding":[1],"mask":{"size":[8,8],"counts":[64]}})"
               "\n");
    const auto parsed = parse_detections(dir.file("d.jsonl"));
    CHECK(parsed.sequences.size() == 1);
    REQUIRE(parsed.warnings.size() == 1);
}

TEST_CASE("track records round-trip through write and parse") {
    TempDir dir;
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    std::vector<TrackRecord> records;
    for (int i = 0; i < 1000; ++i) {
        TrackRecord r;
        r.sequence = i % 3 == 0 ? "b" : "a";
        r.frame = i % 97;
        r.track_id = i;
        r.category = default_categories()[i % 8];
        r.box = {round6(u(rng)), round6(u(rng)), round6(u(rng)), round6(u(rng))};
        r.score = round6(u(rng) / 500.0);
        records.push_back(r);
    }
    write_tracks(records, dir.file("t.jsonl"));
    const auto parsed = parse_tracks(dir.file("t.jsonl"));
    REQUIRE(parsed.size() == records.size());
    // parsed output is sorted; compare as sets via re-write
    write_tracks(parsed, dir.file("t2.jsonl"));
    CHECK(read_file(dir.file("t.jsonl")) == read_file(dir.file("t2.jsonl")));
}

TEST_CASE("write_tracks sorts unsorted records") {
    TempDir dir;
    std::vector<TrackRecord> records;
    TrackRecord r;
    r.category = Category{"car"};
    r.sequence = "a";
    r.frame = 5;
    r.track_id = 2;
    records.push_back(r);
    r.frame = 1;
    r.track_id = 9;
    records.push_back(r);
    write_tracks(records, dir.file("t.jsonl"));
    const auto parsed = parse_tracks(dir.file("t.jsonl"));
    CHECK(parsed[0].frame == 1);
    CHECK(parsed[1].frame == 5);
}

TEST_CASE("duplicate ground-truth triples are rejected") {
    TempDir dir;
    write_file(dir.file("gt.jsonl"),
               R"({"sequence":"a","frame":0,"id":1,"category":"car","bbox":[0,0,1,1]})"
               "\n"
               R"({"sequence":"a","frame":0,"id":1,"category":"car","bbox":[5,5,1,1]})"
               "\n");
    CHECK_THROWS_AS(parse_ground_truth(dir.file("gt.jsonl")), ParseError);
}

TEST_CASE("ground truth with masks round-trips") {
    TempDir dir;
    GroundTruth gt;
    GtRecord g;
    g.sequence = "a";
    g.frame = 0;
    g.gt_id = 1;
    g.category = Category{"car"};
    g.box = {0, 0, 4, 4};
    RleMask m;
    m.height = 4;
    m.width = 4;
    m.counts = {4, 8, 4};
    g.mask = m;
    gt.records.push_back(g);
    write_ground_truth(gt, dir.file("gt.jsonl"));
    const auto parsed = parse_ground_truth(dir.file("gt.jsonl"));
    REQUIRE(parsed.records.size() == 1);
    REQUIRE(parsed.records[0].mask.has_value());
    CHECK(parsed.records[0].mask->counts == m.counts);
}

TEST_CASE("missing files raise IoError") {
    CHECK_THROWS_AS(parse_detections("/nonexistent/path.jsonl"), IoError);
    CHECK_THROWS_AS(parse_ground_truth("/nonexistent/path.jsonl"), IoError);
}

TEST_CASE("detection files serialize deterministically") {
    TempDir dir;
    DetectionMap m;
    Detection d;
    d.sequence = "a";
    d.frame = 0;
    d.category = Category{"car"};
    d.box = {1.0 / 3.0, 2.0 / 3.0, 10, 10};
    d.score = 0.123456789;
    d.embedding.values = {0.333333333, -0.666666666};
    m["a"][0] = {d};
    write_detections(m, dir.file("a.jsonl"));
    write_detections(m, dir.file("b.jsonl"));
    const std::string a = read_file(dir.file("a.jsonl"));
    CHECK(a == read_file(dir.file("b.jsonl")));
    CHECK(a.find("0.333333") != std::string::npos);  // 6-decimal rounding applied
}

TEST_CASE("mot export writes one file per sequence plus a category table") {
    TempDir dir;
    std::vector<TrackRecord> records;
    TrackRecord r;
    r.sequence = "clip1";
    r.frame = 1;
    r.track_id = 3;
    r.category = Category{"car"};
    r.box = {10, 20, 30, 40};
    r.score = 0.9;
    records.push_back(r);
    const std::string mot = dir.file("mot");
    fs::create_directories(mot);
    write_mot_export(records, mot);
    const std::string row = read_file(mot + "/clip1.txt");
    CHECK(row == "1,3,10.000000,20.000000,30.000000,40.000000,0.900000,1,-1,-1\n");
    CHECK(read_file(mot + "/categories.txt") == "1 car\n");
}

TEST_CASE("synth config parses with defaults and overrides") {
    TempDir dir;
    write_file(dir.file("c.json"),
               R"({"seed": 5, "num_identities": 3, "occlusions":)"
               R"( [{"identity": 1, "start": 10, "duration": 4}]})");
    const SynthConfig c = parse_synth_config(dir.file("c.json"));
    CHECK(c.seed == 5);
    CHECK(c.num_identities == 3);
    CHECK(c.embed_dim == 128);  // default
    REQUIRE(c.occlusions.size() == 1);
    CHECK(c.occlusions[0].identity == 1);
}

TEST_SUITE_END();
