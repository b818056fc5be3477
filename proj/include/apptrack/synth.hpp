#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "apptrack/metrics.hpp"
#include "apptrack/types.hpp"

namespace apptrack {

// Deterministic random source. The engine is std::mt19937_64 (whose output
// sequence is fixed by the standard) and all distributions are derived here
// explicitly — uniform from the top 53 bits, normal via Box-Muller, Poisson
// via Knuth's product method — so identical seeds give identical streams on
// every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform();  // [0, 1)
    double uniform(double lo, double hi);
    double normal();  // standard normal
    std::int64_t poisson(double lambda);
    std::size_t index(std::size_t bound);  // [0, bound)

private:
    std::mt19937_64 eng_;
};

struct OcclusionWindow {
    std::size_t identity = 0;  // 0-based identity index
    std::int64_t start = 0;
    std::int64_t duration = 0;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    int num_identities = 10;
    int num_frames = 100;
    int embed_dim = 128;
    double min_identity_separation = 0.5;
    double embed_noise_sigma = 0.05;
    double canvas_width = 1920.0;
    double canvas_height = 1080.0;
    double motion_step = 8.0;  // random-walk step scale, pixels per frame
    double miss_prob = 0.0;
    double low_score_prob = 0.0;
    double fp_rate = 0.0;  // expected false positives per frame
    std::vector<OcclusionWindow> occlusions;
    std::string sequence = "synth";
};

// Throws TrackError listing the problem when the config is out of domain.
void validate_synth_config(const SynthConfig& config);

// Unit-norm identity latents with pairwise cosine distance at or above
// config.min_identity_separation. Throws SeparationInfeasible when rejection
// sampling exhausts its attempt budget.
std::vector<Embedding> sample_identities(const SynthConfig& config, Rng& rng);

struct SynthResult {
    std::map<std::int64_t, std::vector<Detection>> frames;  // every frame index present
    GroundTruth ground_truth;
    std::vector<Embedding> latents;
    std::int64_t embedding_redraws = 0;  // nearest-latent violations repaired
    std::int64_t false_positives = 0;
};

// Generates one sequence: identities follow bounded random walks; visible
// identities produce ground truth, and detections unless missed or occluded;
// detection scores draw from the high band [0.84, 1] or, with
// low_score_prob, the low band [0.3, 0.84); embeddings are noised latents
// kept nearest to their own identity; false positives carry fresh random
// embeddings and high-band scores.
SynthResult generate(const SynthConfig& config);

}  // namespace apptrack
