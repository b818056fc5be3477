#include "apptrack/synth.hpp"

#include <algorithm>
#include <cmath>

#include "apptrack/association.hpp"

namespace apptrack {

double Rng::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    // Box-Muller; u1 shifted away from zero so the log is finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::int64_t Rng::poisson(double lambda) {
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform();
    } while (p > limit);
    return k - 1;
}

std::size_t Rng::index(std::size_t bound) {
    const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(bound));
    return std::min(i, bound - 1);
}

void validate_synth_config(const SynthConfig& config) {
    auto fail = [](const std::string& msg) { throw TrackError("synth config: " + msg); };
    if (config.num_identities < 1) fail("num_identities must be >= 1");
    if (config.num_frames < 1) fail("num_frames must be >= 1");
    if (config.embed_dim < 1) fail("embed_dim must be >= 1");
    if (!(config.min_identity_separation > 0.0 && config.min_identity_separation < 2.0)) {
        fail("min_identity_separation must lie in (0, 2)");
    }
    for (auto [p, name] : {std::pair{config.miss_prob, "miss_prob"},
                           {config.low_score_prob, "low_score_prob"}}) {
        if (!(p >= 0.0 && p <= 1.0)) fail(std::string(name) + " must lie in [0, 1]");
    }
    if (config.embed_noise_sigma < 0.0) fail("embed_noise_sigma must be >= 0");
    if (config.fp_rate < 0.0) fail("fp_rate must be >= 0");
    if (config.canvas_width <= 0.0 || config.canvas_height <= 0.0) {
        fail("canvas must be positive");
    }
    for (const auto& occ : config.occlusions) {
        if (occ.identity >= static_cast<std::size_t>(config.num_identities)) {
            fail("occlusion references identity " + std::to_string(occ.identity) +
                 " beyond num_identities");
        }
        if (occ.duration < 0) fail("occlusion duration must be >= 0");
    }
}

namespace {

Embedding random_unit(Rng& rng, int dim) {
    Embedding e;
    e.values.resize(dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (int i = 0; i < dim; ++i) {
            e.values[i] = rng.normal();
            norm += e.values[i] * e.values[i];
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : e.values) v /= norm;
    return e;
}

constexpr double kHighBandLo = 0.84;
constexpr double kLowBandLo = 0.3;

}  // namespace

std::vector<Embedding> sample_identities(const SynthConfig& config, Rng& rng) {
    constexpr int kAttemptsPerIdentity = 10000;
    std::vector<Embedding> latents;
    latents.reserve(config.num_identities);
    for (int i = 0; i < config.num_identities; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kAttemptsPerIdentity && !placed; ++attempt) {
            Embedding candidate = random_unit(rng, config.embed_dim);
            placed = std::all_of(latents.begin(), latents.end(), [&](const Embedding& l) {
                return cosine_distance(candidate, l) >= config.min_identity_separation;
            });
            if (placed) latents.push_back(std::move(candidate));
        }
        if (!placed) {
            throw SeparationInfeasible(
                "could not place identity " + std::to_string(i) + " of " +
                std::to_string(config.num_identities) + " at separation " +
                std::to_string(config.min_identity_separation) + " in dimension " +
                std::to_string(config.embed_dim));
        }
    }
    return latents;
}

SynthResult generate(const SynthConfig& config) {
    validate_synth_config(config);
    Rng rng(config.seed);

    SynthResult result;
    result.latents = sample_identities(config, rng);

    const auto& cats = default_categories();
    std::vector<Category> category(config.num_identities);
    std::vector<Box> box(config.num_identities);
    for (int i = 0; i < config.num_identities; ++i) {
        category[i] = cats[i % cats.size()];
        Box b;
        b.w = rng.uniform(40.0, 120.0);
        b.h = rng.uniform(40.0, 120.0);
        b.w = std::min(b.w, config.canvas_width);
        b.h = std::min(b.h, config.canvas_height);
        b.x = rng.uniform(0.0, config.canvas_width - b.w);
        b.y = rng.uniform(0.0, config.canvas_height - b.h);
        box[i] = b;
    }

    auto occluded = [&](int identity, std::int64_t frame) {
        for (const auto& occ : config.occlusions) {
            if (static_cast<int>(occ.identity) == identity && frame >= occ.start &&
                frame < occ.start + occ.duration) {
                return true;
            }
        }
        return false;
    };

    auto observe = [&](int identity) {
        // Noised latent, redrawn until its nearest latent is its own
        // identity so the sequence stays identity-separable.
        constexpr int kMaxRedraws = 1000;
        for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
            Embedding e = result.latents[identity];
            double norm = 0.0;
            for (double& v : e.values) {
                v += rng.normal() * config.embed_noise_sigma;
                norm += v * v;
            }
            if (norm == 0.0) continue;
            norm = std::sqrt(norm);
            for (double& v : e.values) v /= norm;

            int nearest = 0;
            double best = cosine_distance(e, result.latents[0]);
            for (int k = 1; k < config.num_identities; ++k) {
                const double d = cosine_distance(e, result.latents[k]);
                if (d < best) {
                    best = d;
                    nearest = k;
                }
            }
            if (nearest == identity) return e;
            ++result.embedding_redraws;
        }
        throw TrackError("embedding redraw budget exhausted for identity " +
                         std::to_string(identity));
    };

    for (std::int64_t frame = 0; frame < config.num_frames; ++frame) {
        auto& dets = result.frames[frame];  // creates the entry even when empty
        for (int i = 0; i < config.num_identities; ++i) {
            // Bounded random walk.
            Box& b = box[i];
            b.x = std::clamp(b.x + rng.normal() * config.motion_step, 0.0,
                             config.canvas_width - b.w);
            b.y = std::clamp(b.y + rng.normal() * config.motion_step, 0.0,
                             config.canvas_height - b.h);

            if (occluded(i, frame)) continue;

            GtRecord gt;
            gt.sequence = config.sequence;
            gt.frame = frame;
            gt.gt_id = i + 1;
            gt.category = category[i];
            gt.box = b;
            result.ground_truth.records.push_back(gt);

            if (rng.uniform() < config.miss_prob) continue;

            Detection d;
            d.sequence = config.sequence;
            d.frame = frame;
            d.category = category[i];
            d.box = b;
            d.score = rng.uniform() < config.low_score_prob
                          ? rng.uniform(kLowBandLo, kHighBandLo)
                          : rng.uniform(kHighBandLo, 1.0);
            d.embedding = observe(i);
            dets.push_back(std::move(d));
        }

        const std::int64_t n_fp = rng.poisson(config.fp_rate);
        for (std::int64_t k = 0; k < n_fp; ++k) {
            Detection d;
            d.sequence = config.sequence;
            d.frame = frame;
            d.category = cats[rng.index(cats.size())];
            Box b;
            b.w = std::min(rng.uniform(40.0, 120.0), config.canvas_width);
            b.h = std::min(rng.uniform(40.0, 120.0), config.canvas_height);
            b.x = rng.uniform(0.0, config.canvas_width - b.w);
            b.y = rng.uniform(0.0, config.canvas_height - b.h);
            d.box = b;
            d.score = rng.uniform(kHighBandLo, 1.0);
            d.embedding = random_unit(rng, config.embed_dim);
            dets.push_back(std::move(d));
            ++result.false_positives;
        }
    }
    return result;
}

}  // namespace apptrack
