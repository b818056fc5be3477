#include "apptrack/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace apptrack {

const std::vector<Category>& default_categories() {
    static const std::vector<Category> kDefaults = {
        {"pedestrian"}, {"rider"}, {"car"}, {"truck"},
        {"bus"}, {"train"}, {"motorcycle"}, {"bicycle"},
    };
    return kDefaults;
}

bool Box::valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) &&
           w >= 0.0 && h >= 0.0;
}

std::uint64_t RleMask::foreground() const {
    std::uint64_t fg = 0;
    for (std::size_t i = 1; i < counts.size(); i += 2) fg += counts[i];
    return fg;
}

bool RleMask::valid() const {
    if (height <= 0 || width <= 0) return false;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0 && i != 0) return false;
        total += counts[i];
    }
    return total == pixel_count();
}

double Embedding::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

bool Embedding::finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](double v) { return std::isfinite(v); });
}

const char* to_string(TrackletState s) {
    switch (s) {
        case TrackletState::Tentative: return "Tentative";
        case TrackletState::Confirmed: return "Confirmed";
        case TrackletState::Lost: return "Lost";
        case TrackletState::Removed: return "Removed";
    }
    return "?";
}

std::map<std::string, double> TrackerConfig::default_nms_thresholds() {
    return {
        {"pedestrian", 0.6}, {"rider", 0.1},      {"car", 0.5},  {"truck", 0.4},
        {"bus", 0.01},       {"train", 0.01},     {"motorcycle", 0.01},
        {"bicycle", 0.4},
    };
}

std::vector<ConfigError> validate_config(const TrackerConfig& config) {
    std::vector<ConfigError> errors;
    auto out_of_range = [&](const std::string& msg) {
        errors.push_back({ConfigError::Code::OutOfRange, msg});
    };

    if (!(config.low_thresh < config.high_thresh)) {
        errors.push_back({ConfigError::Code::ThresholdOrder,
                          "low_thresh must be strictly below high_thresh"});
    }
    if (!(config.low_thresh >= 0.0)) out_of_range("low_thresh must be >= 0");
    if (!(config.high_thresh <= 1.0)) out_of_range("high_thresh must be <= 1");
    if (config.tau < 1) out_of_range("tau must be >= 1");
    if (config.min_hits < 1) out_of_range("min_hits must be >= 1");
    if (config.max_lost < 0) out_of_range("max_lost must be >= 0");
    for (auto [gate, name] : {std::pair{config.gate_stage1, "gate_stage1"},
                              {config.gate_stage2, "gate_stage2"},
                              {config.gate_tentative, "gate_tentative"}}) {
        if (!(gate >= 0.0 && gate <= 2.0)) {
            out_of_range(std::string(name) + " must lie in [0, 2]");
        }
    }

    std::set<std::string> declared;
    for (const auto& cat : config.categories) {
        if (cat.name.empty()) out_of_range("category names must be non-empty");
        if (!declared.insert(cat.name).second) {
            out_of_range("duplicate category '" + cat.name + "'");
        }
    }
    for (const auto& [name, thresh] : config.nms_thresholds) {
        if (!declared.count(name)) {
            errors.push_back({ConfigError::Code::UnknownCategory,
                              "nms threshold for undeclared category '" + name + "'"});
        }
        if (!(thresh >= 0.0 && thresh <= 1.0)) {
            out_of_range("nms threshold for '" + name + "' must lie in [0, 1]");
        }
    }
    return errors;
}

}  // namespace apptrack
