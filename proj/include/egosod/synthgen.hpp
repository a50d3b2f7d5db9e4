#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egosod/cue.hpp"
#include "egosod/dataset.hpp"

namespace egosod {

/// One mixture component: cues are drawn independently with these probabilities.
struct Scenario {
    std::string name;
    double weight = 1.0;
    std::array<double, kCueCount> cue_probs{};
};

struct GeneratorConfig {
    std::string name = "synthetic";
    std::size_t n_segments = 100;
    std::vector<Scenario> scenarios;
    std::uint64_t seed = 0;
    double frame_rate_hz = 1.0;
    double segment_duration_s = 10.0;
    bool emit_transcripts = true;

    /// Throws ValidationError.
    void validate() const;
};

GeneratorConfig generator_config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const GeneratorConfig& config);

/// stad => osad and aud => osad; nothing else is touched.
CueVector consistency_repair(const CueVector& raw) noexcept;

/// Per-cue positive rates implied by the mixture, after repairs.
std::array<double, kCueCount> implied_prevalences(const GeneratorConfig& config);

/// Segment `index` of the dataset; depends only on (config, index).
LabeledSegment generate_segment(const GeneratorConfig& config, std::size_t index);

/// Deterministic in the config, including the seed.
DatasetManifest generate(const GeneratorConfig& config);

}  // namespace egosod
