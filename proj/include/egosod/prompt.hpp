#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "egosod/cue.hpp"
#include "egosod/dataset.hpp"

namespace egosod {

enum class ModalityMode { video_only, audio_video, audio_video_text, audio_video_text_conv };

std::string_view to_string(ModalityMode mode) noexcept;
std::optional<ModalityMode> parse_modality_mode(std::string_view text) noexcept;

struct ModalityConfig {
    ModalityMode mode = ModalityMode::audio_video;
    int frame_budget = 10;

    bool has_audio() const noexcept { return mode != ModalityMode::video_only; }
    bool has_text() const noexcept {
        return mode == ModalityMode::audio_video_text || mode == ModalityMode::audio_video_text_conv;
    }

    bool operator==(const ModalityConfig&) const = default;
};

/// How the final interaction question is phrased.
struct PromptVariant {
    enum class Base { automatic, graph };

    Base base = Base::graph;
    bool dep = false;    // lean on the supplied cue answers
    bool think = false;  // ask for the reasoning chain and the cues used
    bool hier = false;   // ask for environment-to-attention reasoning order

    /// Throws ValidationError for combinations without meaning (dep without graph).
    void validate() const;
    /// "auto", "graph-dep", "graph-think-h", ...
    std::string label() const;
    /// Inverse of label(); throws ParseError.
    static PromptVariant parse(std::string_view label);

    bool operator==(const PromptVariant&) const = default;
};

/// The question sent for the overall interaction verdict.
struct FinalDecision {
    bool operator==(const FinalDecision&) const = default;
};

using QueryTarget = std::variant<Cue, FinalDecision>;

/// "OSAD" ... "SFD" or "FINAL_DECISION".
std::string query_name(const QueryTarget& target);

/// Template texts with {CUE_QUESTION}, {CUE_QUESTIONS}, {TRIPLETS} and {TRANSCRIPT} placeholders.
struct PromptTemplates {
    std::string version;
    std::string cue;
    std::string final_auto;
    std::string final_graph;
    std::string transcript;
    std::string dep;
    std::string think;
    std::string hier;

    /// The templates under prompts/ in the source tree, compiled in.
    static const PromptTemplates& builtin();
    /// Reads a directory with the same file names as prompts/. Throws IoError.
    static PromptTemplates load(const std::filesystem::path& dir);
};

struct MediaItem {
    enum class Kind { image, audio };

    Kind kind = Kind::image;
    std::string reference;

    bool operator==(const MediaItem&) const = default;
};

struct Prompt {
    std::string text;
    std::vector<MediaItem> media;
};

/// Even sampling over [0, frame_count): index floor(i * (N - 1) / (k - 1)), always including frame 0.
std::vector<std::size_t> sample_frame_indices(std::size_t frame_count, std::size_t budget);

/// conv=false: texts joined by single spaces. conv=true: "Me: ...", "Speaker n: ..." lines.
std::string format_transcript(const std::vector<Utterance>& transcript, bool conv);

/// Renders the question text and the ordered media attachments for one query.
/// For the final question in graph form, `prior` must hold all eight cue values.
Prompt build_prompt(const Segment& segment, const QueryTarget& target, const ModalityConfig& modality,
                    const PromptVariant& variant, const std::optional<CueVector>& prior = std::nullopt,
                    const PromptTemplates& templates = PromptTemplates::builtin());

/// Extracts a yes/no verdict from free-form model output. Throws ParseError
/// carrying the raw text when no verdict is present.
bool parse_answer(std::string_view raw);

/// Hex SHA-256 over a canonical serialization of the inputs. `context` carries
/// anything else the prompt depends on (template version, prior cue values).
std::string cache_key(std::string_view segment_id, const QueryTarget& target, const ModalityConfig& modality,
                      const PromptVariant& variant, std::string_view model, std::string_view context = {});

void to_json(nlohmann::json& j, const ModalityConfig& m);
void from_json(const nlohmann::json& j, ModalityConfig& m);
void to_json(nlohmann::json& j, const PromptVariant& v);
void from_json(const nlohmann::json& j, PromptVariant& v);

}  // namespace egosod
