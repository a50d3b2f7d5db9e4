#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "egosod/cue.hpp"
#include "egosod/dataset.hpp"
#include "egosod/prompt.hpp"

namespace egosod {

/// One backend answer to one question.
struct CueAnswer {
    bool value = false;
    std::optional<double> confidence;
    std::optional<std::string> raw;
    /// The raw text had no verdict; `value` was defaulted to false.
    bool parse_failed = false;
};

/// Per-cue outputs of a backend for one segment. Unqueried cues have no value.
struct CuePredictions {
    std::string segment_id;
    std::string backend_id;
    std::array<std::optional<bool>, kCueCount> values{};
    std::array<std::optional<double>, kCueCount> confidence{};
    std::array<std::optional<std::string>, kCueCount> raw_responses{};
    CueSet parse_failed;

    void set(Cue cue, const CueAnswer& answer);
    const std::optional<bool>& value(Cue cue) const { return values[index_of(cue)]; }
    CueSet queried() const noexcept;
    int parse_failure_count() const noexcept { return parse_failed.size(); }
    /// All eight values, or nullopt if any cue is missing.
    std::optional<CueVector> complete() const;
};

void to_json(nlohmann::json& j, const CuePredictions& p);
void from_json(const nlohmann::json& j, CuePredictions& p);

enum class BackendKind { oracle, noisy, remote, replay };

std::string_view to_string(BackendKind kind) noexcept;
std::optional<BackendKind> parse_backend_kind(std::string_view text) noexcept;

/// Independent asymmetric label flips per cue.
struct NoisySpec {
    std::array<double, kCueCount> tpr{};
    std::array<double, kCueCount> tnr{};
    std::uint64_t seed = 0;

    static NoisySpec uniform(double tpr, double tnr, std::uint64_t seed);
};

struct RemoteSpec {
    std::string endpoint;  // http(s)://host[:port]/path
    std::string model;
    std::chrono::milliseconds timeout{30'000};
    int max_retries = 3;
    int max_concurrent_requests = 4;
    std::filesystem::path cache_dir;
    /// Name of the environment variable holding a bearer token; empty for none.
    std::string api_key_env;
    std::chrono::milliseconds backoff_base{500};
    /// Embed local media files as base64 instead of sending references.
    bool inline_media = false;
    /// Prompt template directory; empty uses the compiled-in templates.
    std::filesystem::path prompt_dir;
};

/// Replay uses the `remote` block too: model and cache_dir identify cached responses.
struct BackendSpec {
    BackendKind kind = BackendKind::oracle;
    std::optional<NoisySpec> noisy;
    std::optional<RemoteSpec> remote;

    /// Throws ValidationError unless exactly the blocks for `kind` are present and in range.
    void validate() const;
    /// Stable identifier recorded in predictions and run metadata.
    std::string id() const;
};

void to_json(nlohmann::json& j, const BackendSpec& spec);
/// `default_seed` fills a noisy block without an explicit seed.
BackendSpec backend_spec_from_json(const nlohmann::json& j, std::uint64_t default_seed = 0);

/// Source of cue and final-question answers. Implementations are safe to call concurrently.
class CueBackend {
public:
    virtual ~CueBackend() = default;

    virtual std::string id() const = 0;

    virtual CueAnswer answer_cue(const LabeledSegment& segment, Cue cue, const ModalityConfig& modality) = 0;

    /// The direct interaction question. `prior` is required for graph-form variants.
    virtual CueAnswer answer_final(const LabeledSegment& segment, const ModalityConfig& modality,
                                   const PromptVariant& variant, const std::optional<CueVector>& prior) = 0;
};

/// Returns the consensus labels verbatim.
class OracleBackend final : public CueBackend {
public:
    std::string id() const override { return "oracle"; }
    CueAnswer answer_cue(const LabeledSegment& segment, Cue cue, const ModalityConfig& modality) override;
    CueAnswer answer_final(const LabeledSegment& segment, const ModalityConfig& modality,
                           const PromptVariant& variant, const std::optional<CueVector>& prior) override;
};

/// Flips consensus labels with a deterministic draw keyed by (seed, segment_id, cue).
class NoisyBackend final : public CueBackend {
public:
    explicit NoisyBackend(NoisySpec spec);

    std::string id() const override;
    CueAnswer answer_cue(const LabeledSegment& segment, Cue cue, const ModalityConfig& modality) override;
    /// The interaction verdict implied by the noisy AUD and UDSD answers.
    CueAnswer answer_final(const LabeledSegment& segment, const ModalityConfig& modality,
                           const PromptVariant& variant, const std::optional<CueVector>& prior) override;

    bool noisy_value(const LabeledSegment& segment, Cue cue) const;

private:
    NoisySpec spec_;
};

std::unique_ptr<CueBackend> make_backend(const BackendSpec& spec);

/// Queries `requested` cues one request at a time.
CuePredictions predict(CueBackend& backend, const LabeledSegment& segment, CueSet requested,
                       const ModalityConfig& modality);

}  // namespace egosod
