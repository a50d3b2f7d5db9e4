#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "egosod/cue.hpp"

namespace egosod {

/// Questions asked per segment: one per cue plus the ground-truth interaction question.
inline constexpr std::size_t kQuestionsPerSegment = kCueCount + 1;

class SpeakerTag {
public:
    enum class Kind { wearer, other, unknown };

    static SpeakerTag wearer() noexcept { return SpeakerTag(Kind::wearer, 0); }
    static SpeakerTag other(int id) noexcept { return SpeakerTag(Kind::other, id); }
    static SpeakerTag unknown() noexcept { return SpeakerTag(Kind::unknown, 0); }

    /// Parses "WEARER", "OTHER:<n>" or "UNKNOWN". Throws ParseError.
    static SpeakerTag parse(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    /// Speaker number; only meaningful for Kind::other.
    int id() const noexcept { return id_; }

    std::string to_string() const;

    bool operator==(const SpeakerTag&) const = default;

private:
    SpeakerTag(Kind kind, int id) : kind_(kind), id_(id) {}

    Kind kind_ = Kind::unknown;
    int id_ = 0;
};

struct Utterance {
    SpeakerTag speaker = SpeakerTag::unknown();
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;
    /// Laughter, sighs and similar vocalizations; the only utterances allowed empty text.
    bool nonverbal = false;

    bool operator==(const Utterance&) const = default;
};

/// One fixed-length window of an egocentric clip. Media references are opaque.
struct Segment {
    std::string segment_id;
    std::string clip_id;
    double start_s = 0.0;
    double duration_s = 10.0;
    std::vector<double> frame_times;
    std::vector<std::string> frame_refs;
    std::optional<std::string> audio_ref;
    std::optional<std::vector<Utterance>> transcript;

    bool operator==(const Segment&) const = default;
};

enum class Confidence { low, high };

struct AnnotationRecord {
    std::string segment_id;
    std::string annotator_id;
    CueVector cues;
    std::array<Confidence, kCueCount> confidence{};
};

enum class Provenance { consensus, synthetic, imported };

std::string_view to_string(Provenance p) noexcept;
std::optional<Provenance> parse_provenance(std::string_view text) noexcept;

struct LabeledSegment {
    Segment segment;
    CueVector consensus;
    bool ground_truth_interaction = false;
    Provenance provenance = Provenance::imported;

    bool operator==(const LabeledSegment&) const = default;
};

/// A raw segment whose consensus failed on at least one cue.
struct DiscardedSegment {
    std::string segment_id;
    CueSet ambiguous_cues;
};

struct DatasetManifest {
    std::string name;
    double frame_rate_hz = 1.0;
    double segment_duration_s = 10.0;
    std::vector<LabeledSegment> segments;
    std::vector<DiscardedSegment> discarded;

    std::size_t pair_count() const noexcept { return segments.size() * kQuestionsPerSegment; }
};

// ---------------------------------------------------------------------------
// Curation

/// Frame offsets {0, 1/rate, 2/rate, ...} strictly below `duration_s`.
std::vector<double> frame_schedule(double duration_s, double frame_rate_hz);

/// Splits a clip into consecutive non-overlapping windows; a trailing remainder
/// shorter than `window_s` is dropped.
std::vector<Segment> segmentize_clip(const std::string& clip_id, double clip_duration_s,
                                     double window_s, double frame_rate_hz);

enum class VoteOutcome { no, yes, discard };

/// Per cue: the value backed by at least two HIGH-confidence annotators, else discard.
std::array<VoteOutcome, kCueCount> majority_vote(std::span<const AnnotationRecord> records);

/// The wearer is addressed or is speaking.
constexpr bool derive_ground_truth(const CueVector& cues) noexcept {
    return cues[Cue::aud] || cues[Cue::udsd];
}

// ---------------------------------------------------------------------------
// Manifest I/O and validation

struct Violation {
    std::size_t line = 0;  // 1-based; 0 when not tied to a line
    std::string segment_id;
    std::string field;
    std::string message;

    std::string describe() const;
};

struct ValidationReport {
    std::string source;
    std::size_t records = 0;
    std::vector<Violation> violations;

    bool ok() const noexcept { return violations.empty(); }
};

/// Checks every record and collects all violations. Throws IoError if unreadable.
ValidationReport validate_manifest_file(const std::filesystem::path& path);

/// Parses and fully validates a manifest. Throws ParseError on malformed JSON
/// and ValidationError on invariant violations.
DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest read_manifest(std::istream& in, std::string_view source_name);

void write_manifest(const DatasetManifest& manifest, std::ostream& out);
/// Writes via a temporary file and rename.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Invariant checks for one segment against the manifest's frame rate.
std::vector<Violation> check_segment(const LabeledSegment& segment, double frame_rate_hz);

void to_json(nlohmann::json& j, const Utterance& u);
void to_json(nlohmann::json& j, const Segment& s);
void to_json(nlohmann::json& j, const LabeledSegment& s);
nlohmann::json cues_to_json(const CueVector& cues);
/// Throws ParseError naming the missing or mistyped cue.
CueVector cues_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Statistics

struct VariableStats {
    std::string name;
    std::size_t positives = 0;
    double rate = 0.0;
};

/// Eight cues in serialization order followed by the ground truth.
inline constexpr std::size_t kStatVariables = kCueCount + 1;
std::array<std::string, kStatVariables> stat_variable_names();

struct DistributionReport {
    std::size_t segment_count = 0;
    std::size_t pair_count = 0;
    std::array<VariableStats, kStatVariables> variables;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

DistributionReport distribution_report(const DatasetManifest& manifest);

/// Phi coefficients between the 0/1 encoded variables. Entries touching a
/// constant column are std::nullopt.
struct CorrelationMatrix {
    std::array<std::string, kStatVariables> names;
    std::array<std::array<std::optional<double>, kStatVariables>, kStatVariables> values;

    const std::optional<double>& at(std::size_t i, std::size_t j) const { return values.at(i).at(j); }
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

inline constexpr std::string_view kUndefinedMarker = "UNDEFINED";

CorrelationMatrix cue_correlation_matrix(const DatasetManifest& manifest);

}  // namespace egosod
