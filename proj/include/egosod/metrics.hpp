#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "egosod/cue.hpp"
#include "egosod/detectors.hpp"

namespace egosod {

/// Binary confusion counts; the positive class is "interaction present" / "cue present".
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    void add(bool predicted, bool truth) noexcept;
    /// Relabels classes: the negative class becomes positive.
    ConfusionMatrix swapped() const noexcept { return ConfusionMatrix{tn, fn, fp, tp}; }

    bool operator==(const ConfusionMatrix&) const = default;
};

/// Throws ValidationError on length mismatch or empty input.
ConfusionMatrix confusion(const std::vector<bool>& predictions, const std::vector<bool>& truths);

/// Intervention timing: tn / (tn + fp), recall on the no-interaction class.
/// nullopt when there are no actually-negative segments.
std::optional<double> itm(const ConfusionMatrix& cm) noexcept;

/// Macro F1 over the positive and negative classes; a 0/0 ratio counts as 0.
/// Throws ValidationError for an empty matrix.
double sim(const ConfusionMatrix& cm);

struct CueStats {
    ConfusionMatrix counts;
    std::optional<double> positive_accuracy;
    std::optional<double> negative_accuracy;
    std::optional<double> macro_f1;
};

struct CueReport {
    std::array<CueStats, kCueCount> cues{};

    const CueStats& operator[](Cue cue) const { return cues[index_of(cue)]; }
};

/// Per-cue confusion over segments that queried the cue. Throws ValidationError
/// when a prediction has no matching truth.
CueReport cue_metrics(const std::vector<CuePredictions>& predictions, const std::map<std::string, CueVector>& truths);

struct RunMetadata {
    std::string label;
    std::string backend;
    std::string modality;
    int frame_budget = 0;
    std::string variant;
    std::string policy;
    std::string component_mask;
    std::uint64_t seed = 0;

    /// Canonical "backend=...|modality=...|..." string used for sorting and uniqueness.
    std::string key() const;

    bool operator==(const RunMetadata&) const = default;
};

struct MetricsReport {
    std::optional<double> itm;
    double sim = 0.0;
    ConfusionMatrix interaction_confusion;
    std::optional<CueReport> cue_report;
    std::uint64_t parse_failure_count = 0;
    std::uint64_t segment_count = 0;
    std::uint64_t error_count = 0;
    /// Run aborted or stopped early; metrics cover evaluated segments only.
    bool partial = false;
    RunMetadata metadata;

    static MetricsReport from_confusion(const ConfusionMatrix& cm, RunMetadata metadata);

    /// itm/sim agree exactly with a recomputation from interaction_confusion.
    bool consistent() const;

    nlohmann::json to_json() const;
    static MetricsReport from_json(const nlohmann::json& j);
};

struct ComparisonRow {
    RunMetadata metadata;
    std::optional<double> itm;
    double sim = 0.0;
    std::optional<double> delta_itm;
    double delta_sim = 0.0;
    bool baseline = false;
    bool partial = false;
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;

    std::string to_csv() const;
    /// Two blocks: "Intervention Timing" then "Overall Social Interaction: Macro F1", in percent.
    std::string to_markdown() const;
};

/// Rows sorted by metadata key; deltas relative to reports[baseline_index].
/// Throws ValidationError on empty input or duplicate metadata keys.
ComparisonTable compare_runs(const std::vector<MetricsReport>& reports, std::size_t baseline_index = 0);

/// Percent with two decimals: 0.58414 -> "58.41".
std::string format_percent(double value);

}  // namespace egosod
