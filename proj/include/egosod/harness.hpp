#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "egosod/dataset.hpp"
#include "egosod/detectors.hpp"
#include "egosod/graph.hpp"
#include "egosod/metrics.hpp"
#include "egosod/prompt.hpp"
#include "egosod/synthgen.hpp"

namespace egosod {

/// Which parts of the graph take part in a run.
enum class ComponentMask {
    full,
    apg_only,         // visual cues forced false, never queried
    vpg_only,         // audio cues forced false, never queried
    baseline_direct,  // no graph: the final question is asked once
};

std::string_view to_string(ComponentMask mask) noexcept;
std::optional<ComponentMask> parse_component_mask(std::string_view text) noexcept;
/// Cues a mask forces to false.
CueSet masked_cues(ComponentMask mask) noexcept;

struct DatasetSource {
    std::filesystem::path manifest;
    std::optional<GeneratorConfig> generate;
};

struct ExperimentConfig {
    std::string name;
    DatasetSource dataset;
    BackendSpec backend;
    ModalityConfig modality;
    PromptVariant variant;
    GatePolicy policy = GatePolicy::hierarchical;
    ComponentMask component_mask = ComponentMask::full;
    std::filesystem::path output_dir = "egosod_run";
    int parallelism = 1;
    std::uint64_t seed = 0;
    /// Abort once more than this fraction of segments fail.
    double failure_budget = 0.05;

    /// Throws ValidationError.
    void validate() const;
    RunMetadata metadata() const;
    /// Defaults to a label built from the run's axes when `name` is empty.
    std::string label() const;
    nlohmann::json to_json() const;
    /// Hash over everything that influences results (not output_dir or parallelism).
    std::string fingerprint() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Everything needed to recompute metrics for one segment offline.
struct RunRecord {
    std::string segment_id;
    CuePredictions predictions;
    std::optional<Decision> decision;    // absent for baseline_direct
    std::optional<bool> direct_answer;   // baseline_direct only
    bool direct_parse_failed = false;
    bool interacting = false;
    bool intervene_ok = false;
    bool ground_truth = false;
    CueVector truth_cues;
    int queries_issued = 0;
    /// Kept out of records.jsonl so record files stay byte-stable; see timing.jsonl.
    double wall_time_ms = 0.0;
};

nlohmann::json record_to_json(const RunRecord& r);
RunRecord record_from_json(const nlohmann::json& j);

/// Runs one segment through the backend and the graph (or the direct question).
RunRecord evaluate_segment(CueBackend& backend, const LabeledSegment& segment, const ExperimentConfig& config);

/// Aggregates records into a report; the cue report covers whatever cues were queried.
MetricsReport compute_report(const std::vector<RunRecord>& records, RunMetadata metadata);

struct SegmentError {
    std::string segment_id;
    std::string message;
};

struct RunOptions {
    /// Evaluate at most this many pending segments, then stop (simulates an interruption).
    std::optional<std::size_t> stop_after;
    /// Use this backend instead of building one from the config (tests, wrappers).
    CueBackend* backend_override = nullptr;
};

struct RunResult {
    std::vector<RunRecord> records;  // dataset order
    MetricsReport report;
    std::vector<SegmentError> errors;
    std::size_t resumed = 0;
    std::size_t evaluated = 0;
    bool aborted = false;
};

/// Loads or generates the dataset for a config. Throws ValidationError when empty.
DatasetManifest resolve_dataset(const ExperimentConfig& config);

/// Evaluates every segment, writes records.jsonl, timing.jsonl, report.json and
/// run.json to output_dir. Segments already recorded in output_dir are skipped.
RunResult run(const ExperimentConfig& config, const RunOptions& options = {});

/// Rebuilds the report of a finished (or partial) run directory from its records.
MetricsReport recompute_report(const std::filesystem::path& run_dir);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepGrid {
    std::vector<ModalityMode> modality;
    std::vector<PromptVariant> variant;
    std::vector<GatePolicy> policy;
    std::vector<ComponentMask> component_mask;
    std::vector<int> frame_budget;

    /// Throws ValidationError for an empty axis or a grid without axes.
    void validate() const;
    /// Cartesian product applied to `base`; an absent axis keeps the base value.
    std::vector<ExperimentConfig> expand(const ExperimentConfig& base) const;
};

SweepGrid sweep_grid_from_json(const nlohmann::json& j);

struct SweepCell {
    ExperimentConfig config;
    std::optional<MetricsReport> report;
    std::string error;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::optional<ComparisonTable> table;
};

/// Runs every cell in its own subdirectory of base.output_dir; failed cells are
/// recorded and the sweep continues. Writes comparison.csv, comparison.md and sweep.json.
SweepResult sweep(const SweepGrid& grid, const ExperimentConfig& base, const RunOptions& options = {});

}  // namespace egosod
