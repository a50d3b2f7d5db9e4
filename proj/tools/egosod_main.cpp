// egosod: generate, validate and evaluate social-interaction datasets.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "egosod/dataset.hpp"
#include "egosod/error.hpp"
#include "egosod/harness.hpp"
#include "egosod/io.hpp"
#include "egosod/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitViolations = 1;
constexpr int kExitUsage = 2;
constexpr int kExitError = 3;
constexpr int kExitAborted = 4;

struct Overrides {
    std::optional<std::string> name;
    std::optional<std::string> manifest;
    std::optional<std::string> backend;
    std::optional<std::string> mode;
    std::optional<int> frame_budget;
    std::optional<std::string> variant;
    std::optional<std::string> policy;
    std::optional<std::string> mask;
    std::optional<std::string> output_dir;
    std::optional<int> parallelism;
    std::optional<std::uint64_t> seed;
    std::optional<double> failure_budget;
    std::optional<double> tpr;
    std::optional<double> tnr;
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<std::string> cache_dir;
    std::optional<std::string> api_key_env;
    std::optional<std::string> prompt_dir;
    std::optional<int> max_retries;
    std::optional<int> timeout_ms;
    std::optional<int> max_concurrent;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--name", o.name, "Run label");
    cmd->add_option("--manifest", o.manifest, "Dataset manifest (replaces the config's dataset)");
    cmd->add_option("--backend", o.backend, "oracle | noisy | remote | replay");
    cmd->add_option("--mode", o.mode, "video_only | audio_video | audio_video_text | audio_video_text_conv");
    cmd->add_option("--frame-budget", o.frame_budget, "Frames per prompt");
    cmd->add_option("--variant", o.variant, "auto, graph, graph-dep, graph-dep-think-h, ...");
    cmd->add_option("--policy", o.policy, "eager | short_circuit | hierarchical");
    cmd->add_option("--mask", o.mask, "full | apg_only | vpg_only | baseline_direct");
    cmd->add_option("--output-dir", o.output_dir, "Output directory");
    cmd->add_option("--parallelism", o.parallelism, "Concurrent segments");
    cmd->add_option("--seed", o.seed, "Run seed (noisy backend default seed)");
    cmd->add_option("--failure-budget", o.failure_budget, "Abort when more than this fraction of segments fail");
    cmd->add_option("--tpr", o.tpr, "Noisy backend true-positive rate for every cue");
    cmd->add_option("--tnr", o.tnr, "Noisy backend true-negative rate for every cue");
    cmd->add_option("--endpoint", o.endpoint, "Remote endpoint URL");
    cmd->add_option("--model", o.model, "Remote model name");
    cmd->add_option("--cache-dir", o.cache_dir, "Response cache directory");
    cmd->add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key");
    cmd->add_option("--prompt-dir", o.prompt_dir, "Prompt template directory");
    cmd->add_option("--max-retries", o.max_retries, "Retries per remote request");
    cmd->add_option("--timeout-ms", o.timeout_ms, "Remote request timeout");
    cmd->add_option("--max-concurrent", o.max_concurrent, "Concurrent remote requests");
}

/// Applies flags on top of the config document, so they go through the same parser.
egosod::ExperimentConfig apply_overrides(json doc, const Overrides& o) {
    if (o.name) doc["name"] = *o.name;
    if (o.manifest) doc["dataset"] = json{{"manifest", *o.manifest}};
    if (o.output_dir) doc["output_dir"] = *o.output_dir;
    if (o.parallelism) doc["parallelism"] = *o.parallelism;
    if (o.seed) doc["seed"] = *o.seed;
    if (o.failure_budget) doc["failure_budget"] = *o.failure_budget;
    if (o.variant) doc["variant"] = *o.variant;
    if (o.policy) doc["policy"] = *o.policy;
    if (o.mask) doc["component_mask"] = *o.mask;
    if (o.mode || o.frame_budget) {
        json& m = doc["modality"];
        if (!m.is_object()) m = json::object();
        if (o.mode) m["mode"] = *o.mode;
        if (o.frame_budget) m["frame_budget"] = *o.frame_budget;
    }

    json& b = doc["backend"];
    if (!b.is_object()) b = json::object();
    if (o.backend) b["kind"] = *o.backend;
    if (o.tpr || o.tnr) {
        json& n = b["noisy"];
        if (!n.is_object()) n = json::object();
        if (o.tpr) n["tpr"] = *o.tpr;
        if (o.tnr) n["tnr"] = *o.tnr;
    }
    if (o.endpoint || o.model || o.cache_dir || o.api_key_env || o.prompt_dir || o.max_retries || o.timeout_ms ||
        o.max_concurrent) {
        json& r = b["remote"];
        if (!r.is_object()) r = json::object();
        if (o.endpoint) r["endpoint"] = *o.endpoint;
        if (o.model) r["model"] = *o.model;
        if (o.cache_dir) r["cache_dir"] = *o.cache_dir;
        if (o.api_key_env) r["api_key_env"] = *o.api_key_env;
        if (o.prompt_dir) r["prompt_dir"] = *o.prompt_dir;
        if (o.max_retries) r["max_retries"] = *o.max_retries;
        if (o.timeout_ms) r["timeout_ms"] = *o.timeout_ms;
        if (o.max_concurrent) r["max_concurrent_requests"] = *o.max_concurrent;
    }
    return egosod::experiment_config_from_json(doc);
}

json read_json(const std::string& path) {
    try {
        return json::parse(egosod::read_file(path));
    } catch (const json::parse_error& e) {
        throw egosod::ParseError(path + ": " + e.what());
    }
}

json config_document(const std::string& path) { return path.empty() ? json::object() : read_json(path); }

void print_report_summary(const egosod::MetricsReport& r, const fs::path& dir) {
    std::printf("%s: ITM %s%%  SIM %s%%  (%llu segments%s)\n", r.metadata.label.c_str(),
                r.itm ? egosod::format_percent(*r.itm).c_str() : "n/a", egosod::format_percent(r.sim).c_str(),
                static_cast<unsigned long long>(r.segment_count), r.partial ? ", partial" : "");
    if (!dir.empty()) std::printf("outputs in %s\n", dir.string().c_str());
}

int cmd_gen(const std::string& config_path, const std::string& out) {
    const auto config = egosod::generator_config_from_json(read_json(config_path));
    const auto manifest = egosod::generate(config);
    egosod::save_manifest(manifest, out);
    std::printf("wrote %zu segments (%zu video-question pairs) to %s\n", manifest.segments.size(),
                manifest.pair_count(), out.c_str());
    return 0;
}

int cmd_validate(const std::string& path) {
    const auto report = egosod::validate_manifest_file(path);
    for (const auto& v : report.violations) std::printf("%s\n", v.describe().c_str());
    std::printf("%s: %zu records, %zu violations\n", report.source.c_str(), report.records, report.violations.size());
    if (!report.ok()) return kExitViolations;
    std::printf("%zu video-question pairs\n", report.records * egosod::kQuestionsPerSegment);
    return 0;
}

int cmd_stats(const std::string& path, const std::string& out_dir) {
    const auto manifest = egosod::load_manifest(path);
    const auto dist = egosod::distribution_report(manifest);
    const auto corr = egosod::cue_correlation_matrix(manifest);
    if (out_dir.empty()) {
        std::printf("%s\n%s", dist.to_csv().c_str(), corr.to_csv().c_str());
        return 0;
    }
    egosod::write_file_atomic(fs::path(out_dir) / "distribution.csv", dist.to_csv());
    egosod::write_file_atomic(fs::path(out_dir) / "correlation.csv", corr.to_csv());
    egosod::write_file_atomic(fs::path(out_dir) / "stats.json",
                              json{{"distribution", dist.to_json()}, {"correlation", corr.to_json()}}.dump(2) + "\n");
    std::printf("wrote distribution.csv, correlation.csv and stats.json to %s\n", out_dir.c_str());
    return 0;
}

int cmd_run(const std::string& config_path, const Overrides& o) {
    const auto config = apply_overrides(config_document(config_path), o);
    const auto result = egosod::run(config);
    for (const auto& e : result.errors) std::fprintf(stderr, "segment %s: %s\n", e.segment_id.c_str(), e.message.c_str());
    if (result.resumed > 0) std::printf("resumed %zu segments, evaluated %zu\n", result.resumed, result.evaluated);
    print_report_summary(result.report, config.output_dir);
    if (result.aborted) {
        std::fprintf(stderr, "aborted: %zu segment errors exceed the failure budget\n", result.errors.size());
        return kExitAborted;
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path, const Overrides& o) {
    const auto base = apply_overrides(config_document(config_path), o);
    const auto grid = egosod::sweep_grid_from_json(read_json(grid_path));
    const auto result = egosod::sweep(grid, base);
    bool failed = false;
    for (const auto& cell : result.cells) {
        if (!cell.error.empty()) {
            failed = true;
            std::fprintf(stderr, "cell %s failed: %s\n", cell.config.name.c_str(), cell.error.c_str());
        }
    }
    if (result.table) std::printf("%s", result.table->to_markdown().c_str());
    std::printf("sweep outputs in %s\n", base.output_dir.string().c_str());
    return failed ? kExitAborted : 0;
}

int cmd_report(const std::vector<std::string>& dirs, const std::string& baseline, const std::string& out_dir) {
    std::vector<egosod::MetricsReport> reports;
    if (!baseline.empty()) reports.push_back(egosod::recompute_report(baseline));
    for (const auto& d : dirs) {
        std::error_code ec;
        if (!baseline.empty() && fs::equivalent(d, baseline, ec)) continue;
        reports.push_back(egosod::recompute_report(d));
    }

    if (reports.size() == 1) {
        std::printf("%s\n", reports.front().to_json().dump(2).c_str());
        return 0;
    }
    const auto table = egosod::compare_runs(reports, 0);
    if (!out_dir.empty()) {
        egosod::write_file_atomic(fs::path(out_dir) / "comparison.csv", table.to_csv());
        egosod::write_file_atomic(fs::path(out_dir) / "comparison.md", table.to_markdown());
    }
    std::printf("%s", table.to_markdown().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Social-interaction detection evaluation toolkit"};
    app.require_subcommand(1);

    std::string gen_config, gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic manifest");
    gen->add_option("--config", gen_config, "Generator config (JSON)")->required()->check(CLI::ExistingFile);
    gen->add_option("--out", gen_out, "Output manifest (JSONL)")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a manifest against every invariant");
    validate->add_option("manifest", validate_path, "Manifest (JSONL)")->required();

    std::string stats_path, stats_out;
    auto* stats = app.add_subcommand("stats", "Cue distribution and correlation of a manifest");
    stats->add_option("manifest", stats_path, "Manifest (JSONL)")->required();
    stats->add_option("--out-dir", stats_out, "Write CSV and JSON here instead of stdout");

    std::string run_config;
    Overrides run_overrides;
    auto* run = app.add_subcommand("run", "Evaluate one experiment");
    run->add_option("--config", run_config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    add_override_flags(run, run_overrides);

    std::string sweep_config, sweep_grid;
    Overrides sweep_overrides;
    auto* sweep = app.add_subcommand("sweep", "Run the cartesian product of a grid");
    sweep->add_option("--config", sweep_config, "Base experiment config (JSON)")->check(CLI::ExistingFile);
    sweep->add_option("--grid", sweep_grid, "Grid (JSON)")->required()->check(CLI::ExistingFile);
    add_override_flags(sweep, sweep_overrides);

    std::vector<std::string> report_dirs;
    std::string report_baseline, report_out;
    auto* report = app.add_subcommand("report", "Recompute metrics from run records and compare runs");
    report->add_option("--records", report_dirs, "Run directory (repeatable)")->required();
    report->add_option("--baseline", report_baseline, "Baseline run directory");
    report->add_option("--out-dir", report_out, "Write comparison.csv and comparison.md here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) return cmd_gen(gen_config, gen_out);
        if (*validate) return cmd_validate(validate_path);
        if (*stats) return cmd_stats(stats_path, stats_out);
        if (*run) return cmd_run(run_config, run_overrides);
        if (*sweep) return cmd_sweep(sweep_config, sweep_grid, sweep_overrides);
        if (*report) return cmd_report(report_dirs, report_baseline, report_out);
    } catch (const egosod::ValidationError& e) {
        std::fprintf(stderr, "invalid: %s\n", e.what());
        return kExitUsage;
    } catch (const egosod::ParseError& e) {
        std::fprintf(stderr, "invalid: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitUsage;
}
