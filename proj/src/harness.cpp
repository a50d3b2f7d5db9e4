#include "egosod/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "egosod/error.hpp"
#include "egosod/io.hpp"

namespace egosod {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kRecordsFile = "records.jsonl";
constexpr const char* kTimingFile = "timing.jsonl";
constexpr const char* kReportFile = "report.json";
constexpr const char* kRunFile = "run.json";
constexpr const char* kErrorsFile = "errors.jsonl";

}  // namespace

std::string_view to_string(ComponentMask mask) noexcept {
    switch (mask) {
        case ComponentMask::full: return "full";
        case ComponentMask::apg_only: return "apg_only";
        case ComponentMask::vpg_only: return "vpg_only";
        case ComponentMask::baseline_direct: break;
    }
    return "baseline_direct";
}

std::optional<ComponentMask> parse_component_mask(std::string_view text) noexcept {
    for (auto m : {ComponentMask::full, ComponentMask::apg_only, ComponentMask::vpg_only,
                   ComponentMask::baseline_direct}) {
        if (text == to_string(m)) return m;
    }
    return std::nullopt;
}

CueSet masked_cues(ComponentMask mask) noexcept {
    switch (mask) {
        case ComponentMask::apg_only: return CueSet::visual();
        case ComponentMask::vpg_only: return CueSet::audio();
        case ComponentMask::full:
        case ComponentMask::baseline_direct: break;
    }
    return CueSet::none();
}

// ---------------------------------------------------------------------------
// ExperimentConfig

namespace {

bool uses_prompts(const BackendSpec& spec) {
    return spec.kind == BackendKind::remote || spec.kind == BackendKind::replay;
}

/// The direct question never sees cue answers, so it is always asked in the auto form.
PromptVariant direct_variant(PromptVariant v) {
    v.base = PromptVariant::Base::automatic;
    v.dep = false;
    return v;
}

PromptVariant effective_variant(const ExperimentConfig& c) {
    return c.component_mask == ComponentMask::baseline_direct ? direct_variant(c.variant) : c.variant;
}

/// Cues a run may send to the backend.
CueSet queried_cues(const ExperimentConfig& c) {
    if (c.component_mask == ComponentMask::baseline_direct) return CueSet::none();
    CueSet all = CueSet::all();
    for (Cue cue : kAllCues) {
        if (masked_cues(c.component_mask).contains(cue)) all.erase(cue);
    }
    return all;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (dataset.manifest.empty() == !dataset.generate.has_value()) {
        throw ValidationError("dataset needs exactly one of 'manifest' or 'generate'");
    }
    if (dataset.generate) dataset.generate->validate();
    backend.validate();
    variant.validate();
    if (modality.frame_budget < 1) throw ValidationError("frame_budget must be positive");
    if (parallelism < 1) throw ValidationError("parallelism must be at least 1");
    if (!(failure_budget >= 0.0 && failure_budget <= 1.0)) throw ValidationError("failure_budget must lie in [0, 1]");
    if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
    if (uses_prompts(backend) && !modality.has_audio()) {
        const CueSet q = queried_cues(*this);
        for (Cue cue : kAllCues) {
            if (q.contains(cue) && is_audio_cue(cue)) {
                throw ValidationError("modality video_only cannot answer audio cue " + std::string(cue_acronym(cue)) +
                                      " with a " + std::string(to_string(backend.kind)) +
                                      " backend; use component_mask vpg_only or an audio modality");
            }
        }
    }
}

std::string ExperimentConfig::label() const {
    if (!name.empty()) return name;
    std::ostringstream out;
    out << to_string(backend.kind) << '/' << to_string(modality.mode) << "/f" << modality.frame_budget << '/'
        << effective_variant(*this).label() << '/' << to_string(policy) << '/' << to_string(component_mask);
    return out.str();
}

RunMetadata ExperimentConfig::metadata() const {
    RunMetadata m;
    m.label = label();
    m.backend = backend.id();
    m.modality = std::string(to_string(modality.mode));
    m.frame_budget = modality.frame_budget;
    m.variant = effective_variant(*this).label();
    m.policy = std::string(to_string(policy));
    m.component_mask = std::string(to_string(component_mask));
    m.seed = seed;
    return m;
}

json ExperimentConfig::to_json() const {
    json ds = json::object();
    if (!dataset.manifest.empty()) ds["manifest"] = dataset.manifest.string();
    if (dataset.generate) ds["generate"] = *dataset.generate;
    return json{{"name", name},
                {"dataset", ds},
                {"backend", backend},
                {"modality", modality},
                {"variant", variant.label()},
                {"policy", std::string(to_string(policy))},
                {"component_mask", std::string(to_string(component_mask))},
                {"output_dir", output_dir.string()},
                {"parallelism", parallelism},
                {"seed", seed},
                {"failure_budget", failure_budget}};
}

std::string ExperimentConfig::fingerprint() const {
    json j = to_json();
    j.erase("output_dir");
    j.erase("parallelism");
    j.erase("failure_budget");
    if (j["backend"].contains("remote")) {
        for (const char* k : {"timeout_ms", "max_retries", "max_concurrent_requests", "backoff_ms", "cache_dir"}) {
            j["backend"]["remote"].erase(k);
        }
    }
    return sha256_hex(j.dump());
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig c;
    try {
        c.name = j.value("name", std::string());
        c.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("dataset")) {
            const json& ds = j.at("dataset");
            if (ds.is_string()) {
                c.dataset.manifest = ds.get<std::string>();
            } else {
                if (ds.contains("manifest")) c.dataset.manifest = ds.at("manifest").get<std::string>();
                if (ds.contains("generate")) c.dataset.generate = generator_config_from_json(ds.at("generate"));
            }
        }
        if (j.contains("backend")) c.backend = backend_spec_from_json(j.at("backend"), c.seed);
        if (j.contains("modality")) c.modality = j.at("modality").get<ModalityConfig>();
        if (j.contains("variant")) c.variant = j.at("variant").get<PromptVariant>();
        if (j.contains("policy")) {
            const auto text = j.at("policy").get<std::string>();
            auto p = parse_gate_policy(text);
            if (!p) throw ParseError("unknown policy '" + text + "'");
            c.policy = *p;
        }
        if (j.contains("component_mask")) {
            const auto text = j.at("component_mask").get<std::string>();
            auto m = parse_component_mask(text);
            if (!m) throw ParseError("unknown component_mask '" + text + "'");
            c.component_mask = *m;
        }
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        c.parallelism = j.value("parallelism", c.parallelism);
        c.failure_budget = j.value("failure_budget", c.failure_budget);
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j);
}

// ---------------------------------------------------------------------------
// Records

json record_to_json(const RunRecord& r) {
    json j{{"segment_id", r.segment_id},
           {"predictions", r.predictions},
           {"decision", r.decision ? json(*r.decision) : json(nullptr)},
           {"direct_answer", r.direct_answer ? json(*r.direct_answer) : json(nullptr)},
           {"interacting", r.interacting},
           {"intervene_ok", r.intervene_ok},
           {"ground_truth", r.ground_truth},
           {"truth_cues", cues_to_json(r.truth_cues)},
           {"queries_issued", r.queries_issued}};
    if (r.direct_parse_failed) j["direct_parse_failed"] = true;
    return j;
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.segment_id = j.at("segment_id").get<std::string>();
    r.predictions = j.at("predictions").get<CuePredictions>();
    if (!j.at("decision").is_null()) r.decision = j.at("decision").get<Decision>();
    if (!j.at("direct_answer").is_null()) r.direct_answer = j.at("direct_answer").get<bool>();
    r.direct_parse_failed = j.value("direct_parse_failed", false);
    r.interacting = j.at("interacting").get<bool>();
    r.intervene_ok = j.at("intervene_ok").get<bool>();
    r.ground_truth = j.at("ground_truth").get<bool>();
    r.truth_cues = cues_from_json(j.at("truth_cues"));
    r.queries_issued = j.at("queries_issued").get<int>();
    return r;
}

RunRecord evaluate_segment(CueBackend& backend, const LabeledSegment& segment, const ExperimentConfig& config) {
    const auto started = std::chrono::steady_clock::now();

    RunRecord record;
    record.segment_id = segment.segment.segment_id;
    record.ground_truth = segment.ground_truth_interaction;
    record.truth_cues = segment.consensus;
    record.predictions.segment_id = record.segment_id;
    record.predictions.backend_id = backend.id();

    if (config.component_mask == ComponentMask::baseline_direct) {
        const CueAnswer answer =
            backend.answer_final(segment, config.modality, direct_variant(config.variant), std::nullopt);
        record.queries_issued += 1;
        record.direct_answer = answer.value;
        record.direct_parse_failed = answer.parse_failed;
        record.interacting = answer.value;
        record.intervene_ok = !answer.value;
    } else {
        const CueSource source = [&](Cue cue) {
            const CueAnswer answer = backend.answer_cue(segment, cue, config.modality);
            record.predictions.set(cue, answer);
            ++record.queries_issued;
            return answer.value;
        };
        Decision decision =
            evaluate(source, config.policy, record.segment_id, masked_cues(config.component_mask));
        record.interacting = decision.interacting;
        record.intervene_ok = decision.intervene_ok;
        record.decision = std::move(decision);
    }

    record.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return record;
}

MetricsReport compute_report(const std::vector<RunRecord>& records, RunMetadata metadata) {
    ConfusionMatrix cm;
    std::vector<CuePredictions> predictions;
    std::map<std::string, CueVector> truths;
    std::uint64_t parse_failures = 0;
    bool any_cues = false;
    for (const auto& r : records) {
        cm.add(r.interacting, r.ground_truth);
        parse_failures += static_cast<std::uint64_t>(r.predictions.parse_failure_count()) + (r.direct_parse_failed ? 1 : 0);
        any_cues = any_cues || !r.predictions.queried().empty();
        predictions.push_back(r.predictions);
        truths[r.segment_id] = r.truth_cues;
    }
    MetricsReport report = MetricsReport::from_confusion(cm, std::move(metadata));
    report.parse_failure_count = parse_failures;
    if (any_cues) report.cue_report = cue_metrics(predictions, truths);
    return report;
}

// ---------------------------------------------------------------------------
// run

DatasetManifest resolve_dataset(const ExperimentConfig& config) {
    DatasetManifest manifest =
        config.dataset.generate ? generate(*config.dataset.generate) : load_manifest(config.dataset.manifest);
    if (manifest.segments.empty()) throw ValidationError("dataset '" + manifest.name + "' has no segments");
    return manifest;
}

namespace {

void check_dataset_against_config(const DatasetManifest& manifest, const ExperimentConfig& config) {
    const bool prompts = uses_prompts(config.backend);
    for (const auto& s : manifest.segments) {
        if (static_cast<std::size_t>(config.modality.frame_budget) > s.segment.frame_times.size()) {
            throw ValidationError("segment '" + s.segment.segment_id + "' has " +
                                  std::to_string(s.segment.frame_times.size()) + " frames, fewer than frame_budget " +
                                  std::to_string(config.modality.frame_budget));
        }
        if (!prompts) continue;
        if (config.modality.has_text() && !s.segment.transcript) {
            throw ValidationError("segment '" + s.segment.segment_id + "' has no transcript for modality " +
                                  std::string(to_string(config.modality.mode)));
        }
        if (config.modality.has_audio() && !s.segment.audio_ref) {
            throw ValidationError("segment '" + s.segment.segment_id + "' has no audio_ref for modality " +
                                  std::string(to_string(config.modality.mode)));
        }
    }
}

/// Records from an earlier invocation; torn or unparsable lines are dropped and re-run.
std::unordered_map<std::string, RunRecord> read_existing_records(const fs::path& path) {
    std::unordered_map<std::string, RunRecord> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            RunRecord r = record_from_json(json::parse(line));
            out.insert_or_assign(r.segment_id, std::move(r));
        } catch (const std::exception&) {
        }
    }
    return out;
}

void prepare_output_dir(const ExperimentConfig& config, const DatasetManifest& manifest) {
    const fs::path run_file = config.output_dir / kRunFile;
    std::error_code ec;
    if (fs::exists(run_file, ec)) {
        json previous;
        try {
            previous = json::parse(read_file(run_file));
        } catch (const std::exception& e) {
            throw ValidationError("cannot read '" + run_file.string() + "': " + e.what());
        }
        if (previous.value("fingerprint", std::string()) != config.fingerprint()) {
            throw ValidationError("output_dir '" + config.output_dir.string() +
                                  "' holds a different experiment; choose another output_dir");
        }
        return;
    }
    fs::create_directories(config.output_dir, ec);
    if (ec) throw IoError("cannot create output_dir '" + config.output_dir.string() + "': " + ec.message());
    const RunMetadata m = config.metadata();
    json run{{"fingerprint", config.fingerprint()},
             {"config", config.to_json()},
             {"dataset", {{"name", manifest.name}, {"segments", manifest.segments.size()}}},
             {"cue_cache_shared_across_variants", true}};
    write_file_atomic(run_file, run.dump(2) + "\n");
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
    config.validate();
    const DatasetManifest manifest = resolve_dataset(config);
    check_dataset_against_config(manifest, config);

    std::unique_ptr<CueBackend> owned;
    CueBackend* backend = options.backend_override;
    if (!backend) {
        owned = make_backend(config.backend);
        backend = owned.get();
    }

    prepare_output_dir(config, manifest);
    const fs::path records_path = config.output_dir / kRecordsFile;

    auto existing = read_existing_records(records_path);
    RunResult result;
    std::vector<const LabeledSegment*> pending;
    for (const auto& s : manifest.segments) {
        if (existing.count(s.segment.segment_id)) {
            ++result.resumed;
        } else {
            pending.push_back(&s);
        }
    }
    if (options.stop_after && pending.size() > *options.stop_after) pending.resize(*options.stop_after);

    // Rewrite the surviving records so a torn trailing line cannot corrupt appends.
    {
        std::ostringstream kept;
        for (const auto& s : manifest.segments) {
            auto it = existing.find(s.segment.segment_id);
            if (it != existing.end()) kept << record_to_json(it->second).dump() << '\n';
        }
        write_file_atomic(records_path, kept.str());
    }

    std::vector<std::optional<RunRecord>> fresh(pending.size());
    std::mutex mutex;
    std::ofstream records_out(records_path, std::ios::app);
    std::ofstream timing_out(config.output_dir / kTimingFile, std::ios::app);
    if (!records_out || !timing_out) throw IoError("cannot append to run files in '" + config.output_dir.string() + "'");

    const auto max_errors = static_cast<std::size_t>(config.failure_budget * static_cast<double>(manifest.segments.size()));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;

    auto worker = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const LabeledSegment& segment = *pending[i];
            try {
                RunRecord record = evaluate_segment(*backend, segment, config);
                std::lock_guard lock(mutex);
                records_out << record_to_json(record).dump() << '\n' << std::flush;
                timing_out << json{{"segment_id", record.segment_id},
                                   {"queries_issued", record.queries_issued},
                                   {"wall_time_ms", record.wall_time_ms}}
                                  .dump()
                           << '\n'
                           << std::flush;
                fresh[i] = std::move(record);
            } catch (const Error& e) {
                std::lock_guard lock(mutex);
                result.errors.push_back(SegmentError{segment.segment.segment_id, e.what()});
                if (result.errors.size() > max_errors) abort = true;
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!fatal) fatal = std::current_exception();
                abort = true;
            }
        }
    };

    {
        const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.parallelism),
                                                    std::max<std::size_t>(pending.size(), 1));
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    records_out.close();
    timing_out.close();
    if (fatal) std::rethrow_exception(fatal);
    result.aborted = abort.load();

    std::unordered_map<std::string, RunRecord*> fresh_by_id;
    for (auto& r : fresh) {
        if (r) fresh_by_id[r->segment_id] = &*r;
    }
    std::ostringstream all;
    for (const auto& s : manifest.segments) {
        const std::string& id = s.segment.segment_id;
        if (auto it = existing.find(id); it != existing.end()) {
            result.records.push_back(std::move(it->second));
        } else if (auto f = fresh_by_id.find(id); f != fresh_by_id.end()) {
            result.records.push_back(std::move(*f->second));
            ++result.evaluated;
        } else {
            continue;
        }
        all << record_to_json(result.records.back()).dump() << '\n';
    }
    write_file_atomic(records_path, all.str());

    std::sort(result.errors.begin(), result.errors.end(),
              [](const SegmentError& a, const SegmentError& b) { return a.segment_id < b.segment_id; });
    const fs::path errors_path = config.output_dir / kErrorsFile;
    if (result.errors.empty()) {
        std::error_code ec;
        fs::remove(errors_path, ec);
    } else {
        std::ostringstream errs;
        for (const auto& e : result.errors) errs << json{{"segment_id", e.segment_id}, {"error", e.message}}.dump() << '\n';
        write_file_atomic(errors_path, errs.str());
    }

    result.report = compute_report(result.records, config.metadata());
    result.report.error_count = result.errors.size();
    result.report.partial = result.records.size() < manifest.segments.size();
    write_file_atomic(config.output_dir / kReportFile, result.report.to_json().dump(2) + "\n");
    return result;
}

MetricsReport recompute_report(const fs::path& run_dir) {
    const json run_info = json::parse(read_file(run_dir / kRunFile));
    const ExperimentConfig config = experiment_config_from_json(run_info.at("config"));
    std::vector<RunRecord> records;
    std::ifstream in(run_dir / kRecordsFile);
    if (!in) throw IoError("no records in '" + run_dir.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            records.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError((run_dir / kRecordsFile).string() + ":" + std::to_string(line_no) + ": " + e.what(), line);
        }
    }
    MetricsReport report = compute_report(records, config.metadata());
    const auto expected = run_info.at("dataset").value("segments", std::size_t{0});
    report.partial = records.size() < expected;
    return report;
}

// ---------------------------------------------------------------------------
// sweep

void SweepGrid::validate() const {
    if (modality.empty() && variant.empty() && policy.empty() && component_mask.empty() && frame_budget.empty()) {
        throw ValidationError("sweep grid has no axes");
    }
    for (const auto& v : variant) v.validate();
    for (int f : frame_budget) {
        if (f < 1) throw ValidationError("sweep frame_budget values must be positive");
    }
}

std::vector<ExperimentConfig> SweepGrid::expand(const ExperimentConfig& base) const {
    validate();
    auto or_base = [](const auto& axis, const auto& value) {
        using T = std::decay_t<decltype(value)>;
        return axis.empty() ? std::vector<T>{value} : std::vector<T>(axis.begin(), axis.end());
    };
    const auto modes = or_base(modality, base.modality.mode);
    const auto budgets = or_base(frame_budget, base.modality.frame_budget);
    const auto variants = or_base(variant, base.variant);
    const auto policies = or_base(policy, base.policy);
    const auto masks = or_base(component_mask, base.component_mask);

    std::vector<ExperimentConfig> cells;
    for (auto mode : modes) {
        for (int budget : budgets) {
            for (const auto& v : variants) {
                for (auto p : policies) {
                    for (auto m : masks) {
                        ExperimentConfig c = base;
                        c.modality.mode = mode;
                        c.modality.frame_budget = budget;
                        c.variant = v;
                        c.policy = p;
                        c.component_mask = m;
                        std::ostringstream name;
                        name << to_string(mode) << "-f" << budget << '-' << v.label() << '-' << to_string(p) << '-'
                             << to_string(m);
                        c.name = base.name.empty() ? name.str() : base.name + "-" + name.str();
                        char index[16];
                        std::snprintf(index, sizeof index, "cell_%03zu_", cells.size());
                        c.output_dir = base.output_dir / (index + name.str());
                        cells.push_back(std::move(c));
                    }
                }
            }
        }
    }
    return cells;
}

SweepGrid sweep_grid_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("sweep grid must be a JSON object");
    SweepGrid g;
    auto axis = [&](const char* name) -> const json* {
        if (!j.contains(name)) return nullptr;
        const json& a = j.at(name);
        if (!a.is_array()) throw ParseError(std::string("sweep axis '") + name + "' must be an array");
        if (a.empty()) throw ValidationError(std::string("sweep axis '") + name + "' is empty");
        return &a;
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        static const std::set<std::string> known{"modality", "variant", "policy", "component_mask", "frame_budget"};
        if (!known.count(it.key())) throw ParseError("unknown sweep axis '" + it.key() + "'");
    }
    if (const json* a = axis("modality")) {
        for (const auto& v : *a) {
            auto mode = parse_modality_mode(v.get<std::string>());
            if (!mode) throw ParseError("unknown modality mode " + v.dump());
            g.modality.push_back(*mode);
        }
    }
    if (const json* a = axis("variant")) {
        for (const auto& v : *a) g.variant.push_back(v.get<PromptVariant>());
    }
    if (const json* a = axis("policy")) {
        for (const auto& v : *a) {
            auto p = parse_gate_policy(v.get<std::string>());
            if (!p) throw ParseError("unknown policy " + v.dump());
            g.policy.push_back(*p);
        }
    }
    if (const json* a = axis("component_mask")) {
        for (const auto& v : *a) {
            auto m = parse_component_mask(v.get<std::string>());
            if (!m) throw ParseError("unknown component_mask " + v.dump());
            g.component_mask.push_back(*m);
        }
    }
    if (const json* a = axis("frame_budget")) {
        for (const auto& v : *a) g.frame_budget.push_back(v.get<int>());
    }
    g.validate();
    return g;
}

SweepResult sweep(const SweepGrid& grid, const ExperimentConfig& base, const RunOptions& options) {
    SweepResult result;
    for (auto& config : grid.expand(base)) {
        SweepCell cell;
        cell.config = config;
        try {
            RunResult r = run(config, options);
            if (r.aborted) cell.error = "aborted: failure budget exceeded";
            cell.report = std::move(r.report);
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
        result.cells.push_back(std::move(cell));
    }

    std::vector<MetricsReport> reports;
    json summary = json::array();
    for (const auto& cell : result.cells) {
        std::string status = "ok";
        if (!cell.report) {
            status = "failed";
        } else if (cell.report->partial || !cell.error.empty()) {
            status = "partial";
        }
        json entry{{"name", cell.config.name},
                   {"output_dir", cell.config.output_dir.string()},
                   {"status", status},
                   {"error", cell.error}};
        if (cell.report) {
            entry["itm"] = cell.report->itm ? json(*cell.report->itm) : json(nullptr);
            entry["sim"] = cell.report->sim;
            reports.push_back(*cell.report);
        }
        summary.push_back(std::move(entry));
    }

    std::error_code ec;
    fs::create_directories(base.output_dir, ec);
    if (!reports.empty()) {
        result.table = compare_runs(reports, 0);
        write_file_atomic(base.output_dir / "comparison.csv", result.table->to_csv());
        write_file_atomic(base.output_dir / "comparison.md", result.table->to_markdown());
    }
    write_file_atomic(base.output_dir / "sweep.json", json{{"cells", summary}}.dump(2) + "\n");
    return result;
}

}  // namespace egosod
