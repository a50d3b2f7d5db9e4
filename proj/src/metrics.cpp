#include "egosod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "egosod/error.hpp"

namespace egosod {

using nlohmann::json;

void ConfusionMatrix::add(bool predicted, bool truth) noexcept {
    if (predicted && truth) {
        ++tp;
    } else if (predicted) {
        ++fp;
    } else if (truth) {
        ++fn;
    } else {
        ++tn;
    }
}

ConfusionMatrix confusion(const std::vector<bool>& predictions, const std::vector<bool>& truths) {
    if (predictions.size() != truths.size()) {
        throw ValidationError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                              std::to_string(truths.size()) + " truths");
    }
    if (predictions.empty()) throw ValidationError("confusion: no samples");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) cm.add(predictions[i], truths[i]);
    return cm;
}

namespace {

double ratio_or_zero(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
    const double precision = ratio_or_zero(tp, tp + fp);
    const double recall = ratio_or_zero(tp, tp + fn);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

std::optional<double> itm(const ConfusionMatrix& cm) noexcept {
    if (cm.tn + cm.fp == 0) return std::nullopt;
    return static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
}

double sim(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ValidationError("sim: empty confusion matrix");
    const double positive = f1(cm.tp, cm.fp, cm.fn);
    const double negative = f1(cm.tn, cm.fn, cm.fp);
    return (positive + negative) / 2.0;
}

CueReport cue_metrics(const std::vector<CuePredictions>& predictions, const std::map<std::string, CueVector>& truths) {
    CueReport report;
    for (const auto& p : predictions) {
        auto it = truths.find(p.segment_id);
        if (it == truths.end()) {
            throw ValidationError("cue_metrics: no truth for segment '" + p.segment_id + "'");
        }
        for (Cue cue : kAllCues) {
            if (const auto& v = p.value(cue)) report.cues[index_of(cue)].counts.add(*v, it->second[cue]);
        }
    }
    for (auto& stats : report.cues) {
        const ConfusionMatrix& cm = stats.counts;
        if (cm.tp + cm.fn > 0) stats.positive_accuracy = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
        if (cm.tn + cm.fp > 0) stats.negative_accuracy = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
        if (cm.total() > 0) stats.macro_f1 = sim(cm);
    }
    return report;
}

// ---------------------------------------------------------------------------
// MetricsReport

std::string RunMetadata::key() const {
    std::ostringstream out;
    out << "backend=" << backend << "|modality=" << modality << "|frames=" << frame_budget << "|variant=" << variant
        << "|policy=" << policy << "|mask=" << component_mask << "|seed=" << seed;
    return out.str();
}

MetricsReport MetricsReport::from_confusion(const ConfusionMatrix& cm, RunMetadata metadata) {
    MetricsReport r;
    r.interaction_confusion = cm;
    r.itm = egosod::itm(cm);
    r.sim = cm.total() > 0 ? egosod::sim(cm) : 0.0;
    r.segment_count = cm.total();
    r.metadata = std::move(metadata);
    return r;
}

bool MetricsReport::consistent() const {
    if (interaction_confusion.total() == 0) return !itm && sim == 0.0;
    return itm == egosod::itm(interaction_confusion) && sim == egosod::sim(interaction_confusion);
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* field) {
    if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
    return j.at(field).get<double>();
}

json confusion_json(const ConfusionMatrix& cm) {
    return json{{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

ConfusionMatrix confusion_from_json(const json& j) {
    return ConfusionMatrix{j.at("tp").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(),
                           j.at("fn").get<std::uint64_t>(), j.at("tn").get<std::uint64_t>()};
}

}  // namespace

json MetricsReport::to_json() const {
    json j;
    j["itm"] = optional_number(itm);
    j["sim"] = sim;
    j["itm_percent"] = itm ? json(format_percent(*itm)) : json(nullptr);
    j["sim_percent"] = format_percent(sim);
    j["interaction_confusion"] = confusion_json(interaction_confusion);
    j["parse_failure_count"] = parse_failure_count;
    j["segment_count"] = segment_count;
    j["error_count"] = error_count;
    j["partial"] = partial;
    j["metadata"] = json{{"label", metadata.label},
                         {"backend", metadata.backend},
                         {"modality", metadata.modality},
                         {"frame_budget", metadata.frame_budget},
                         {"variant", metadata.variant},
                         {"policy", metadata.policy},
                         {"component_mask", metadata.component_mask},
                         {"seed", metadata.seed}};
    if (cue_report) {
        json cues = json::object();
        for (Cue cue : kAllCues) {
            const CueStats& s = (*cue_report)[cue];
            cues[std::string(cue_key(cue))] = json{{"counts", confusion_json(s.counts)},
                                                   {"positive_accuracy", optional_number(s.positive_accuracy)},
                                                   {"negative_accuracy", optional_number(s.negative_accuracy)},
                                                   {"macro_f1", optional_number(s.macro_f1)}};
        }
        j["cue_report"] = cues;
    } else {
        j["cue_report"] = nullptr;
    }
    return j;
}

MetricsReport MetricsReport::from_json(const json& j) {
    MetricsReport r;
    r.itm = read_optional(j, "itm");
    r.sim = j.at("sim").get<double>();
    r.interaction_confusion = confusion_from_json(j.at("interaction_confusion"));
    r.parse_failure_count = j.value("parse_failure_count", std::uint64_t{0});
    r.segment_count = j.value("segment_count", r.interaction_confusion.total());
    r.error_count = j.value("error_count", std::uint64_t{0});
    r.partial = j.value("partial", false);
    if (j.contains("metadata")) {
        const json& m = j.at("metadata");
        r.metadata.label = m.value("label", std::string());
        r.metadata.backend = m.value("backend", std::string());
        r.metadata.modality = m.value("modality", std::string());
        r.metadata.frame_budget = m.value("frame_budget", 0);
        r.metadata.variant = m.value("variant", std::string());
        r.metadata.policy = m.value("policy", std::string());
        r.metadata.component_mask = m.value("component_mask", std::string());
        r.metadata.seed = m.value("seed", std::uint64_t{0});
    }
    if (j.contains("cue_report") && !j.at("cue_report").is_null()) {
        CueReport report;
        for (Cue cue : kAllCues) {
            const json& c = j.at("cue_report").at(std::string(cue_key(cue)));
            CueStats& s = report.cues[index_of(cue)];
            s.counts = confusion_from_json(c.at("counts"));
            s.positive_accuracy = read_optional(c, "positive_accuracy");
            s.negative_accuracy = read_optional(c, "negative_accuracy");
            s.macro_f1 = read_optional(c, "macro_f1");
        }
        r.cue_report = report;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Comparison

std::string format_percent(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", value * 100.0);
    return buf;
}

namespace {

std::string format_delta(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.2f", value * 100.0);
    return buf;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string display_name(const RunMetadata& m) { return m.label.empty() ? m.key() : m.label; }

auto sort_key(const RunMetadata& m) {
    return std::tie(m.backend, m.modality, m.frame_budget, m.variant, m.policy, m.component_mask, m.seed, m.label);
}

}  // namespace

ComparisonTable compare_runs(const std::vector<MetricsReport>& reports, std::size_t baseline_index) {
    if (reports.empty()) throw ValidationError("compare_runs needs at least one report");
    if (baseline_index >= reports.size()) throw ValidationError("compare_runs: baseline index out of range");

    std::set<std::string> keys;
    for (const auto& r : reports) {
        if (!keys.insert(r.metadata.key()).second) {
            throw ValidationError("compare_runs: duplicate run metadata '" + r.metadata.key() + "'");
        }
    }

    const MetricsReport& base = reports[baseline_index];
    ComparisonTable table;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const MetricsReport& r = reports[i];
        ComparisonRow row;
        row.metadata = r.metadata;
        row.itm = r.itm;
        row.sim = r.sim;
        if (r.itm && base.itm) row.delta_itm = *r.itm - *base.itm;
        row.delta_sim = r.sim - base.sim;
        row.baseline = i == baseline_index;
        row.partial = r.partial;
        table.rows.push_back(std::move(row));
    }
    std::stable_sort(table.rows.begin(), table.rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
        return sort_key(a.metadata) < sort_key(b.metadata);
    });
    return table;
}

std::string ComparisonTable::to_csv() const {
    std::ostringstream out;
    out << "label,backend,modality,frame_budget,variant,policy,component_mask,seed,itm,sim,delta_itm,delta_sim,"
           "baseline,partial\n";
    auto num = [](const std::optional<double>& v) {
        if (!v) return std::string();
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        const RunMetadata& m = r.metadata;
        out << csv_escape(m.label) << ',' << csv_escape(m.backend) << ',' << m.modality << ',' << m.frame_budget << ','
            << m.variant << ',' << m.policy << ',' << m.component_mask << ',' << m.seed << ',' << num(r.itm) << ','
            << num(r.sim) << ',' << num(r.delta_itm) << ',' << num(r.delta_sim) << ',' << (r.baseline ? 1 : 0) << ','
            << (r.partial ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string ComparisonTable::to_markdown() const {
    std::ostringstream out;
    out << "| Run | Score (%) | Delta vs baseline |\n";
    out << "|---|---:|---:|\n";
    out << "| *Intervention Timing* | | |\n";
    for (const auto& r : rows) {
        out << "| " << display_name(r.metadata) << (r.baseline ? " (baseline)" : "") << " | "
            << (r.itm ? format_percent(*r.itm) : std::string("n/a")) << " | "
            << (r.delta_itm ? format_delta(*r.delta_itm) : std::string("n/a")) << " |\n";
    }
    out << "| *Overall Social Interaction: Macro F1* | | |\n";
    for (const auto& r : rows) {
        out << "| " << display_name(r.metadata) << (r.baseline ? " (baseline)" : "") << " | " << format_percent(r.sim)
            << " | " << format_delta(r.delta_sim) << " |\n";
    }
    return out.str();
}

}  // namespace egosod
