#include "egosod/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_set>

#include "egosod/error.hpp"
#include "egosod/io.hpp"

namespace egosod {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Small types

SpeakerTag SpeakerTag::parse(std::string_view text) {
    if (text == "WEARER") return wearer();
    if (text == "UNKNOWN") return unknown();
    constexpr std::string_view kOther = "OTHER:";
    if (text.starts_with(kOther)) {
        const std::string digits(text.substr(kOther.size()));
        if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
            digits.size() <= 6) {
            return other(std::stoi(digits));
        }
    }
    throw ParseError("invalid speaker tag '" + std::string(text) + "'", std::string(text));
}

std::string SpeakerTag::to_string() const {
    switch (kind_) {
        case Kind::wearer: return "WEARER";
        case Kind::other: return "OTHER:" + std::to_string(id_);
        case Kind::unknown: break;
    }
    return "UNKNOWN";
}

std::string_view to_string(Provenance p) noexcept {
    switch (p) {
        case Provenance::consensus: return "CONSENSUS";
        case Provenance::synthetic: return "SYNTHETIC";
        case Provenance::imported: break;
    }
    return "IMPORTED";
}

std::optional<Provenance> parse_provenance(std::string_view text) noexcept {
    for (auto p : {Provenance::consensus, Provenance::synthetic, Provenance::imported}) {
        if (text == to_string(p)) return p;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Curation

std::vector<double> frame_schedule(double duration_s, double frame_rate_hz) {
    if (!(duration_s > 0.0) || !(frame_rate_hz > 0.0)) {
        throw ValidationError("frame schedule needs positive duration and frame rate");
    }
    const auto count = static_cast<std::size_t>(std::ceil(duration_s * frame_rate_hz - 1e-9));
    std::vector<double> times;
    times.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        times.push_back(static_cast<double>(i) / frame_rate_hz);
    }
    return times;
}

std::vector<Segment> segmentize_clip(const std::string& clip_id, double clip_duration_s, double window_s,
                                     double frame_rate_hz) {
    if (!(clip_duration_s > 0.0)) throw ValidationError("clip_duration_s must be positive");
    if (!(window_s > 0.0)) throw ValidationError("window_s must be positive");
    if (!(frame_rate_hz > 0.0)) throw ValidationError("frame_rate_hz must be positive");

    const auto count = static_cast<std::size_t>(std::floor(clip_duration_s / window_s + 1e-9));
    const std::vector<double> times = frame_schedule(window_s, frame_rate_hz);

    std::vector<Segment> segments;
    segments.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::ostringstream id;
        id << clip_id << '_' << std::setw(4) << std::setfill('0') << k;

        Segment s;
        s.segment_id = id.str();
        s.clip_id = clip_id;
        s.start_s = static_cast<double>(k) * window_s;
        s.duration_s = window_s;
        s.frame_times = times;
        for (std::size_t f = 0; f < times.size(); ++f) {
            s.frame_refs.push_back(clip_id + "/" + s.segment_id + "/frame_" + std::to_string(f) + ".jpg");
        }
        segments.push_back(std::move(s));
    }
    return segments;
}

std::array<VoteOutcome, kCueCount> majority_vote(std::span<const AnnotationRecord> records) {
    if (records.empty()) throw ValidationError("majority_vote needs at least one annotation record");

    std::set<std::string> annotators;
    for (const auto& r : records) {
        if (r.segment_id != records.front().segment_id) {
            throw ValidationError("annotation records mix segment ids '" + records.front().segment_id + "' and '" +
                                  r.segment_id + "'");
        }
        if (!annotators.insert(r.annotator_id).second) {
            throw ValidationError("segment '" + r.segment_id + "' has two records from annotator '" + r.annotator_id +
                                  "'");
        }
    }

    std::array<VoteOutcome, kCueCount> outcome{};
    for (Cue cue : kAllCues) {
        int high_yes = 0;
        int high_no = 0;
        for (const auto& r : records) {
            if (r.confidence[index_of(cue)] != Confidence::high) continue;
            (r.cues[cue] ? high_yes : high_no) += 1;
        }
        // Both values reaching two HIGH votes is possible with 4+ annotators; that is ambiguous too.
        if (high_yes >= 2 && high_no < 2) {
            outcome[index_of(cue)] = VoteOutcome::yes;
        } else if (high_no >= 2 && high_yes < 2) {
            outcome[index_of(cue)] = VoteOutcome::no;
        } else {
            outcome[index_of(cue)] = VoteOutcome::discard;
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const Utterance& u) {
    j = json{{"speaker", u.speaker.to_string()}, {"start_s", u.start_s}, {"end_s", u.end_s}, {"text", u.text}};
    if (u.nonverbal) j["nonverbal"] = true;
}

void to_json(json& j, const Segment& s) {
    j = json{{"segment_id", s.segment_id}, {"clip_id", s.clip_id},       {"start_s", s.start_s},
             {"duration_s", s.duration_s}, {"frame_times", s.frame_times}, {"frame_refs", s.frame_refs}};
    if (s.audio_ref) j["audio_ref"] = *s.audio_ref;
    if (s.transcript) j["transcript"] = *s.transcript;
}

void to_json(json& j, const LabeledSegment& s) {
    to_json(j, s.segment);
    j["cues"] = cues_to_json(s.consensus);
    j["ground_truth"] = s.ground_truth_interaction;
    j["provenance"] = std::string(to_string(s.provenance));
}

json cues_to_json(const CueVector& cues) {
    json j = json::object();
    for (Cue cue : kAllCues) j[std::string(cue_key(cue))] = cues[cue];
    return j;
}

CueVector cues_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("cues must be an object");
    CueVector v;
    for (Cue cue : kAllCues) {
        const std::string key(cue_key(cue));
        auto it = j.find(key);
        if (it == j.end()) throw ParseError("missing cue '" + key + "'");
        if (!it->is_boolean()) throw ParseError("cue '" + key + "' must be a boolean");
        v[cue] = it->get<bool>();
    }
    return v;
}

std::string Violation::describe() const {
    std::ostringstream out;
    if (line > 0) out << "line " << line << ": ";
    if (!segment_id.empty()) out << "segment '" << segment_id << "': ";
    if (!field.empty()) out << field << ": ";
    out << message;
    return out.str();
}

namespace {

struct ManifestHeader {
    std::string name;
    double frame_rate_hz = 1.0;
    double segment_duration_s = 10.0;
};

/// Pulls typed fields out of one JSON record, recording a Violation for each problem.
class RecordReader {
public:
    RecordReader(const json& record, std::size_t line, std::vector<Violation>& out)
        : record_(record), line_(line), out_(out) {}

    void set_segment_id(std::string id) { segment_id_ = std::move(id); }

    void fail(std::string field, std::string message) {
        out_.push_back(Violation{line_, segment_id_, std::move(field), std::move(message)});
    }

    bool has(const char* field) const { return record_.contains(field) && !record_.at(field).is_null(); }

    std::optional<std::string> string(const char* field, bool required = true) {
        if (!has(field)) {
            if (required) fail(field, "missing");
            return std::nullopt;
        }
        const auto& v = record_.at(field);
        if (!v.is_string()) {
            fail(field, "must be a string");
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    std::optional<double> number(const char* field, bool required = true) {
        if (!has(field)) {
            if (required) fail(field, "missing");
            return std::nullopt;
        }
        const auto& v = record_.at(field);
        if (!v.is_number()) {
            fail(field, "must be a number");
            return std::nullopt;
        }
        return v.get<double>();
    }

    std::optional<bool> boolean(const char* field, bool required = true) {
        if (!has(field)) {
            if (required) fail(field, "missing");
            return std::nullopt;
        }
        const auto& v = record_.at(field);
        if (!v.is_boolean()) {
            fail(field, "must be a boolean");
            return std::nullopt;
        }
        return v.get<bool>();
    }

    const json* array(const char* field, bool required = true) {
        if (!has(field)) {
            if (required) fail(field, "missing");
            return nullptr;
        }
        const auto& v = record_.at(field);
        if (!v.is_array()) {
            fail(field, "must be an array");
            return nullptr;
        }
        return &v;
    }

    std::optional<CueVector> cues(const char* field) {
        if (!has(field)) {
            fail(field, "missing");
            return std::nullopt;
        }
        try {
            return cues_from_json(record_.at(field));
        } catch (const ParseError& e) {
            fail(field, e.what());
            return std::nullopt;
        }
    }

private:
    const json& record_;
    std::size_t line_;
    std::vector<Violation>& out_;
    std::string segment_id_;
};

std::optional<std::vector<Utterance>> parse_transcript(const json& arr, RecordReader& reader) {
    std::vector<Utterance> transcript;
    bool ok = true;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string field = "transcript[" + std::to_string(i) + "]";
        const json& u = arr[i];
        if (!u.is_object()) {
            reader.fail(field, "must be an object");
            ok = false;
            continue;
        }
        Utterance utt;
        try {
            utt.speaker = SpeakerTag::parse(u.at("speaker").get<std::string>());
            utt.start_s = u.at("start_s").get<double>();
            utt.end_s = u.at("end_s").get<double>();
            utt.text = u.at("text").get<std::string>();
            utt.nonverbal = u.value("nonverbal", false);
        } catch (const std::exception& e) {
            reader.fail(field, std::string("malformed utterance: ") + e.what());
            ok = false;
            continue;
        }
        transcript.push_back(std::move(utt));
    }
    if (!ok) return std::nullopt;
    return transcript;
}

std::optional<AnnotationRecord> parse_annotation(const json& a, const std::string& segment_id,
                                                 const std::string& field, RecordReader& reader) {
    if (!a.is_object()) {
        reader.fail(field, "must be an object");
        return std::nullopt;
    }
    AnnotationRecord record;
    record.segment_id = a.value("segment_id", segment_id);
    try {
        record.annotator_id = a.at("annotator_id").get<std::string>();
        record.cues = cues_from_json(a.at("cues"));
        const json& conf = a.at("confidence");
        for (Cue cue : kAllCues) {
            const std::string level = conf.at(std::string(cue_key(cue))).get<std::string>();
            if (level == "HIGH") {
                record.confidence[index_of(cue)] = Confidence::high;
            } else if (level == "LOW") {
                record.confidence[index_of(cue)] = Confidence::low;
            } else {
                throw ParseError("confidence must be HIGH or LOW, got '" + level + "'");
            }
        }
    } catch (const std::exception& e) {
        reader.fail(field, std::string("malformed annotation: ") + e.what());
        return std::nullopt;
    }
    return record;
}

struct ParsedRecord {
    std::string segment_id;
    std::optional<LabeledSegment> labeled;
    std::optional<DiscardedSegment> discarded;
};

ParsedRecord parse_record(const json& record, std::size_t line, const ManifestHeader& header,
                          std::vector<Violation>& violations) {
    ParsedRecord result;
    RecordReader reader(record, line, violations);
    if (!record.is_object()) {
        reader.fail("", "record must be a JSON object");
        return result;
    }

    const std::size_t before = violations.size();
    LabeledSegment ls;
    Segment& s = ls.segment;

    if (auto id = reader.string("segment_id")) {
        if (id->empty()) reader.fail("segment_id", "must not be empty");
        s.segment_id = *id;
        result.segment_id = *id;
        reader.set_segment_id(*id);
    }
    if (auto clip = reader.string("clip_id")) s.clip_id = *clip;
    if (auto start = reader.number("start_s")) s.start_s = *start;
    s.duration_s = reader.number("duration_s", false).value_or(header.segment_duration_s);

    if (const json* times = reader.array("frame_times")) {
        for (const auto& t : *times) {
            if (!t.is_number()) {
                reader.fail("frame_times", "entries must be numbers");
                break;
            }
            s.frame_times.push_back(t.get<double>());
        }
    }
    if (const json* refs = reader.array("frame_refs")) {
        for (const auto& r : *refs) {
            if (!r.is_string()) {
                reader.fail("frame_refs", "entries must be strings");
                break;
            }
            s.frame_refs.push_back(r.get<std::string>());
        }
    }
    s.audio_ref = reader.string("audio_ref", false);
    if (const json* transcript = reader.array("transcript", false)) {
        s.transcript = parse_transcript(*transcript, reader);
    }

    if (reader.has("annotations")) {
        if (reader.has("cues") || reader.has("ground_truth")) {
            reader.fail("annotations", "record carries both raw annotations and consensus labels");
        }
        std::vector<AnnotationRecord> annotations;
        if (const json* arr = reader.array("annotations")) {
            for (std::size_t i = 0; i < arr->size(); ++i) {
                if (auto a = parse_annotation((*arr)[i], s.segment_id, "annotations[" + std::to_string(i) + "]",
                                              reader)) {
                    annotations.push_back(std::move(*a));
                }
            }
            if (arr->empty()) reader.fail("annotations", "must not be empty");
        }
        if (violations.size() != before) return result;
        std::array<VoteOutcome, kCueCount> votes{};
        try {
            votes = majority_vote(annotations);
        } catch (const ValidationError& e) {
            reader.fail("annotations", e.what());
            return result;
        }
        DiscardedSegment d{s.segment_id, CueSet::none()};
        for (Cue cue : kAllCues) {
            switch (votes[index_of(cue)]) {
                case VoteOutcome::yes: ls.consensus[cue] = true; break;
                case VoteOutcome::no: ls.consensus[cue] = false; break;
                case VoteOutcome::discard: d.ambiguous_cues.insert(cue); break;
            }
        }
        ls.ground_truth_interaction = derive_ground_truth(ls.consensus);
        ls.provenance = Provenance::consensus;
        for (auto& v : check_segment(ls, header.frame_rate_hz)) {
            v.line = line;
            violations.push_back(std::move(v));
        }
        if (violations.size() != before) return result;
        if (!d.ambiguous_cues.empty()) {
            result.discarded = std::move(d);
        } else {
            result.labeled = std::move(ls);
        }
        return result;
    }

    if (auto cues = reader.cues("cues")) ls.consensus = *cues;
    if (auto gt = reader.boolean("ground_truth")) ls.ground_truth_interaction = *gt;
    if (auto prov = reader.string("provenance", false)) {
        if (auto p = parse_provenance(*prov)) {
            ls.provenance = *p;
        } else {
            reader.fail("provenance", "unknown provenance '" + *prov + "'");
        }
    }
    if (violations.size() != before) return result;

    for (auto& v : check_segment(ls, header.frame_rate_hz)) {
        v.line = line;
        violations.push_back(std::move(v));
    }
    if (violations.size() == before) result.labeled = std::move(ls);
    return result;
}

std::optional<ManifestHeader> parse_header(const json& record, std::size_t line, std::vector<Violation>& violations) {
    if (!record.is_object() || !record.contains("manifest")) return std::nullopt;
    ManifestHeader header;
    const json& m = record.at("manifest");
    RecordReader reader(m, line, violations);
    if (!m.is_object()) {
        reader.fail("manifest", "header must be an object");
        return header;
    }
    header.name = reader.string("name", false).value_or("");
    if (auto rate = reader.number("frame_rate_hz", false)) {
        if (*rate > 0.0) {
            header.frame_rate_hz = *rate;
        } else {
            reader.fail("frame_rate_hz", "must be positive");
        }
    }
    if (auto dur = reader.number("segment_duration_s", false)) {
        if (*dur > 0.0) {
            header.segment_duration_s = *dur;
        } else {
            reader.fail("segment_duration_s", "must be positive");
        }
    }
    return header;
}

struct ScanResult {
    DatasetManifest manifest;
    std::size_t records = 0;
    std::vector<Violation> violations;
    std::optional<ParseError> parse_error;
};

ScanResult scan_manifest(std::istream& in, std::string_view source_name) {
    ScanResult scan;
    ManifestHeader header;
    header.name = std::filesystem::path(source_name).stem().string();
    std::unordered_set<std::string> seen;

    std::string text;
    std::size_t line = 0;
    bool first_record = true;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r') text.pop_back();
        if (text.find_first_not_of(" \t") == std::string::npos) continue;

        json record;
        try {
            record = json::parse(text);
        } catch (const json::parse_error& e) {
            const std::string message =
                std::string(source_name) + ":" + std::to_string(line) + ": invalid JSON: " + e.what();
            scan.violations.push_back(Violation{line, "", "", std::string("invalid JSON: ") + e.what()});
            if (!scan.parse_error) scan.parse_error.emplace(message, text);
            continue;
        }

        if (first_record) {
            first_record = false;
            if (auto h = parse_header(record, line, scan.violations)) {
                if (!h->name.empty()) header.name = h->name;
                header.frame_rate_hz = h->frame_rate_hz;
                header.segment_duration_s = h->segment_duration_s;
                continue;
            }
        }

        ++scan.records;
        ParsedRecord parsed = parse_record(record, line, header, scan.violations);
        const std::string& id = parsed.segment_id;
        if (!id.empty() && !seen.insert(id).second) {
            scan.violations.push_back(Violation{line, id, "segment_id", "duplicate segment_id '" + id + "'"});
            continue;
        }
        if (parsed.labeled) scan.manifest.segments.push_back(std::move(*parsed.labeled));
        if (parsed.discarded) scan.manifest.discarded.push_back(std::move(*parsed.discarded));
    }

    scan.manifest.name = header.name;
    scan.manifest.frame_rate_hz = header.frame_rate_hz;
    scan.manifest.segment_duration_s = header.segment_duration_s;
    return scan;
}

}  // namespace

std::vector<Violation> check_segment(const LabeledSegment& ls, double frame_rate_hz) {
    std::vector<Violation> out;
    const Segment& s = ls.segment;
    auto fail = [&](std::string field, std::string message) {
        out.push_back(Violation{0, s.segment_id, std::move(field), std::move(message)});
    };

    if (s.segment_id.empty()) fail("segment_id", "must not be empty");
    if (s.start_s < 0.0) fail("start_s", "must be non-negative");
    if (!(s.duration_s > 0.0)) {
        fail("duration_s", "must be positive");
        return out;
    }

    for (std::size_t i = 0; i < s.frame_times.size(); ++i) {
        const double t = s.frame_times[i];
        if (t < 0.0 || t >= s.duration_s) {
            fail("frame_times", "frame time " + std::to_string(t) + " outside [0, duration_s)");
            break;
        }
        if (i > 0 && !(t > s.frame_times[i - 1])) {
            fail("frame_times", "must be strictly increasing (index " + std::to_string(i) + ")");
            break;
        }
    }
    if (frame_rate_hz > 0.0) {
        const auto expected = static_cast<std::size_t>(std::ceil(s.duration_s * frame_rate_hz - 1e-9));
        if (s.frame_times.size() != expected) {
            fail("frame_times", "expected " + std::to_string(expected) + " frames at the manifest frame rate, got " +
                                    std::to_string(s.frame_times.size()));
        }
    }
    if (s.frame_refs.size() != s.frame_times.size()) {
        fail("frame_refs", "length " + std::to_string(s.frame_refs.size()) + " differs from frame_times length " +
                               std::to_string(s.frame_times.size()));
    }

    if (s.transcript) {
        const auto& tr = *s.transcript;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const std::string field = "transcript[" + std::to_string(i) + "]";
            const Utterance& u = tr[i];
            if (!(u.start_s >= 0.0) || !(u.end_s <= s.duration_s) || !(u.start_s < u.end_s)) {
                fail(field, "needs 0 <= start_s < end_s <= duration_s");
            }
            if (u.text.empty() && !u.nonverbal) fail(field, "empty text on a verbal utterance");
            if (i > 0 && u.start_s < tr[i - 1].start_s) fail(field, "utterances not ordered by start_s");
        }
    }

    if (ls.ground_truth_interaction != derive_ground_truth(ls.consensus)) {
        fail("ground_truth", "stated ground truth contradicts aud OR udsd");
    }
    return out;
}

ValidationReport validate_manifest_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    ScanResult scan = scan_manifest(in, path.string());
    ValidationReport report;
    report.source = path.string();
    report.records = scan.records;
    report.violations = std::move(scan.violations);
    return report;
}

DatasetManifest read_manifest(std::istream& in, std::string_view source_name) {
    ScanResult scan = scan_manifest(in, source_name);
    if (scan.parse_error) throw *scan.parse_error;
    if (!scan.violations.empty()) {
        std::ostringstream msg;
        msg << source_name << ": " << scan.violations.size() << " violation(s); first: "
            << scan.violations.front().describe();
        throw ValidationError(msg.str());
    }
    return std::move(scan.manifest);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    return read_manifest(in, path.string());
}

void write_manifest(const DatasetManifest& manifest, std::ostream& out) {
    json header{{"manifest",
                 {{"name", manifest.name},
                  {"frame_rate_hz", manifest.frame_rate_hz},
                  {"segment_duration_s", manifest.segment_duration_s}}}};
    out << header.dump() << '\n';
    for (const auto& s : manifest.segments) {
        out << json(s).dump() << '\n';
    }
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ostringstream buffer;
    write_manifest(manifest, buffer);
    write_file_atomic(path, buffer.str());
}

// ---------------------------------------------------------------------------
// Statistics

std::array<std::string, kStatVariables> stat_variable_names() {
    std::array<std::string, kStatVariables> names;
    for (Cue cue : kAllCues) names[index_of(cue)] = std::string(cue_acronym(cue));
    names[kCueCount] = "GROUND_TRUTH";
    return names;
}

namespace {

std::array<bool, kStatVariables> stat_row(const LabeledSegment& s) {
    std::array<bool, kStatVariables> row{};
    for (Cue cue : kAllCues) row[index_of(cue)] = s.consensus[cue];
    row[kCueCount] = s.ground_truth_interaction;
    return row;
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

}  // namespace

DistributionReport distribution_report(const DatasetManifest& manifest) {
    if (manifest.segments.empty()) throw ValidationError("distribution report needs a non-empty manifest");
    DistributionReport report;
    report.segment_count = manifest.segments.size();
    report.pair_count = manifest.pair_count();
    const auto names = stat_variable_names();
    for (std::size_t v = 0; v < kStatVariables; ++v) report.variables[v].name = names[v];
    for (const auto& s : manifest.segments) {
        const auto row = stat_row(s);
        for (std::size_t v = 0; v < kStatVariables; ++v) report.variables[v].positives += row[v] ? 1 : 0;
    }
    for (auto& v : report.variables) {
        v.rate = static_cast<double>(v.positives) / static_cast<double>(report.segment_count);
    }
    return report;
}

std::string DistributionReport::to_csv() const {
    std::ostringstream out;
    out << "variable,positives,segments,rate\n";
    for (const auto& v : variables) {
        out << v.name << ',' << v.positives << ',' << segment_count << ',' << format_double(v.rate) << '\n';
    }
    return out.str();
}

json DistributionReport::to_json() const {
    json vars = json::array();
    for (const auto& v : variables) {
        vars.push_back({{"name", v.name}, {"positives", v.positives}, {"rate", v.rate}});
    }
    return json{{"segments", segment_count}, {"pairs", pair_count}, {"variables", vars}};
}

CorrelationMatrix cue_correlation_matrix(const DatasetManifest& manifest) {
    const std::size_t n = manifest.segments.size();
    if (n < 2) throw ValidationError("correlation needs at least two segments");

    // Phi from the 2x2 co-occurrence counts of each variable pair.
    std::array<std::size_t, kStatVariables> ones{};
    std::array<std::array<std::size_t, kStatVariables>, kStatVariables> both{};
    for (const auto& s : manifest.segments) {
        const auto row = stat_row(s);
        for (std::size_t i = 0; i < kStatVariables; ++i) {
            if (!row[i]) continue;
            ++ones[i];
            for (std::size_t j = 0; j < kStatVariables; ++j) {
                if (row[j]) ++both[i][j];
            }
        }
    }

    CorrelationMatrix m;
    m.names = stat_variable_names();
    const auto nd = static_cast<double>(n);
    for (std::size_t i = 0; i < kStatVariables; ++i) {
        for (std::size_t j = 0; j < kStatVariables; ++j) {
            const bool constant_i = ones[i] == 0 || ones[i] == n;
            const bool constant_j = ones[j] == 0 || ones[j] == n;
            if (constant_i || constant_j) {
                m.values[i][j] = std::nullopt;
                continue;
            }
            if (i == j) {
                m.values[i][j] = 1.0;
                continue;
            }
            const auto ni = static_cast<double>(ones[i]);
            const auto nj = static_cast<double>(ones[j]);
            const double numerator = nd * static_cast<double>(both[i][j]) - ni * nj;
            const double denominator = std::sqrt(ni * (nd - ni)) * std::sqrt(nj * (nd - nj));
            m.values[i][j] = std::clamp(numerator / denominator, -1.0, 1.0);
        }
    }
    return m;
}

std::string CorrelationMatrix::to_csv() const {
    std::ostringstream out;
    out << "variable";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < kStatVariables; ++i) {
        out << names[i];
        for (std::size_t j = 0; j < kStatVariables; ++j) {
            out << ',';
            if (values[i][j]) {
                out << format_double(*values[i][j]);
            } else {
                out << kUndefinedMarker;
            }
        }
        out << '\n';
    }
    return out.str();
}

json CorrelationMatrix::to_json() const {
    json rows = json::array();
    for (std::size_t i = 0; i < kStatVariables; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < kStatVariables; ++j) {
            row.push_back(values[i][j] ? json(*values[i][j]) : json(std::string(kUndefinedMarker)));
        }
        rows.push_back(std::move(row));
    }
    return json{{"variables", names}, {"matrix", rows}};
}

}  // namespace egosod
