#include "egosod/detectors.hpp"

#include <sstream>

#include "egosod/error.hpp"
#include "egosod/random.hpp"
#include "egosod/remote.hpp"

namespace egosod {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CuePredictions

void CuePredictions::set(Cue cue, const CueAnswer& answer) {
    const auto i = index_of(cue);
    values[i] = answer.value;
    confidence[i] = answer.confidence;
    raw_responses[i] = answer.raw;
    if (answer.parse_failed) {
        parse_failed.insert(cue);
    } else {
        parse_failed.erase(cue);
    }
}

CueSet CuePredictions::queried() const noexcept {
    CueSet set;
    for (Cue cue : kAllCues) {
        if (values[index_of(cue)]) set.insert(cue);
    }
    return set;
}

std::optional<CueVector> CuePredictions::complete() const {
    CueVector v;
    for (Cue cue : kAllCues) {
        if (!values[index_of(cue)]) return std::nullopt;
        v[cue] = *values[index_of(cue)];
    }
    return v;
}

void to_json(json& j, const CuePredictions& p) {
    json values = json::object();
    json confidence = json::object();
    json raw = json::object();
    json failed = json::array();
    for (Cue cue : kAllCues) {
        const std::string key(cue_key(cue));
        const auto i = index_of(cue);
        if (p.values[i]) values[key] = *p.values[i];
        if (p.confidence[i]) confidence[key] = *p.confidence[i];
        if (p.raw_responses[i]) raw[key] = *p.raw_responses[i];
        if (p.parse_failed.contains(cue)) failed.push_back(key);
    }
    j = json{{"segment_id", p.segment_id}, {"backend_id", p.backend_id}, {"values", values}};
    if (!confidence.empty()) j["confidence"] = confidence;
    if (!raw.empty()) j["raw_responses"] = raw;
    if (!failed.empty()) j["parse_failed"] = failed;
}

void from_json(const json& j, CuePredictions& p) {
    p = CuePredictions{};
    p.segment_id = j.at("segment_id").get<std::string>();
    p.backend_id = j.value("backend_id", std::string());
    for (Cue cue : kAllCues) {
        const std::string key(cue_key(cue));
        const auto i = index_of(cue);
        if (j.contains("values") && j["values"].contains(key)) p.values[i] = j["values"][key].get<bool>();
        if (j.contains("confidence") && j["confidence"].contains(key)) {
            p.confidence[i] = j["confidence"][key].get<double>();
            if (!p.values[i]) throw ParseError("prediction for '" + key + "' has a confidence but no value");
        }
        if (j.contains("raw_responses") && j["raw_responses"].contains(key)) {
            p.raw_responses[i] = j["raw_responses"][key].get<std::string>();
        }
    }
    if (j.contains("parse_failed")) {
        for (const auto& name : j["parse_failed"]) {
            auto cue = parse_cue(name.get<std::string>());
            if (!cue) throw ParseError("unknown cue in parse_failed: " + name.dump());
            p.parse_failed.insert(*cue);
        }
    }
}

// ---------------------------------------------------------------------------
// Specs

std::string_view to_string(BackendKind kind) noexcept {
    switch (kind) {
        case BackendKind::oracle: return "oracle";
        case BackendKind::noisy: return "noisy";
        case BackendKind::remote: return "remote";
        case BackendKind::replay: break;
    }
    return "replay";
}

std::optional<BackendKind> parse_backend_kind(std::string_view text) noexcept {
    for (auto k : {BackendKind::oracle, BackendKind::noisy, BackendKind::remote, BackendKind::replay}) {
        if (text == to_string(k)) return k;
    }
    return std::nullopt;
}

NoisySpec NoisySpec::uniform(double tpr, double tnr, std::uint64_t seed) {
    NoisySpec spec;
    spec.tpr.fill(tpr);
    spec.tnr.fill(tnr);
    spec.seed = seed;
    return spec;
}

void BackendSpec::validate() const {
    const std::string name(to_string(kind));
    switch (kind) {
        case BackendKind::oracle:
            if (noisy || remote) throw ValidationError("oracle backend takes no noisy or remote block");
            return;
        case BackendKind::noisy:
            if (!noisy) throw ValidationError("noisy backend needs a noisy block");
            if (remote) throw ValidationError("noisy backend takes no remote block");
            for (Cue cue : kAllCues) {
                const double tpr = noisy->tpr[index_of(cue)];
                const double tnr = noisy->tnr[index_of(cue)];
                if (!(tpr >= 0.0 && tpr <= 1.0) || !(tnr >= 0.0 && tnr <= 1.0)) {
                    throw ValidationError("noisy rates for " + std::string(cue_acronym(cue)) + " must lie in [0, 1]");
                }
            }
            return;
        case BackendKind::remote:
        case BackendKind::replay:
            if (!remote) throw ValidationError(name + " backend needs a remote block");
            if (noisy) throw ValidationError(name + " backend takes no noisy block");
            if (remote->model.empty()) throw ValidationError(name + " backend needs a model name");
            if (kind == BackendKind::remote && remote->endpoint.empty()) {
                throw ValidationError("remote backend needs an endpoint");
            }
            if (kind == BackendKind::replay && remote->cache_dir.empty()) {
                throw ValidationError("replay backend needs a cache_dir");
            }
            if (remote->max_retries < 0) throw ValidationError("max_retries must be non-negative");
            if (remote->max_concurrent_requests < 1) throw ValidationError("max_concurrent_requests must be >= 1");
            if (remote->timeout.count() <= 0) throw ValidationError("timeout must be positive");
            return;
    }
}

std::string BackendSpec::id() const {
    std::ostringstream out;
    out << to_string(kind);
    if (kind == BackendKind::noisy && noisy) {
        out << ":seed=" << noisy->seed;
        bool uniform = true;
        for (std::size_t i = 1; i < kCueCount; ++i) {
            uniform = uniform && noisy->tpr[i] == noisy->tpr[0] && noisy->tnr[i] == noisy->tnr[0];
        }
        if (uniform) out << ":tpr=" << noisy->tpr[0] << ":tnr=" << noisy->tnr[0];
    }
    if ((kind == BackendKind::remote || kind == BackendKind::replay) && remote) out << ':' << remote->model;
    return out.str();
}

namespace {

json rates_to_json(const std::array<double, kCueCount>& rates) {
    json j = json::object();
    for (Cue cue : kAllCues) j[std::string(cue_key(cue))] = rates[index_of(cue)];
    return j;
}

std::array<double, kCueCount> rates_from_json(const json& j, const char* field) {
    std::array<double, kCueCount> rates{};
    if (j.is_number()) {
        rates.fill(j.get<double>());
        return rates;
    }
    if (!j.is_object()) throw ParseError(std::string(field) + " must be a number or a per-cue object");
    for (Cue cue : kAllCues) {
        const std::string key(cue_key(cue));
        if (!j.contains(key)) throw ParseError(std::string(field) + " is missing cue '" + key + "'");
        rates[index_of(cue)] = j.at(key).get<double>();
    }
    return rates;
}

}  // namespace

void to_json(json& j, const BackendSpec& spec) {
    j = json{{"kind", std::string(to_string(spec.kind))}};
    if (spec.noisy) {
        j["noisy"] = json{{"tpr", rates_to_json(spec.noisy->tpr)},
                          {"tnr", rates_to_json(spec.noisy->tnr)},
                          {"seed", spec.noisy->seed}};
    }
    if (spec.remote) {
        const RemoteSpec& r = *spec.remote;
        j["remote"] = json{{"endpoint", r.endpoint},
                           {"model", r.model},
                           {"timeout_ms", r.timeout.count()},
                           {"max_retries", r.max_retries},
                           {"max_concurrent_requests", r.max_concurrent_requests},
                           {"cache_dir", r.cache_dir.string()},
                           {"api_key_env", r.api_key_env},
                           {"backoff_ms", r.backoff_base.count()},
                           {"inline_media", r.inline_media},
                           {"prompt_dir", r.prompt_dir.string()}};
    }
}

BackendSpec backend_spec_from_json(const json& j, std::uint64_t default_seed) {
    BackendSpec spec;
    const auto kind_text = j.value("kind", std::string("oracle"));
    auto kind = parse_backend_kind(kind_text);
    if (!kind) throw ParseError("unknown backend kind '" + kind_text + "'");
    spec.kind = *kind;

    if (j.contains("noisy")) {
        const json& n = j.at("noisy");
        NoisySpec noisy;
        noisy.tpr = rates_from_json(n.at("tpr"), "tpr");
        noisy.tnr = rates_from_json(n.at("tnr"), "tnr");
        noisy.seed = n.value("seed", default_seed);
        spec.noisy = noisy;
    }
    if (j.contains("remote")) {
        const json& r = j.at("remote");
        RemoteSpec remote;
        remote.endpoint = r.value("endpoint", std::string());
        remote.model = r.value("model", std::string());
        remote.timeout = std::chrono::milliseconds(r.value("timeout_ms", std::int64_t{30'000}));
        remote.max_retries = r.value("max_retries", 3);
        remote.max_concurrent_requests = r.value("max_concurrent_requests", 4);
        remote.cache_dir = r.value("cache_dir", std::string());
        remote.api_key_env = r.value("api_key_env", std::string());
        remote.backoff_base = std::chrono::milliseconds(r.value("backoff_ms", std::int64_t{500}));
        remote.inline_media = r.value("inline_media", false);
        remote.prompt_dir = r.value("prompt_dir", std::string());
        spec.remote = remote;
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Backends

CueAnswer OracleBackend::answer_cue(const LabeledSegment& segment, Cue cue, const ModalityConfig&) {
    return CueAnswer{segment.consensus[cue], std::nullopt, std::nullopt, false};
}

CueAnswer OracleBackend::answer_final(const LabeledSegment& segment, const ModalityConfig&, const PromptVariant&,
                                      const std::optional<CueVector>&) {
    return CueAnswer{segment.ground_truth_interaction, std::nullopt, std::nullopt, false};
}

NoisyBackend::NoisyBackend(NoisySpec spec) : spec_(spec) {}

std::string NoisyBackend::id() const {
    return BackendSpec{BackendKind::noisy, spec_, std::nullopt}.id();
}

bool NoisyBackend::noisy_value(const LabeledSegment& segment, Cue cue) const {
    const auto i = index_of(cue);
    CounterStream stream(spec_.seed, fnv1a64(segment.segment.segment_id) ^ mix64(i + 1));
    const double u = stream.next_double();
    const bool truth = segment.consensus[cue];
    // u >= rate happens with probability 1 - rate.
    if (truth) return !(u >= spec_.tpr[i]);
    return u >= spec_.tnr[i];
}

CueAnswer NoisyBackend::answer_cue(const LabeledSegment& segment, Cue cue, const ModalityConfig&) {
    return CueAnswer{noisy_value(segment, cue), std::nullopt, std::nullopt, false};
}

CueAnswer NoisyBackend::answer_final(const LabeledSegment& segment, const ModalityConfig&, const PromptVariant&,
                                     const std::optional<CueVector>&) {
    return CueAnswer{noisy_value(segment, Cue::aud) || noisy_value(segment, Cue::udsd), std::nullopt, std::nullopt,
                     false};
}

std::unique_ptr<CueBackend> make_backend(const BackendSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case BackendKind::oracle: return std::make_unique<OracleBackend>();
        case BackendKind::noisy: return std::make_unique<NoisyBackend>(*spec.noisy);
        case BackendKind::remote: return std::make_unique<RemoteBackend>(*spec.remote, RemoteBackend::Mode::live);
        case BackendKind::replay: return std::make_unique<RemoteBackend>(*spec.remote, RemoteBackend::Mode::replay);
    }
    throw ValidationError("unknown backend kind");
}

CuePredictions predict(CueBackend& backend, const LabeledSegment& segment, CueSet requested,
                       const ModalityConfig& modality) {
    CuePredictions out;
    out.segment_id = segment.segment.segment_id;
    out.backend_id = backend.id();
    for (Cue cue : kAllCues) {
        if (requested.contains(cue)) out.set(cue, backend.answer_cue(segment, cue, modality));
    }
    return out;
}

}  // namespace egosod
