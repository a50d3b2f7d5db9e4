#include "egosod/synthgen.hpp"

#include <cstdio>
#include <numeric>

#include "egosod/error.hpp"
#include "egosod/random.hpp"

namespace egosod {

using nlohmann::json;

namespace {

constexpr std::size_t kSegmentsPerClip = 30;

constexpr std::array<const char*, 16> kFiller = {
    "lorem", "ipsum", "dolor", "sit",    "amet",   "consectetur", "adipiscing", "elit",
    "sed",   "do",    "tempor", "magna", "aliqua", "veniam",      "quis",       "nostrud"};

std::string padded(std::size_t value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, value);
    return buf;
}

std::string filler_text(CounterStream& rng) {
    const auto words = 3 + rng.next_below(5);
    std::string text;
    for (std::uint64_t i = 0; i < words; ++i) {
        if (!text.empty()) text += ' ';
        text += kFiller[rng.next_below(kFiller.size())];
    }
    return text;
}

std::vector<Utterance> synth_transcript(const CueVector& cues, double duration_s, CounterStream& rng) {
    std::vector<SpeakerTag> speakers;
    if (cues[Cue::stad]) {
        // Turn alternation between two distinct speakers; the wearer takes part iff UDSD.
        const SpeakerTag a = SpeakerTag::other(1);
        const SpeakerTag b = cues[Cue::udsd] ? SpeakerTag::wearer() : SpeakerTag::other(2);
        const auto turns = 2 + rng.next_below(3);
        const bool a_first = rng.bernoulli(0.5);
        for (std::uint64_t t = 0; t < turns; ++t) speakers.push_back(((t % 2 == 0) == a_first) ? a : b);
    } else {
        if (cues[Cue::osad]) speakers.push_back(SpeakerTag::other(1));
        if (cues[Cue::udsd]) speakers.push_back(SpeakerTag::wearer());
        if (speakers.size() == 2 && rng.bernoulli(0.5)) std::swap(speakers[0], speakers[1]);
    }

    std::vector<Utterance> transcript;
    const double slot = speakers.empty() ? 0.0 : duration_s / static_cast<double>(speakers.size());
    for (std::size_t i = 0; i < speakers.size(); ++i) {
        Utterance u;
        u.speaker = speakers[i];
        u.start_s = static_cast<double>(i) * slot + 0.1 * slot;
        u.end_s = static_cast<double>(i + 1) * slot - 0.1 * slot;
        u.text = filler_text(rng);
        transcript.push_back(std::move(u));
    }
    return transcript;
}

std::array<double, kCueCount> probs_from_json(const json& j) {
    std::array<double, kCueCount> probs{};
    if (j.is_number()) {
        probs.fill(j.get<double>());
        return probs;
    }
    if (!j.is_object()) throw ParseError("cue_probs must be a number or a per-cue object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto cue = parse_cue(it.key());
        if (!cue) throw ParseError("unknown cue '" + it.key() + "' in cue_probs");
        probs[index_of(*cue)] = it.value().get<double>();
    }
    return probs;
}

}  // namespace

void GeneratorConfig::validate() const {
    if (name.empty()) throw ValidationError("generator name must not be empty");
    if (n_segments < 1) throw ValidationError("n_segments must be at least 1");
    if (scenarios.empty()) throw ValidationError("generator needs at least one scenario");
    if (!(frame_rate_hz > 0.0)) throw ValidationError("frame_rate_hz must be positive");
    if (!(segment_duration_s > 0.0)) throw ValidationError("segment_duration_s must be positive");
    double total = 0.0;
    for (const auto& s : scenarios) {
        if (!(s.weight >= 0.0)) throw ValidationError("scenario '" + s.name + "' has a negative weight");
        total += s.weight;
        for (Cue cue : kAllCues) {
            const double p = s.cue_probs[index_of(cue)];
            if (!(p >= 0.0 && p <= 1.0)) {
                throw ValidationError("scenario '" + s.name + "': probability for " + std::string(cue_acronym(cue)) +
                                      " outside [0, 1]");
            }
        }
    }
    if (!(total > 0.0)) throw ValidationError("scenario weights sum to zero");
}

GeneratorConfig generator_config_from_json(const json& j) {
    GeneratorConfig c;
    c.name = j.value("name", c.name);
    c.n_segments = j.value("n_segments", c.n_segments);
    c.seed = j.value("seed", c.seed);
    c.frame_rate_hz = j.value("frame_rate_hz", c.frame_rate_hz);
    c.segment_duration_s = j.value("segment_duration_s", c.segment_duration_s);
    c.emit_transcripts = j.value("emit_transcripts", c.emit_transcripts);
    if (!j.contains("scenarios") || !j.at("scenarios").is_array()) {
        throw ParseError("generator config needs a 'scenarios' array");
    }
    for (const auto& s : j.at("scenarios")) {
        Scenario scenario;
        scenario.name = s.value("name", std::string("scenario"));
        scenario.weight = s.value("weight", 1.0);
        if (s.contains("cue_probs")) scenario.cue_probs = probs_from_json(s.at("cue_probs"));
        c.scenarios.push_back(std::move(scenario));
    }
    c.validate();
    return c;
}

void to_json(json& j, const GeneratorConfig& c) {
    json scenarios = json::array();
    for (const auto& s : c.scenarios) {
        json probs = json::object();
        for (Cue cue : kAllCues) probs[std::string(cue_key(cue))] = s.cue_probs[index_of(cue)];
        scenarios.push_back(json{{"name", s.name}, {"weight", s.weight}, {"cue_probs", probs}});
    }
    j = json{{"name", c.name},
             {"n_segments", c.n_segments},
             {"seed", c.seed},
             {"frame_rate_hz", c.frame_rate_hz},
             {"segment_duration_s", c.segment_duration_s},
             {"emit_transcripts", c.emit_transcripts},
             {"scenarios", scenarios}};
}

CueVector consistency_repair(const CueVector& raw) noexcept {
    CueVector out = raw;
    if (out[Cue::stad] || out[Cue::aud]) out[Cue::osad] = true;
    return out;
}

std::array<double, kCueCount> implied_prevalences(const GeneratorConfig& config) {
    config.validate();
    double total = 0.0;
    for (const auto& s : config.scenarios) total += s.weight;

    std::array<double, kCueCount> rates{};
    for (const auto& s : config.scenarios) {
        const double w = s.weight / total;
        const auto& p = s.cue_probs;
        for (Cue cue : kAllCues) rates[index_of(cue)] += w * p[index_of(cue)];
        // OSAD ends up true unless OSAD, STAD and AUD are all drawn false.
        const double osad_off = (1.0 - p[index_of(Cue::osad)]) * (1.0 - p[index_of(Cue::stad)]) *
                                (1.0 - p[index_of(Cue::aud)]);
        rates[index_of(Cue::osad)] += w * (1.0 - osad_off) - w * p[index_of(Cue::osad)];
    }
    return rates;
}

LabeledSegment generate_segment(const GeneratorConfig& config, std::size_t index) {
    CounterStream rng(config.seed, index);

    double total = 0.0;
    for (const auto& s : config.scenarios) total += s.weight;
    const double pick = rng.next_double() * total;
    const Scenario* scenario = &config.scenarios.back();
    double cumulative = 0.0;
    for (const auto& s : config.scenarios) {
        cumulative += s.weight;
        if (pick < cumulative && s.weight > 0.0) {
            scenario = &s;
            break;
        }
    }

    CueVector raw;
    for (Cue cue : kAllCues) raw[cue] = rng.bernoulli(scenario->cue_probs[index_of(cue)]);

    LabeledSegment ls;
    ls.consensus = consistency_repair(raw);
    ls.ground_truth_interaction = derive_ground_truth(ls.consensus);
    ls.provenance = Provenance::synthetic;

    Segment& s = ls.segment;
    s.segment_id = config.name + "-" + padded(index, 6);
    s.clip_id = config.name + "-clip-" + padded(index / kSegmentsPerClip, 4);
    s.start_s = static_cast<double>(index % kSegmentsPerClip) * config.segment_duration_s;
    s.duration_s = config.segment_duration_s;
    s.frame_times = frame_schedule(config.segment_duration_s, config.frame_rate_hz);
    for (std::size_t f = 0; f < s.frame_times.size(); ++f) {
        s.frame_refs.push_back("synthetic://" + s.segment_id + "/frame_" + padded(f, 2) + ".jpg");
    }
    s.audio_ref = "synthetic://" + s.segment_id + "/audio.wav";
    if (config.emit_transcripts) s.transcript = synth_transcript(ls.consensus, config.segment_duration_s, rng);
    return ls;
}

DatasetManifest generate(const GeneratorConfig& config) {
    config.validate();
    DatasetManifest m;
    m.name = config.name;
    m.frame_rate_hz = config.frame_rate_hz;
    m.segment_duration_s = config.segment_duration_s;
    m.segments.reserve(config.n_segments);
    for (std::size_t i = 0; i < config.n_segments; ++i) m.segments.push_back(generate_segment(config, i));
    return m;
}

}  // namespace egosod
