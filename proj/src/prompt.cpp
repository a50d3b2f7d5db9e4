#include "egosod/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "egosod/error.hpp"
#include "egosod/io.hpp"
#include "egosod_builtin_prompts.hpp"

namespace egosod {

using nlohmann::json;

std::string_view to_string(ModalityMode mode) noexcept {
    switch (mode) {
        case ModalityMode::video_only: return "video_only";
        case ModalityMode::audio_video: return "audio_video";
        case ModalityMode::audio_video_text: return "audio_video_text";
        case ModalityMode::audio_video_text_conv: break;
    }
    return "audio_video_text_conv";
}

std::optional<ModalityMode> parse_modality_mode(std::string_view text) noexcept {
    for (auto m : {ModalityMode::video_only, ModalityMode::audio_video, ModalityMode::audio_video_text,
                   ModalityMode::audio_video_text_conv}) {
        if (text == to_string(m)) return m;
    }
    return std::nullopt;
}

void PromptVariant::validate() const {
    if (dep && base != Base::graph) {
        throw ValidationError("prompt variant '" + label() + "': dep requires the graph base");
    }
}

std::string PromptVariant::label() const {
    std::string out = base == Base::graph ? "graph" : "auto";
    if (dep) out += "-dep";
    if (think) out += "-think";
    if (hier) out += "-h";
    return out;
}

PromptVariant PromptVariant::parse(std::string_view label) {
    PromptVariant v;
    std::string lowered(label);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::istringstream parts(lowered);
    std::string part;
    bool first = true;
    while (std::getline(parts, part, '-')) {
        if (first) {
            first = false;
            if (part == "auto") {
                v.base = Base::automatic;
            } else if (part == "graph") {
                v.base = Base::graph;
            } else {
                throw ParseError("prompt variant must start with 'auto' or 'graph': '" + std::string(label) + "'");
            }
        } else if (part == "dep") {
            v.dep = true;
        } else if (part == "think") {
            v.think = true;
        } else if (part == "h" || part == "hier") {
            v.hier = true;
        } else {
            throw ParseError("unknown prompt variant flag '" + part + "'");
        }
    }
    if (first) throw ParseError("empty prompt variant label");
    v.validate();
    return v;
}

std::string query_name(const QueryTarget& target) {
    if (const Cue* cue = std::get_if<Cue>(&target)) return std::string(cue_acronym(*cue));
    return "FINAL_DECISION";
}

// ---------------------------------------------------------------------------
// Templates

namespace {

std::string trim_trailing_newlines(std::string_view text) {
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.remove_suffix(1);
    return std::string(text);
}

void replace_all(std::string& text, std::string_view placeholder, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(placeholder, pos)) != std::string::npos) {
        text.replace(pos, placeholder.size(), value);
        pos += value.size();
    }
}

/// Drops every line containing `placeholder`.
void remove_placeholder_lines(std::string& text, std::string_view placeholder) {
    std::size_t pos;
    while ((pos = text.find(placeholder)) != std::string::npos) {
        const std::size_t begin = text.rfind('\n', pos) == std::string::npos ? 0 : text.rfind('\n', pos) + 1;
        std::size_t end = text.find('\n', pos);
        end = end == std::string::npos ? text.size() : end + 1;
        text.erase(begin, end - begin);
    }
}

}  // namespace

const PromptTemplates& PromptTemplates::builtin() {
    static const PromptTemplates templates = [] {
        PromptTemplates t;
        t.version = trim_trailing_newlines(builtin_prompts::version);
        t.cue = trim_trailing_newlines(builtin_prompts::cue);
        t.final_auto = trim_trailing_newlines(builtin_prompts::final_auto);
        t.final_graph = trim_trailing_newlines(builtin_prompts::final_graph);
        t.transcript = trim_trailing_newlines(builtin_prompts::transcript);
        t.dep = trim_trailing_newlines(builtin_prompts::dep);
        t.think = trim_trailing_newlines(builtin_prompts::think);
        t.hier = trim_trailing_newlines(builtin_prompts::hier);
        return t;
    }();
    return templates;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    auto read = [&](const char* name) { return trim_trailing_newlines(read_file(dir / name)); };
    PromptTemplates t;
    t.version = read("VERSION");
    t.cue = read("cue.txt");
    t.final_auto = read("final_auto.txt");
    t.final_graph = read("final_graph.txt");
    t.transcript = read("transcript.txt");
    t.dep = read("dep.txt");
    t.think = read("think.txt");
    t.hier = read("hier.txt");
    return t;
}

// ---------------------------------------------------------------------------
// Rendering

std::vector<std::size_t> sample_frame_indices(std::size_t frame_count, std::size_t budget) {
    if (budget == 0) throw ValidationError("frame budget must be positive");
    if (budget > frame_count) {
        throw ValidationError("frame budget " + std::to_string(budget) + " exceeds the segment's " +
                              std::to_string(frame_count) + " frames");
    }
    if (budget == 1) return {0};
    std::vector<std::size_t> indices;
    indices.reserve(budget);
    for (std::size_t i = 0; i < budget; ++i) {
        indices.push_back(i * (frame_count - 1) / (budget - 1));
    }
    return indices;
}

std::string format_transcript(const std::vector<Utterance>& transcript, bool conv) {
    std::string out;
    for (const auto& u : transcript) {
        if (conv) {
            if (!out.empty()) out += '\n';
            switch (u.speaker.kind()) {
                case SpeakerTag::Kind::wearer: out += "Me"; break;
                case SpeakerTag::Kind::other: out += "Speaker " + std::to_string(u.speaker.id()); break;
                case SpeakerTag::Kind::unknown: out += "Speaker ?"; break;
            }
            out += ": ";
            out += u.text;
        } else {
            if (u.text.empty()) continue;
            if (!out.empty()) out += ' ';
            out += u.text;
        }
    }
    return out;
}

Prompt build_prompt(const Segment& segment, const QueryTarget& target, const ModalityConfig& modality,
                    const PromptVariant& variant, const std::optional<CueVector>& prior,
                    const PromptTemplates& templates) {
    variant.validate();
    if (modality.frame_budget <= 0) throw ValidationError("frame budget must be positive");
    if (segment.frame_refs.size() != segment.frame_times.size()) {
        throw ValidationError("segment '" + segment.segment_id + "': frame_refs and frame_times differ in length");
    }
    if (modality.has_text() && !segment.transcript) {
        throw ValidationError("segment '" + segment.segment_id + "' has no transcript but modality " +
                              std::string(to_string(modality.mode)) + " needs one");
    }
    if (modality.has_audio() && !segment.audio_ref) {
        throw ValidationError("segment '" + segment.segment_id + "' has no audio_ref but modality " +
                              std::string(to_string(modality.mode)) + " attaches audio");
    }

    Prompt prompt;
    if (const Cue* cue = std::get_if<Cue>(&target)) {
        prompt.text = templates.cue;
        replace_all(prompt.text, "{CUE_QUESTION}", cue_question(*cue));
    } else if (variant.base == PromptVariant::Base::automatic) {
        std::string questions;
        for (Cue c : kAllCues) {
            if (!questions.empty()) questions += '\n';
            questions += "- ";
            questions += cue_question(c);
        }
        prompt.text = templates.final_auto;
        replace_all(prompt.text, "{CUE_QUESTIONS}", questions);
    } else {
        if (!prior) {
            throw ValidationError("segment '" + segment.segment_id +
                                  "': graph-form final question needs all eight prior cue predictions");
        }
        std::string triplets;
        for (Cue c : kAllCues) {
            if (!triplets.empty()) triplets += '\n';
            triplets += "(wearer, ";
            triplets += cue_question(c);
            triplets += (*prior)[c] ? ", yes)" : ", no)";
        }
        prompt.text = templates.final_graph;
        replace_all(prompt.text, "{TRIPLETS}", triplets);
    }

    if (std::holds_alternative<FinalDecision>(target)) {
        if (variant.dep) prompt.text += "\n" + templates.dep;
        if (variant.hier) prompt.text += "\n" + templates.hier;
        if (variant.think) prompt.text += "\n" + templates.think;
    }

    // Transcript last, so utterance text is never scanned for placeholders.
    if (modality.has_text()) {
        std::string block = templates.transcript;
        replace_all(block, "{TRANSCRIPT}",
                    format_transcript(*segment.transcript, modality.mode == ModalityMode::audio_video_text_conv));
        replace_all(prompt.text, "{TRANSCRIPT}", block);
    } else {
        remove_placeholder_lines(prompt.text, "{TRANSCRIPT}");
    }

    for (std::size_t index :
         sample_frame_indices(segment.frame_times.size(), static_cast<std::size_t>(modality.frame_budget))) {
        prompt.media.push_back(MediaItem{MediaItem::Kind::image, segment.frame_refs[index]});
    }
    if (modality.has_audio()) prompt.media.push_back(MediaItem{MediaItem::Kind::audio, *segment.audio_ref});
    return prompt;
}

// ---------------------------------------------------------------------------
// Answers

namespace {

enum class Verdict { none, yes, no };

Verdict verdict_of(std::string_view word) {
    if (word == "yes") return Verdict::yes;
    if (word == "no") return Verdict::no;
    return Verdict::none;
}

bool is_marker(std::string_view word) {
    return word == "answer" || word == "verdict" || word == "decision" || word == "conclusion";
}

/// Lowercase alphabetic words, one vector per line.
std::vector<std::vector<std::string>> tokenize_lines(std::string_view raw) {
    std::vector<std::vector<std::string>> lines(1);
    std::string word;
    auto flush = [&] {
        if (!word.empty()) lines.back().push_back(std::move(word));
        word.clear();
    };
    for (char c : raw) {
        const auto uc = static_cast<unsigned char>(c);
        if (std::isalpha(uc)) {
            word.push_back(static_cast<char>(std::tolower(uc)));
        } else {
            flush();
            if (c == '\n') lines.emplace_back();
        }
    }
    flush();
    return lines;
}

}  // namespace

bool parse_answer(std::string_view raw) {
    const auto lines = tokenize_lines(raw);

    // An explicit "answer:"/"verdict:" marker wins; the verdict follows it on
    // the same line or opens the next non-empty line.
    for (std::size_t li = lines.size(); li-- > 0;) {
        const auto& words = lines[li];
        for (std::size_t wi = words.size(); wi-- > 0;) {
            if (!is_marker(words[wi])) continue;
            for (std::size_t k = wi + 1; k < words.size(); ++k) {
                if (auto v = verdict_of(words[k]); v != Verdict::none) return v == Verdict::yes;
            }
            for (std::size_t next = li + 1; next < lines.size(); ++next) {
                if (lines[next].empty()) continue;
                if (auto v = verdict_of(lines[next].front()); v != Verdict::none) return v == Verdict::yes;
                break;
            }
        }
    }

    // Otherwise the last line that opens or closes with a verdict.
    for (std::size_t li = lines.size(); li-- > 0;) {
        const auto& words = lines[li];
        if (words.empty()) continue;
        if (auto v = verdict_of(words.front()); v != Verdict::none) return v == Verdict::yes;
        if (auto v = verdict_of(words.back()); v != Verdict::none) return v == Verdict::yes;
    }

    // Last resort: the last verdict word anywhere.
    for (std::size_t li = lines.size(); li-- > 0;) {
        const auto& words = lines[li];
        for (std::size_t wi = words.size(); wi-- > 0;) {
            if (auto v = verdict_of(words[wi]); v != Verdict::none) return v == Verdict::yes;
        }
    }

    throw ParseError("no yes/no verdict in model answer", std::string(raw));
}

std::string cache_key(std::string_view segment_id, const QueryTarget& target, const ModalityConfig& modality,
                      const PromptVariant& variant, std::string_view model, std::string_view context) {
    const json canonical = json::array({"egosod-cache-v1", segment_id, query_name(target), to_string(modality.mode),
                                        modality.frame_budget, variant.base == PromptVariant::Base::graph ? "graph" : "auto",
                                        variant.dep, variant.think, variant.hier, model, context});
    return sha256_hex(canonical.dump());
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const ModalityConfig& m) {
    j = json{{"mode", std::string(to_string(m.mode))}, {"frame_budget", m.frame_budget}};
}

void from_json(const json& j, ModalityConfig& m) {
    if (j.contains("mode")) {
        const auto text = j.at("mode").get<std::string>();
        auto mode = parse_modality_mode(text);
        if (!mode) throw ParseError("unknown modality mode '" + text + "'");
        m.mode = *mode;
    }
    if (j.contains("frame_budget")) m.frame_budget = j.at("frame_budget").get<int>();
}

void to_json(json& j, const PromptVariant& v) { j = v.label(); }

void from_json(const json& j, PromptVariant& v) {
    if (j.is_string()) {
        v = PromptVariant::parse(j.get<std::string>());
        return;
    }
    PromptVariant out;
    const auto base = j.value("base", std::string("graph"));
    if (base == "auto") {
        out.base = PromptVariant::Base::automatic;
    } else if (base == "graph") {
        out.base = PromptVariant::Base::graph;
    } else {
        throw ParseError("unknown prompt variant base '" + base + "'");
    }
    out.dep = j.value("dep", false);
    out.think = j.value("think", false);
    out.hier = j.value("hier", false);
    v = out;
}

}  // namespace egosod
