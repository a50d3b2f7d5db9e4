#include "egosod/graph.hpp"

#include <array>

namespace egosod {

using nlohmann::json;

std::string_view to_string(GatePolicy policy) noexcept {
    switch (policy) {
        case GatePolicy::eager: return "eager";
        case GatePolicy::short_circuit: return "short_circuit";
        case GatePolicy::hierarchical: break;
    }
    return "hierarchical";
}

std::optional<GatePolicy> parse_gate_policy(std::string_view text) noexcept {
    for (auto p : {GatePolicy::eager, GatePolicy::short_circuit, GatePolicy::hierarchical}) {
        if (text == to_string(p)) return p;
    }
    return std::nullopt;
}

std::string_view to_string(StepReason reason) noexcept {
    switch (reason) {
        case StepReason::queried: return "QUERIED";
        case StepReason::gated_default_false: return "GATED_DEFAULT_FALSE";
        case StepReason::skipped_irrelevant: break;
    }
    return "SKIPPED_IRRELEVANT";
}

int EvalTrace::query_count() const noexcept {
    int n = 0;
    for (const auto& s : steps) n += s.queried ? 1 : 0;
    return n;
}

const TraceStep* EvalTrace::find(Cue cue) const noexcept {
    for (const auto& s : steps) {
        if (s.cue == cue) return &s;
    }
    return nullptr;
}

BeliefState combine_beliefs(const CueVector& c) noexcept {
    return BeliefState{
        c[Cue::pad] && c[Cue::igd] && c[Cue::aud],
        c[Cue::stad] && c[Cue::udsd] && c[Cue::ogd],
        c[Cue::sfd],
    };
}

Verdict decide(const BeliefState& beliefs) noexcept {
    const bool interacting = beliefs.others_to_user || beliefs.user_to_others;
    return Verdict{interacting, !interacting && !beliefs.user_busy};
}

namespace {

class Evaluator {
public:
    Evaluator(const CueSource& source, CueSet masked) : source_(source), masked_(masked) {}

    bool known(Cue cue) const { return decided_.contains(cue); }
    bool value(Cue cue) const { return effective_[cue]; }
    bool masked(Cue cue) const { return masked_.contains(cue); }

    /// Queries unless masked; masked cues are recorded as gated.
    bool query(Cue cue) {
        if (masked(cue)) return gate(cue);
        bool v = false;
        try {
            v = source_(cue);
        } catch (...) {
            throw GraphEvaluationError("cue source failed on " + std::string(cue_acronym(cue)), cue, trace_,
                                       std::current_exception());
        }
        record(cue, true, v, StepReason::queried);
        return v;
    }

    bool gate(Cue cue) {
        record(cue, false, false, StepReason::gated_default_false);
        return false;
    }

    bool skip(Cue cue) {
        record(cue, false, false, StepReason::skipped_irrelevant);
        return false;
    }

    void stage(std::string name, std::string outcome) {
        trace_.stage_transitions.push_back(StageTransition{std::move(name), std::move(outcome)});
    }

    /// True when some completion of the undecided cues makes `cue` change a belief.
    /// Beliefs determine the verdict, so skipped cues never change it either.
    bool relevant(Cue cue) const {
        std::array<Cue, kCueCount> free{};
        std::size_t n_free = 0;
        for (Cue c : kAllCues) {
            if (c != cue && !known(c) && !masked(c)) free[n_free++] = c;
        }
        CueVector base = effective_;
        for (Cue c : kAllCues) {
            if (masked(c)) base[c] = false;
        }
        for (std::uint32_t bits = 0; bits < (1u << n_free); ++bits) {
            CueVector v = base;
            for (std::size_t k = 0; k < n_free; ++k) v[free[k]] = (bits >> k) & 1u;
            v[cue] = false;
            const BeliefState off = combine_beliefs(v);
            v[cue] = true;
            if (combine_beliefs(v) != off) return true;
        }
        return false;
    }

    Decision finish(std::string segment_id) {
        Decision d;
        d.segment_id = std::move(segment_id);
        d.beliefs = combine_beliefs(effective_);
        const Verdict v = decide(d.beliefs);
        d.interacting = v.interacting;
        d.intervene_ok = v.intervene_ok;
        stage("decision", d.interacting ? "interacting" : (d.intervene_ok ? "open_for_intervention" : "busy"));
        d.trace = std::move(trace_);
        return d;
    }

private:
    void record(Cue cue, bool queried, bool v, StepReason reason) {
        decided_.insert(cue);
        effective_[cue] = v;
        trace_.steps.push_back(TraceStep{cue, queried, v, reason});
    }

    const CueSource& source_;
    CueSet masked_;
    CueSet decided_;
    CueVector effective_;
    EvalTrace trace_;
};

void run_eager(Evaluator& ev) {
    for (Cue cue : kAllCues) ev.query(cue);
}

void run_short_circuit(Evaluator& ev) {
    for (Cue cue : kShortCircuitOrder) {
        if (ev.masked(cue)) {
            ev.gate(cue);
        } else if (ev.relevant(cue)) {
            ev.query(cue);
        } else {
            ev.skip(cue);
        }
    }
}

void run_hierarchical(Evaluator& ev) {
    // Stage 1: environment filters.
    const bool speech = ev.query(Cue::osad);
    const bool proximity = ev.query(Cue::pad);
    ev.stage("audio_filter", speech ? "open" : "closed");
    ev.stage("visual_filter", proximity ? "open" : "closed");

    // Stage 2: early engagement signals behind their filters.
    const bool turns = speech ? ev.query(Cue::stad) : ev.gate(Cue::stad);
    const bool gaze_in = proximity ? ev.query(Cue::igd) : ev.gate(Cue::igd);
    const bool unlocked = turns || gaze_in;
    ev.stage("engagement", unlocked ? "unlocked" : "locked");

    // Stage 3: roles and attention, only for a possible interaction.
    if (unlocked && speech) {
        ev.query(Cue::aud);
        ev.query(Cue::udsd);
    } else {
        ev.gate(Cue::aud);
        ev.gate(Cue::udsd);
    }
    if (unlocked && proximity) {
        ev.query(Cue::ogd);
    } else {
        ev.gate(Cue::ogd);
    }

    // SFD is outside every gate.
    const bool busy = ev.query(Cue::sfd);
    ev.stage("veto", busy ? "busy" : "free");
}

}  // namespace

Decision evaluate(const CueSource& cue_source, GatePolicy policy, std::string segment_id, CueSet masked) {
    Evaluator ev(cue_source, masked);
    switch (policy) {
        case GatePolicy::eager: run_eager(ev); break;
        case GatePolicy::short_circuit: run_short_circuit(ev); break;
        case GatePolicy::hierarchical: run_hierarchical(ev); break;
    }
    return ev.finish(std::move(segment_id));
}

int query_count(GatePolicy policy, const CueVector& cues, CueSet masked) {
    int count = 0;
    const CueSource source = [&](Cue cue) {
        ++count;
        return cues[cue];
    };
    evaluate(source, policy, {}, masked);
    return count;
}

// ---------------------------------------------------------------------------
// JSON

void to_json(json& j, const BeliefState& b) {
    j = json{{"others_to_user", b.others_to_user}, {"user_to_others", b.user_to_others}, {"user_busy", b.user_busy}};
}

void to_json(json& j, const EvalTrace& t) {
    json steps = json::array();
    for (const auto& s : t.steps) {
        steps.push_back(json{{"cue", std::string(cue_acronym(s.cue))},
                             {"queried", s.queried},
                             {"effective_value", s.effective_value},
                             {"reason", std::string(to_string(s.reason))}});
    }
    json stages = json::array();
    for (const auto& s : t.stage_transitions) stages.push_back(json{{"stage", s.stage}, {"outcome", s.outcome}});
    j = json{{"steps", steps}, {"stage_transitions", stages}};
}

void to_json(json& j, const Decision& d) {
    j = json{{"segment_id", d.segment_id},
             {"beliefs", d.beliefs},
             {"interacting", d.interacting},
             {"intervene_ok", d.intervene_ok},
             {"trace", d.trace}};
}

void from_json(const json& j, Decision& d) {
    d = Decision{};
    d.segment_id = j.at("segment_id").get<std::string>();
    const json& b = j.at("beliefs");
    d.beliefs = BeliefState{b.at("others_to_user").get<bool>(), b.at("user_to_others").get<bool>(),
                            b.at("user_busy").get<bool>()};
    d.interacting = j.at("interacting").get<bool>();
    d.intervene_ok = j.at("intervene_ok").get<bool>();
    for (const auto& s : j.at("trace").at("steps")) {
        TraceStep step;
        auto cue = parse_cue(s.at("cue").get<std::string>());
        if (!cue) throw ParseError("unknown cue in trace: " + s.at("cue").dump());
        step.cue = *cue;
        step.queried = s.at("queried").get<bool>();
        step.effective_value = s.at("effective_value").get<bool>();
        const auto reason = s.at("reason").get<std::string>();
        if (reason == "QUERIED") {
            step.reason = StepReason::queried;
        } else if (reason == "GATED_DEFAULT_FALSE") {
            step.reason = StepReason::gated_default_false;
        } else if (reason == "SKIPPED_IRRELEVANT") {
            step.reason = StepReason::skipped_irrelevant;
        } else {
            throw ParseError("unknown trace reason '" + reason + "'");
        }
        d.trace.steps.push_back(step);
    }
    for (const auto& s : j.at("trace").at("stage_transitions")) {
        d.trace.stage_transitions.push_back(
            StageTransition{s.at("stage").get<std::string>(), s.at("outcome").get<std::string>()});
    }
}

}  // namespace egosod
