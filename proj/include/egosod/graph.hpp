#pragma once

#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "egosod/cue.hpp"
#include "egosod/error.hpp"

namespace egosod {

struct BeliefState {
    bool others_to_user = false;
    bool user_to_others = false;
    bool user_busy = false;

    bool operator==(const BeliefState&) const = default;
};

enum class GatePolicy { eager, short_circuit, hierarchical };

std::string_view to_string(GatePolicy policy) noexcept;
std::optional<GatePolicy> parse_gate_policy(std::string_view text) noexcept;

enum class StepReason { queried, gated_default_false, skipped_irrelevant };

std::string_view to_string(StepReason reason) noexcept;

struct TraceStep {
    Cue cue = Cue::osad;
    bool queried = false;
    bool effective_value = false;
    StepReason reason = StepReason::queried;

    bool operator==(const TraceStep&) const = default;
};

struct StageTransition {
    std::string stage;
    std::string outcome;

    bool operator==(const StageTransition&) const = default;
};

struct EvalTrace {
    std::vector<TraceStep> steps;
    std::vector<StageTransition> stage_transitions;

    int query_count() const noexcept;
    const TraceStep* find(Cue cue) const noexcept;

    bool operator==(const EvalTrace&) const = default;
};

struct Decision {
    std::string segment_id;
    BeliefState beliefs;
    bool interacting = false;
    bool intervene_ok = false;
    EvalTrace trace;

    bool operator==(const Decision&) const = default;
};

/// Answers one cue; may be an expensive backend call.
using CueSource = std::function<bool(Cue)>;

/// A cue source threw; carries the failing cue and the trace up to that point.
class GraphEvaluationError : public Error {
public:
    GraphEvaluationError(const std::string& message, Cue cue, EvalTrace partial, std::exception_ptr cause)
        : Error(message), cue_(cue), partial_(std::move(partial)), cause_(std::move(cause)) {}

    Cue cue() const noexcept { return cue_; }
    const EvalTrace& partial_trace() const noexcept { return partial_; }
    const std::exception_ptr& cause() const noexcept { return cause_; }

private:
    Cue cue_;
    EvalTrace partial_;
    std::exception_ptr cause_;
};

/// Others->User = PAD & IGD & AUD; User->Others = STAD & UDSD & OGD; UserBusy = SFD.
BeliefState combine_beliefs(const CueVector& effective) noexcept;

struct Verdict {
    bool interacting = false;
    bool intervene_ok = false;

    bool operator==(const Verdict&) const = default;
};

/// interacting = Others->User | User->Others; intervention only when free and not busy.
Verdict decide(const BeliefState& beliefs) noexcept;

/// Query order used by the short-circuit policy.
inline constexpr std::array<Cue, kCueCount> kShortCircuitOrder = {
    Cue::osad, Cue::pad, Cue::stad, Cue::igd, Cue::aud, Cue::udsd, Cue::ogd, Cue::sfd};

/// Runs the social-thinking graph. Cues in `masked` are never queried and take
/// effective value false (component ablations).
Decision evaluate(const CueSource& cue_source, GatePolicy policy, std::string segment_id = {},
                  CueSet masked = CueSet::none());

/// Queries `evaluate` would issue for these underlying values.
int query_count(GatePolicy policy, const CueVector& cues, CueSet masked = CueSet::none());

void to_json(nlohmann::json& j, const BeliefState& b);
void to_json(nlohmann::json& j, const EvalTrace& t);
void to_json(nlohmann::json& j, const Decision& d);
void from_json(const nlohmann::json& j, Decision& d);

}  // namespace egosod
