#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "egosod/detectors.hpp"
#include "egosod/error.hpp"
#include "test_support.hpp"

using namespace egosod;
using egosod::testing::everyday_mixture;
using egosod::testing::make_segment;
using nlohmann::json;

namespace {

NoisySpec noisy(double tpr, double tnr, std::uint64_t seed) { return NoisySpec::uniform(tpr, tnr, seed); }

}  // namespace

TEST(Oracle, ReturnsConsensusForEveryAssignment) {
    OracleBackend oracle;
    for (unsigned bits = 0; bits < 256; ++bits) {
        const auto seg = make_segment("s" + std::to_string(bits), CueVector::from_bits(static_cast<std::uint8_t>(bits)));
        const auto p = predict(oracle, seg, CueSet::all(), ModalityConfig{});
        ASSERT_TRUE(p.complete().has_value());
        EXPECT_EQ(*p.complete(), seg.consensus);
        EXPECT_EQ(oracle.answer_final(seg, ModalityConfig{}, PromptVariant{}, seg.consensus).value,
                  seg.ground_truth_interaction);
    }
}

TEST(Predict, ValuesPresentExactlyForRequestedCues) {
    OracleBackend oracle;
    const auto seg = make_segment("s", CueVector::from_bits(0xFF));
    CueSet req;
    req.insert(Cue::aud);
    req.insert(Cue::ogd);
    const auto p = predict(oracle, seg, req, ModalityConfig{});
    EXPECT_EQ(p.queried(), req);
    EXPECT_EQ(p.value(Cue::aud), true);
    EXPECT_FALSE(p.value(Cue::osad).has_value());
    EXPECT_FALSE(p.complete().has_value());
    EXPECT_EQ(p.segment_id, "s");
    EXPECT_EQ(p.backend_id, "oracle");
}

TEST(Noisy, PerfectRatesReduceToOracle) {
    NoisyBackend nb(noisy(1.0, 1.0, 123));
    OracleBackend oracle;
    const auto m = generate(everyday_mixture(2000, 4));
    for (const auto& s : m.segments) {
        EXPECT_EQ(*predict(nb, s, CueSet::all(), ModalityConfig{}).complete(),
                  *predict(oracle, s, CueSet::all(), ModalityConfig{}).complete());
    }
}

TEST(Noisy, ZeroRatesInvertEveryLabel) {
    NoisyBackend nb(noisy(0.0, 0.0, 1));
    for (unsigned bits = 0; bits < 256; ++bits) {
        const auto seg = make_segment("s" + std::to_string(bits), CueVector::from_bits(static_cast<std::uint8_t>(bits)));
        for (Cue cue : kAllCues) EXPECT_NE(nb.noisy_value(seg, cue), seg.consensus[cue]);
    }
}

TEST(Noisy, MonteCarloRatesMatchConfiguration) {
    NoisyBackend nb(noisy(0.8, 0.8, 2024));
    const auto m = generate(everyday_mixture(10'000, 8));
    for (Cue cue : kAllCues) {
        std::size_t correct = 0;
        for (const auto& s : m.segments) correct += nb.noisy_value(s, cue) == s.consensus[cue] ? 1 : 0;
        const double acc = static_cast<double>(correct) / static_cast<double>(m.segments.size());
        EXPECT_NEAR(acc, 0.8, 0.02) << cue_acronym(cue);
    }
}

TEST(Noisy, FlipsAreIndependentOfEvaluationOrder) {
    NoisyBackend nb(noisy(0.6, 0.7, 77));
    const auto m = generate(everyday_mixture(500, 3));
    std::vector<CueVector> forward;
    for (const auto& s : m.segments) forward.push_back(*predict(nb, s, CueSet::all(), ModalityConfig{}).complete());

    std::vector<std::size_t> order(m.segments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), std::mt19937_64(1));
    NoisyBackend fresh(noisy(0.6, 0.7, 77));
    for (std::size_t i : order) {
        // Reverse cue order as well.
        for (int c = kCueCount - 1; c >= 0; --c) {
            const Cue cue = kAllCues[c];
            EXPECT_EQ(fresh.answer_cue(m.segments[i], cue, ModalityConfig{}).value, forward[i][cue]);
        }
    }
}

TEST(Noisy, SeedChangesDraws) {
    NoisyBackend a(noisy(0.5, 0.5, 1));
    NoisyBackend b(noisy(0.5, 0.5, 2));
    const auto m = generate(everyday_mixture(200, 3));
    std::size_t differ = 0;
    for (const auto& s : m.segments) differ += a.noisy_value(s, Cue::pad) != b.noisy_value(s, Cue::pad) ? 1 : 0;
    EXPECT_GT(differ, 50u);
}

TEST(BackendSpec, ExactlyTheBlocksForTheKind) {
    BackendSpec oracle;
    EXPECT_NO_THROW(oracle.validate());
    oracle.noisy = noisy(0.9, 0.9, 0);
    EXPECT_THROW(oracle.validate(), ValidationError);

    BackendSpec n{BackendKind::noisy, std::nullopt, std::nullopt};
    EXPECT_THROW(n.validate(), ValidationError);
    n.noisy = noisy(1.2, 0.9, 0);
    EXPECT_THROW(n.validate(), ValidationError);
    n.noisy = noisy(0.9, 0.9, 0);
    EXPECT_NO_THROW(n.validate());

    BackendSpec r{BackendKind::remote, std::nullopt, RemoteSpec{}};
    EXPECT_THROW(r.validate(), ValidationError);
    r.remote->model = "m";
    r.remote->endpoint = "http://127.0.0.1:1/x";
    EXPECT_NO_THROW(r.validate());
    BackendSpec replay{BackendKind::replay, std::nullopt, RemoteSpec{}};
    replay.remote->model = "m";
    EXPECT_THROW(replay.validate(), ValidationError);
    replay.remote->cache_dir = "/tmp/x";
    EXPECT_NO_THROW(replay.validate());
}

TEST(BackendSpec, JsonRoundTripAndPerCueRates) {
    const json j = json::parse(R"({"kind":"noisy","noisy":{"tpr":{"aud":0.5,"osad":0.9},"tnr":0.7}})");
    EXPECT_THROW(backend_spec_from_json(j, 5), ParseError);  // per-cue objects must name every cue

    json full = json::parse(R"({"kind":"noisy","noisy":{"tpr":0.9,"tnr":0.7}})");
    const BackendSpec spec = backend_spec_from_json(full, 5);
    EXPECT_EQ(spec.noisy->seed, 5u);
    EXPECT_DOUBLE_EQ(spec.noisy->tpr[index_of(Cue::sfd)], 0.9);
    const BackendSpec back = backend_spec_from_json(json(spec));
    EXPECT_EQ(back.id(), spec.id());
    EXPECT_EQ(back.noisy->tnr, spec.noisy->tnr);
}

TEST(CuePredictions, JsonRoundTrip) {
    CuePredictions p;
    p.segment_id = "s";
    p.backend_id = "b";
    p.set(Cue::aud, CueAnswer{true, 0.75, std::string("Yes."), false});
    p.set(Cue::pad, CueAnswer{false, std::nullopt, std::string("???"), true});
    const auto back = json(p).get<CuePredictions>();
    EXPECT_EQ(back.values, p.values);
    EXPECT_EQ(back.confidence, p.confidence);
    EXPECT_EQ(back.raw_responses, p.raw_responses);
    EXPECT_EQ(back.parse_failed, p.parse_failed);
    EXPECT_EQ(back.parse_failure_count(), 1);
}
