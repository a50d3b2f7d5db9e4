#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "egosod/error.hpp"
#include "egosod/prompt.hpp"
#include "test_support.hpp"

using namespace egosod;
using egosod::testing::make_segment;
using egosod::testing::response_corpus;

namespace {

std::size_t count_of(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

std::vector<PromptVariant> all_variants() {
    std::vector<PromptVariant> out;
    for (auto base : {PromptVariant::Base::automatic, PromptVariant::Base::graph}) {
        for (int bits = 0; bits < 8; ++bits) {
            PromptVariant v{base, (bits & 1) != 0, (bits & 2) != 0, (bits & 4) != 0};
            if (v.dep && base == PromptVariant::Base::automatic) continue;
            out.push_back(v);
        }
    }
    return out;
}

constexpr ModalityMode kModes[] = {ModalityMode::video_only, ModalityMode::audio_video,
                                   ModalityMode::audio_video_text, ModalityMode::audio_video_text_conv};

}  // namespace

TEST(Prompt, CueQuestionAppearsExactlyOnce) {
    const auto seg = make_segment("s", CueVector{}).segment;
    const Prompt p = build_prompt(seg, Cue::aud, ModalityConfig{}, PromptVariant::parse("auto"));
    EXPECT_EQ(count_of(p.text, "Is someone talking to me?"), 1u);
}

TEST(Prompt, GraphFinalRendersEightNoTriplets) {
    const auto seg = make_segment("s", CueVector{}).segment;
    const Prompt p = build_prompt(seg, FinalDecision{}, ModalityConfig{}, PromptVariant{}, CueVector{});
    EXPECT_EQ(count_of(p.text, ", no)"), 8u);
    EXPECT_EQ(count_of(p.text, ", yes)"), 0u);
    for (Cue cue : kAllCues) {
        EXPECT_NE(p.text.find("(wearer, " + std::string(cue_question(cue)) + ", no)"), std::string::npos);
    }
}

TEST(Prompt, AutoFinalListsTheRawCueQuestions) {
    const auto seg = make_segment("s", CueVector{}).segment;
    const Prompt p = build_prompt(seg, FinalDecision{}, ModalityConfig{}, PromptVariant::parse("auto"));
    for (Cue cue : kAllCues) EXPECT_EQ(count_of(p.text, std::string(cue_question(cue))), 1u) << cue_acronym(cue);
    EXPECT_EQ(p.text.find("(wearer,"), std::string::npos);
}

TEST(Prompt, VariantInstructionsAppendOnlyWhenRequested) {
    const auto seg = make_segment("s", CueVector{}).segment;
    const auto& t = PromptTemplates::builtin();
    for (const auto& v : all_variants()) {
        const Prompt p = build_prompt(seg, FinalDecision{}, ModalityConfig{}, v, CueVector{});
        EXPECT_EQ(p.text.find(t.dep) != std::string::npos, v.dep) << v.label();
        EXPECT_EQ(p.text.find(t.think) != std::string::npos, v.think) << v.label();
        EXPECT_EQ(p.text.find(t.hier) != std::string::npos, v.hier) << v.label();
    }
}

TEST(Prompt, GraphFinalWithoutPriorIsRejected) {
    const auto seg = make_segment("s", CueVector{}).segment;
    EXPECT_THROW(build_prompt(seg, FinalDecision{}, ModalityConfig{}, PromptVariant{}), ValidationError);
}

TEST(Prompt, AutoWithDepIsRejected) {
    PromptVariant v{PromptVariant::Base::automatic, true, false, false};
    EXPECT_THROW(v.validate(), ValidationError);
    EXPECT_THROW(PromptVariant::parse("auto-dep"), ValidationError);
}

TEST(Prompt, VariantLabelsRoundTrip) {
    std::set<std::string> labels;
    for (const auto& v : all_variants()) {
        EXPECT_EQ(PromptVariant::parse(v.label()), v);
        labels.insert(v.label());
    }
    EXPECT_EQ(labels.size(), all_variants().size());
    EXPECT_THROW(PromptVariant::parse("graph-fancy"), ParseError);
}

TEST(Prompt, FrameSamplingRule) {
    EXPECT_EQ(sample_frame_indices(10, 3), (std::vector<std::size_t>{0, 4, 9}));
    EXPECT_EQ(sample_frame_indices(10, 6), (std::vector<std::size_t>{0, 1, 3, 5, 7, 9}));
    EXPECT_EQ(sample_frame_indices(10, 10), (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
    EXPECT_EQ(sample_frame_indices(10, 1), (std::vector<std::size_t>{0}));
    EXPECT_THROW(sample_frame_indices(10, 0), ValidationError);
    EXPECT_THROW(sample_frame_indices(10, 11), ValidationError);
    for (std::size_t n = 1; n <= 40; ++n) {
        for (std::size_t k = 1; k <= n; ++k) {
            const auto idx = sample_frame_indices(n, k);
            ASSERT_EQ(idx.size(), k);
            EXPECT_EQ(idx.front(), 0u);
            EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
            EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), k);
            if (k > 1) EXPECT_EQ(idx.back(), n - 1);
        }
    }
}

TEST(Prompt, MediaFollowsModality) {
    const auto seg = make_segment("s", CueVector{}).segment;
    for (ModalityMode mode : kModes) {
        for (int budget : {3, 6, 10}) {
            ModalityConfig m{mode, budget};
            const Prompt p = build_prompt(seg, Cue::pad, m, PromptVariant{});
            const auto images = std::count_if(p.media.begin(), p.media.end(),
                                              [](const MediaItem& i) { return i.kind == MediaItem::Kind::image; });
            const auto audio = std::count_if(p.media.begin(), p.media.end(),
                                             [](const MediaItem& i) { return i.kind == MediaItem::Kind::audio; });
            EXPECT_EQ(images, budget);
            EXPECT_EQ(audio, m.has_audio() ? 1 : 0);
            EXPECT_EQ(p.media.front().reference, seg.frame_refs.front());
            EXPECT_EQ(p.text.find("could you pass the salt") != std::string::npos, m.has_text());
            EXPECT_EQ(p.text.find("Speaker 1: could you pass the salt") != std::string::npos,
                      mode == ModalityMode::audio_video_text_conv);
            EXPECT_EQ(p.text.find("{TRANSCRIPT}"), std::string::npos);
        }
    }
}

TEST(Prompt, TextModesNeedATranscript) {
    auto seg = make_segment("s", CueVector{}).segment;
    seg.transcript.reset();
    EXPECT_THROW(build_prompt(seg, Cue::aud, ModalityConfig{ModalityMode::audio_video_text, 10}, PromptVariant{}),
                 ValidationError);
    EXPECT_NO_THROW(build_prompt(seg, Cue::aud, ModalityConfig{ModalityMode::audio_video, 10}, PromptVariant{}));
}

TEST(Prompt, IsPure) {
    const auto seg = make_segment("s", CueVector::from_bits(0x3C)).segment;
    const ModalityConfig m{ModalityMode::audio_video_text_conv, 6};
    const auto a = build_prompt(seg, FinalDecision{}, m, PromptVariant::parse("graph-dep-think-h"), CueVector{});
    const auto b = build_prompt(seg, FinalDecision{}, m, PromptVariant::parse("graph-dep-think-h"), CueVector{});
    EXPECT_EQ(a.text, b.text);
    EXPECT_EQ(a.media, b.media);
}

TEST(Transcript, Formats) {
    EXPECT_EQ(format_transcript({}, true), "");
    EXPECT_EQ(format_transcript({}, false), "");
    std::vector<Utterance> t{{SpeakerTag::wearer(), 0, 1, "hi", false}, {SpeakerTag::other(1), 1, 2, "hello", false}};
    EXPECT_EQ(format_transcript(t, true), "Me: hi\nSpeaker 1: hello");
    EXPECT_EQ(format_transcript(t, false), "hi hello");
    t.push_back({SpeakerTag::unknown(), 2, 3, "hm", false});
    EXPECT_EQ(format_transcript(t, true), "Me: hi\nSpeaker 1: hello\nSpeaker ?: hm");
}

TEST(ParseAnswer, CorpusOfResponseShapes) {
    ASSERT_EQ(response_corpus().size(), 20u);
    for (const auto& shape : response_corpus()) {
        bool got = !shape.verdict;
        EXPECT_NO_THROW(got = parse_answer(shape.raw)) << shape.raw;
        EXPECT_EQ(got, shape.verdict) << shape.raw;
    }
}

TEST(ParseAnswer, CanonicalOutputsRoundTrip) {
    for (bool v : {true, false}) {
        EXPECT_EQ(parse_answer(v ? "yes" : "no"), v);
        EXPECT_EQ(parse_answer(std::string("Final answer: ") + (v ? "yes" : "no")), v);
    }
}

TEST(ParseAnswer, NoVerdictCarriesRawText) {
    const std::string raw = "I cannot tell from these frames.";
    try {
        parse_answer(raw);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.raw(), raw);
    }
    EXPECT_THROW(parse_answer(""), ParseError);
    EXPECT_THROW(parse_answer("yesterday nobody knows"), ParseError);
}

TEST(CacheKey, DeterministicAndFieldSensitive) {
    const ModalityConfig m{ModalityMode::audio_video, 10};
    const auto a = cache_key("seg", Cue::aud, m, PromptVariant{}, "model");
    EXPECT_EQ(a, cache_key("seg", Cue::aud, m, PromptVariant{}, "model"));
    EXPECT_EQ(a.size(), 64u);
    EXPECT_NE(a, cache_key("seg", Cue::aud, ModalityConfig{ModalityMode::audio_video, 6}, PromptVariant{}, "model"));
    EXPECT_NE(a, cache_key("seg", Cue::udsd, m, PromptVariant{}, "model"));
    EXPECT_NE(a, cache_key("seg", FinalDecision{}, m, PromptVariant{}, "model"));
    EXPECT_NE(a, cache_key("seg", Cue::aud, m, PromptVariant{}, "model", "ctx"));
    // Field boundaries cannot be shifted to forge a collision.
    EXPECT_NE(cache_key("ab", Cue::aud, m, PromptVariant{}, "c"), cache_key("a", Cue::aud, m, PromptVariant{}, "bc"));
}

TEST(CacheKey, NoCollisionsOverTenThousandTuples) {
    std::mt19937_64 rng(99);
    std::set<std::string> tuples;
    std::set<std::string> keys;
    const auto variants = all_variants();
    while (tuples.size() < 10'000) {
        const std::string seg = "seg-" + std::to_string(rng() % 4000);
        const int target = static_cast<int>(rng() % 9);
        const ModalityConfig m{kModes[rng() % 4], static_cast<int>(1 + rng() % 10)};
        const PromptVariant& v = variants[rng() % variants.size()];
        const std::string model = "model-" + std::to_string(rng() % 3);
        const std::string tuple = seg + "|" + std::to_string(target) + "|" + std::string(to_string(m.mode)) + "|" +
                                  std::to_string(m.frame_budget) + "|" + v.label() + "|" + model;
        if (!tuples.insert(tuple).second) continue;
        const QueryTarget q = target == 8 ? QueryTarget{FinalDecision{}} : QueryTarget{kAllCues[target]};
        keys.insert(cache_key(seg, q, m, v, model));
    }
    EXPECT_EQ(keys.size(), 10'000u);
}

TEST(Templates, LoadFromDirectoryMatchesBuiltin) {
    const auto loaded = PromptTemplates::load(EGOSOD_SOURCE_DIR "/prompts");
    const auto& builtin = PromptTemplates::builtin();
    EXPECT_EQ(loaded.version, builtin.version);
    EXPECT_EQ(loaded.cue, builtin.cue);
    EXPECT_EQ(loaded.final_graph, builtin.final_graph);
    EXPECT_EQ(loaded.think, builtin.think);
    EXPECT_THROW(PromptTemplates::load("/nonexistent/prompts"), IoError);
}
