#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "egosod/dataset.hpp"
#include "egosod/error.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace egosod;
using egosod::testing::make_segment;
using egosod::testing::TempDir;
using nlohmann::json;

namespace {

DatasetManifest manifest_of(std::vector<LabeledSegment> segments) {
    DatasetManifest m;
    m.name = "t";
    m.segments = std::move(segments);
    return m;
}

std::string write_lines(const TempDir& dir, const std::string& name, const std::vector<std::string>& lines) {
    const auto path = dir / name;
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
    return path.string();
}

json labeled_record(const std::string& id, const CueVector& cues) {
    return json(make_segment(id, cues));
}

}  // namespace

// -- segmentation ------------------------------------------------------------

TEST(Segmentize, FiveMinuteClipGivesThirtyTenFrameSegments) {
    const auto segments = segmentize_clip("c", 300.0, 10.0, 1.0);
    ASSERT_EQ(segments.size(), 30u);
    for (std::size_t k = 0; k < segments.size(); ++k) {
        EXPECT_DOUBLE_EQ(segments[k].start_s, 10.0 * static_cast<double>(k));
        EXPECT_EQ(segments[k].frame_times.size(), 10u);
        EXPECT_EQ(segments[k].frame_refs.size(), 10u);
        EXPECT_EQ(segments[k].clip_id, "c");
    }
    EXPECT_NE(segments[0].segment_id, segments[1].segment_id);
}

TEST(Segmentize, TrailingRemainderIsDropped) {
    EXPECT_EQ(segmentize_clip("c", 25.0, 10.0, 1.0).size(), 2u);
    EXPECT_EQ(segmentize_clip("c", 9.99, 10.0, 1.0).size(), 0u);
}

TEST(Segmentize, SingleWindowFrameTimes) {
    const auto segments = segmentize_clip("c", 10.0, 10.0, 1.0);
    ASSERT_EQ(segments.size(), 1u);
    const std::vector<double> expected{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    EXPECT_EQ(segments[0].frame_times, expected);
}

TEST(Segmentize, RejectsNonPositiveInputs) {
    EXPECT_THROW(segmentize_clip("c", 0.0, 10.0, 1.0), ValidationError);
    EXPECT_THROW(segmentize_clip("c", 30.0, 0.0, 1.0), ValidationError);
    EXPECT_THROW(segmentize_clip("c", 30.0, 10.0, -1.0), ValidationError);
}

TEST(FrameSchedule, CountsAreCeilOfDurationTimesRate) {
    EXPECT_EQ(frame_schedule(10.0, 1.0).size(), 10u);
    EXPECT_EQ(frame_schedule(10.0, 2.0).size(), 20u);
    EXPECT_EQ(frame_schedule(10.0, 0.3).size(), 3u);
    for (double t : frame_schedule(10.0, 0.3)) EXPECT_LT(t, 10.0);
}

TEST(Bookkeeping, NineQuestionsPerSegment) {
    DatasetManifest m;
    m.segments.resize(1500);
    EXPECT_EQ(m.pair_count(), 13'500u);
}

// -- ground truth --------------------------------------------------------------

TEST(GroundTruth, IsAudOrUdsdOverAllAssignments) {
    for (unsigned bits = 0; bits < 256; ++bits) {
        const CueVector v = CueVector::from_bits(static_cast<std::uint8_t>(bits));
        const bool aud = (bits >> index_of(Cue::aud)) & 1u;
        const bool udsd = (bits >> index_of(Cue::udsd)) & 1u;
        EXPECT_EQ(derive_ground_truth(v), aud || udsd) << bits;
    }
}

// -- majority voting -----------------------------------------------------------

namespace {

VoteOutcome vote_oracle(unsigned p) {
    const auto v = oracle::vote(p);
    return v ? (*v ? VoteOutcome::yes : VoteOutcome::no) : VoteOutcome::discard;
}

}  // namespace

TEST(MajorityVote, ExhaustiveThreeAnnotatorPatterns) {
    int yes = 0, no = 0, discard = 0;
    for (unsigned p = 0; p < 64; ++p) {
        std::vector<AnnotationRecord> records(3);
        for (int i = 0; i < 3; ++i) {
            records[i].segment_id = "s";
            records[i].annotator_id = "a" + std::to_string(i);
            for (Cue cue : kAllCues) {
                // Each cue sees a different pattern so cross-cue leakage would show.
                const unsigned q = (p + 9 * index_of(cue)) % 64;
                records[i].cues[cue] = (q >> (2 * i)) & 1u;
                records[i].confidence[index_of(cue)] = ((q >> (2 * i + 1)) & 1u) ? Confidence::high : Confidence::low;
            }
        }
        const auto outcome = majority_vote(records);
        for (Cue cue : kAllCues) {
            const unsigned q = (p + 9 * index_of(cue)) % 64;
            EXPECT_EQ(outcome[index_of(cue)], vote_oracle(q)) << "pattern " << q;
        }
        switch (vote_oracle(p)) {
            case VoteOutcome::yes: ++yes; break;
            case VoteOutcome::no: ++no; break;
            case VoteOutcome::discard: ++discard; break;
        }
    }
    EXPECT_EQ(yes, 10);
    EXPECT_EQ(no, 10);
    EXPECT_EQ(discard, 44);
}

TEST(MajorityVote, RejectsBadInput) {
    EXPECT_THROW(majority_vote({}), ValidationError);
    std::vector<AnnotationRecord> records(2);
    records[0].segment_id = "a";
    records[0].annotator_id = "x";
    records[1].segment_id = "b";
    records[1].annotator_id = "y";
    EXPECT_THROW(majority_vote(records), ValidationError);
    records[1].segment_id = "a";
    records[1].annotator_id = "x";
    EXPECT_THROW(majority_vote(records), ValidationError);
}

// -- manifest I/O ----------------------------------------------------------------

TEST(Manifest, WriteThenReadRoundTrips) {
    DatasetManifest m = manifest_of({make_segment("a", CueVector::from_bits(0x05)), make_segment("b", CueVector{})});
    std::stringstream buf;
    write_manifest(m, buf);
    const DatasetManifest back = read_manifest(buf, "mem");
    EXPECT_EQ(back.name, "t");
    ASSERT_EQ(back.segments.size(), 2u);
    EXPECT_EQ(back.segments[0], m.segments[0]);
    EXPECT_EQ(back.segments[1], m.segments[1]);
}

TEST(Manifest, ValidFileHasEmptyReport) {
    TempDir dir;
    const auto path = write_lines(dir, "ok.jsonl", {labeled_record("a", CueVector{}).dump()});
    const auto report = validate_manifest_file(path);
    EXPECT_TRUE(report.ok());
    EXPECT_EQ(report.records, 1u);
}

TEST(Manifest, GroundTruthContradictionIsOneViolation) {
    TempDir dir;
    json rec = labeled_record("bad", CueVector::from_bits(1u << index_of(Cue::aud)));
    rec["ground_truth"] = false;
    const auto report = validate_manifest_file(write_lines(dir, "gt.jsonl", {rec.dump()}));
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].segment_id, "bad");
    EXPECT_EQ(report.violations[0].field, "ground_truth");
}

TEST(Manifest, FuzzedFrameTimesNameTheField) {
    TempDir dir;
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        json rec = labeled_record("f" + std::to_string(trial), CueVector{});
        auto& times = rec["frame_times"];
        const std::size_t i = 1 + rng() % (times.size() - 1);
        // Equal or earlier than the previous frame.
        times[i] = times[i - 1].get<double>() - static_cast<double>(rng() % 3) * 0.5;
        const auto report = validate_manifest_file(write_lines(dir, "fuzz.jsonl", {rec.dump()}));
        ASSERT_FALSE(report.ok());
        bool named = false;
        for (const auto& v : report.violations) named = named || v.field == "frame_times";
        EXPECT_TRUE(named) << rec["frame_times"].dump();
    }
}

TEST(Manifest, ReportsEveryViolationWithSegmentId) {
    TempDir dir;
    json a = labeled_record("a", CueVector{});
    a["ground_truth"] = true;
    json b = labeled_record("b", CueVector{});
    b["frame_refs"].erase(0);
    json dup = labeled_record("a", CueVector{});
    const auto report = validate_manifest_file(write_lines(dir, "many.jsonl", {a.dump(), b.dump(), dup.dump()}));
    ASSERT_EQ(report.violations.size(), 3u);
    EXPECT_EQ(report.violations[0].segment_id, "a");
    EXPECT_EQ(report.violations[1].segment_id, "b");
    EXPECT_EQ(report.violations[1].field, "frame_refs");
    EXPECT_EQ(report.violations[2].segment_id, "a");
}

TEST(Manifest, TranscriptOutsideSegmentIsRejected) {
    TempDir dir;
    json rec = labeled_record("t", CueVector{});
    rec["transcript"][0]["end_s"] = 12.0;
    const auto report = validate_manifest_file(write_lines(dir, "tr.jsonl", {rec.dump()}));
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].field, "transcript[0]");
}

TEST(Manifest, LoadErrors) {
    TempDir dir;
    EXPECT_THROW(load_manifest(dir / "missing.jsonl"), IoError);
    EXPECT_THROW(validate_manifest_file(dir / "missing.jsonl"), IoError);
    EXPECT_THROW(load_manifest(write_lines(dir, "junk.jsonl", {"{not json"})), ParseError);
    json rec = labeled_record("a", CueVector{});
    rec["ground_truth"] = true;
    EXPECT_THROW(load_manifest(write_lines(dir, "bad.jsonl", {rec.dump()})), ValidationError);
}

TEST(Manifest, RawAnnotationsAreVotedOrDiscarded) {
    TempDir dir;
    auto annotations = [](bool aud_agree) {
        json arr = json::array();
        for (int i = 0; i < 3; ++i) {
            json cues = cues_to_json(CueVector{});
            json conf = json::object();
            for (Cue cue : kAllCues) conf[std::string(cue_key(cue))] = "HIGH";
            if (aud_agree) {
                cues["aud"] = true;
            } else {
                conf["aud"] = i == 0 ? "HIGH" : "LOW";
            }
            arr.push_back(json{{"annotator_id", "ann" + std::to_string(i)}, {"cues", cues}, {"confidence", conf}});
        }
        return arr;
    };
    json kept = labeled_record("kept", CueVector{});
    kept.erase("cues");
    kept.erase("ground_truth");
    kept["annotations"] = annotations(true);
    json dropped = kept;
    dropped["segment_id"] = "dropped";
    dropped["annotations"] = annotations(false);

    const auto m = load_manifest(write_lines(dir, "raw.jsonl", {kept.dump(), dropped.dump()}));
    ASSERT_EQ(m.segments.size(), 1u);
    EXPECT_TRUE(m.segments[0].consensus[Cue::aud]);
    EXPECT_TRUE(m.segments[0].ground_truth_interaction);
    EXPECT_EQ(m.segments[0].provenance, Provenance::consensus);
    ASSERT_EQ(m.discarded.size(), 1u);
    EXPECT_EQ(m.discarded[0].segment_id, "dropped");
    EXPECT_TRUE(m.discarded[0].ambiguous_cues.contains(Cue::aud));
    EXPECT_EQ(m.discarded[0].ambiguous_cues.size(), 1);
}

// -- statistics ------------------------------------------------------------------

TEST(Distribution, CountsAndRates) {
    DatasetManifest m = manifest_of({make_segment("a", CueVector::from_bits(1u << index_of(Cue::aud))),
                                     make_segment("b", CueVector{}), make_segment("c", CueVector{}),
                                     make_segment("d", CueVector::from_bits(0xFF))});
    const auto r = distribution_report(m);
    EXPECT_EQ(r.segment_count, 4u);
    EXPECT_EQ(r.pair_count, 36u);
    EXPECT_EQ(r.variables[index_of(Cue::aud)].positives, 2u);
    EXPECT_DOUBLE_EQ(r.variables[index_of(Cue::aud)].rate, 0.5);
    EXPECT_EQ(r.variables[kCueCount].name, "GROUND_TRUTH");
    EXPECT_EQ(r.variables[kCueCount].positives, 2u);
    EXPECT_THROW(distribution_report(DatasetManifest{}), ValidationError);
}

TEST(Correlation, MatchesTwoPassPearson) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng() % 300;
        std::vector<LabeledSegment> segs;
        std::uniform_real_distribution<double> density(0.05, 0.95);
        std::array<double, kCueCount> p{};
        for (auto& v : p) v = density(rng);
        for (std::size_t i = 0; i < n; ++i) {
            CueVector v;
            for (Cue cue : kAllCues) v[cue] = std::bernoulli_distribution(p[index_of(cue)])(rng);
            segs.push_back(make_segment("s" + std::to_string(i), v));
        }
        const auto m = manifest_of(std::move(segs));
        const auto corr = cue_correlation_matrix(m);

        std::array<std::vector<double>, kStatVariables> cols;
        for (const auto& s : m.segments) {
            for (Cue cue : kAllCues) cols[index_of(cue)].push_back(s.consensus[cue] ? 1.0 : 0.0);
            cols[kCueCount].push_back(s.ground_truth_interaction ? 1.0 : 0.0);
        }
        for (std::size_t i = 0; i < kStatVariables; ++i) {
            for (std::size_t j = 0; j < kStatVariables; ++j) {
                const auto expected = oracle::pearson(cols[i], cols[j]);
                const auto& got = corr.at(i, j);
                ASSERT_EQ(expected.has_value(), got.has_value()) << i << "," << j;
                if (expected) EXPECT_NEAR(*got, *expected, 1e-12) << i << "," << j;
            }
        }
    }
}

TEST(Correlation, ConstantColumnsAreUndefined) {
    const auto m = manifest_of({make_segment("a", CueVector{}), make_segment("b", CueVector::from_bits(1))});
    const auto corr = cue_correlation_matrix(m);
    EXPECT_FALSE(corr.at(index_of(Cue::sfd), index_of(Cue::osad)).has_value());
    EXPECT_NE(corr.to_csv().find(std::string(kUndefinedMarker)), std::string::npos);
    EXPECT_THROW(cue_correlation_matrix(manifest_of({make_segment("a", CueVector{})})), ValidationError);
}
