#include "test_support.hpp"

#include <chrono>
#include <random>
#include <unordered_map>

#include <httplib.h>

namespace egosod::testing {

namespace fs = std::filesystem;
using nlohmann::json;

TempDir::TempDir(const std::string& prefix) {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    for (;;) {
        const auto candidate = fs::temp_directory_path() /
                               (prefix + "-" + std::to_string(rd()) + "-" + std::to_string(counter.fetch_add(1)));
        if (fs::create_directories(candidate)) {
            path_ = candidate;
            return;
        }
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

MockModelServer::MockModelServer(Handler handler) : server_(std::make_unique<httplib::Server>()), handler_(std::move(handler)) {
    server_->Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::size_t index = requests_.fetch_add(1);
        MockReply reply;
        try {
            std::lock_guard lock(mutex_);
            last_authorization_ = req.get_header_value("Authorization");
            reply = handler_(json::parse(req.body), index);
        } catch (const std::exception& e) {
            reply = MockReply{400, json{{"error", e.what()}}.dump()};
        }
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

MockModelServer::~MockModelServer() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string MockModelServer::last_authorization() {
    std::lock_guard lock(mutex_);
    return last_authorization_;
}

std::string MockModelServer::endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/generate"; }

MockModelServer::Handler truthful_handler(const DatasetManifest& manifest) {
    auto by_ref = std::make_shared<std::unordered_map<std::string, const LabeledSegment*>>();
    for (const auto& s : manifest.segments) {
        for (const auto& ref : s.segment.frame_refs) (*by_ref)[ref] = &s;
    }
    return [by_ref](const json& request, std::size_t) {
        const std::string& text = request.at("text").get_ref<const std::string&>();
        const LabeledSegment* segment = nullptr;
        for (const auto& item : request.at("media")) {
            if (!item.contains("reference")) continue;
            auto it = by_ref->find(item.at("reference").get<std::string>());
            if (it != by_ref->end()) segment = it->second;
        }
        if (!segment) return MockReply{404, R"({"error":"unknown segment"})"};
        bool answer = false;
        if (text.find("Am I currently in a social interaction") != std::string::npos) {
            answer = segment->ground_truth_interaction;
        } else {
            bool found = false;
            for (Cue cue : kAllCues) {
                if (text.find("Question: " + std::string(cue_question(cue))) != std::string::npos) {
                    answer = segment->consensus[cue];
                    found = true;
                }
            }
            if (!found) return MockReply{400, R"({"error":"unknown question"})"};
        }
        return MockReply{200, json{{"text", answer ? "Yes." : "No."}}.dump()};
    };
}

CueAnswer CountingBackend::answer_cue(const LabeledSegment& segment, Cue cue, const ModalityConfig& modality) {
    per_cue_[index_of(cue)].fetch_add(1);
    return inner_.answer_cue(segment, cue, modality);
}

CueAnswer CountingBackend::answer_final(const LabeledSegment& segment, const ModalityConfig& modality,
                                        const PromptVariant& variant, const std::optional<CueVector>& prior) {
    finals_.fetch_add(1);
    return inner_.answer_final(segment, modality, variant, prior);
}

std::size_t CountingBackend::total_cue_queries() const noexcept {
    std::size_t total = 0;
    for (const auto& c : per_cue_) total += c.load();
    return total;
}

namespace {

Scenario scenario(const std::string& name, double weight, std::initializer_list<std::pair<Cue, double>> probs) {
    Scenario s;
    s.name = name;
    s.weight = weight;
    for (const auto& [cue, p] : probs) s.cue_probs[index_of(cue)] = p;
    return s;
}

}  // namespace

GeneratorConfig everyday_mixture(std::size_t n_segments, std::uint64_t seed, const std::string& name) {
    GeneratorConfig c;
    c.name = name;
    c.n_segments = n_segments;
    c.seed = seed;
    c.scenarios = {
        scenario("conversation", 0.4,
                 {{Cue::osad, 0.9}, {Cue::stad, 0.7}, {Cue::aud, 0.6}, {Cue::udsd, 0.6}, {Cue::pad, 0.8},
                  {Cue::igd, 0.7}, {Cue::ogd, 0.7}, {Cue::sfd, 0.1}}),
        scenario("bystander", 0.35,
                 {{Cue::osad, 0.6}, {Cue::stad, 0.3}, {Cue::aud, 0.1}, {Cue::udsd, 0.05}, {Cue::pad, 0.4},
                  {Cue::igd, 0.2}, {Cue::ogd, 0.3}, {Cue::sfd, 0.3}}),
        scenario("solo_task", 0.25,
                 {{Cue::osad, 0.1}, {Cue::stad, 0.02}, {Cue::aud, 0.02}, {Cue::udsd, 0.05}, {Cue::pad, 0.1},
                  {Cue::igd, 0.05}, {Cue::ogd, 0.05}, {Cue::sfd, 0.8}}),
    };
    return c;
}

GeneratorConfig all_negative_mixture(std::size_t n_segments, const std::string& name) {
    GeneratorConfig c;
    c.name = name;
    c.n_segments = n_segments;
    c.scenarios = {scenario("empty_room", 1.0, {})};
    return c;
}

LabeledSegment make_segment(const std::string& id, const CueVector& cues) {
    LabeledSegment ls;
    ls.segment.segment_id = id;
    ls.segment.clip_id = "clip";
    ls.segment.frame_times = frame_schedule(10.0, 1.0);
    for (std::size_t i = 0; i < ls.segment.frame_times.size(); ++i) {
        ls.segment.frame_refs.push_back("mem://" + id + "/frame_" + std::to_string(i) + ".jpg");
    }
    ls.segment.audio_ref = "mem://" + id + "/audio.wav";
    Utterance a{SpeakerTag::other(1), 0.5, 3.0, "could you pass the salt", false};
    Utterance b{SpeakerTag::wearer(), 3.5, 6.0, "sure here you go", false};
    ls.segment.transcript = std::vector<Utterance>{a, b};
    ls.consensus = cues;
    ls.ground_truth_interaction = derive_ground_truth(cues);
    return ls;
}

}  // namespace egosod::testing

namespace egosod::testing {

const std::vector<ResponseShape>& response_corpus() {
    static const std::vector<ResponseShape> corpus = {
        {"Yes.", true},
        {"no", false},
        {"NO", false},
        {"  yes  \n", true},
        {"Answer: no, the wearer is alone", false},
        {"Answer: Yes", true},
        {"\"Yes\"", true},
        {"**No**", false},
        {"Yes, someone is looking at the camera wearer.", true},
        {"No. Nobody is within arm's reach.", false},
        {"The person on the left is facing me and speaking.\nFinal answer: YES", true},
        {"Step 1: nobody speaks.\nStep 2: no gaze toward me.\nFinal answer: no", false},
        {"Reasoning: although there is no eye contact, the woman addresses the wearer.\nFinal answer: yes", true},
        {"I considered OSAD (yes) and AUD (no).\nVerdict: No", false},
        {"Final Answer:\nYes", true},
        {"Decision - yes", true},
        {"Based on the frames, I would say yes.", true},
        {"There is no one else present, so the answer is no.", false},
        {"Cues used: PAD, IGD.\nThe wearer is clearly engaged.\nConclusion: yes.", true},
        {"yes\n\nExplanation: two people are talking in turns, but not to me... no wait.\nFinal answer: no", false},
    };
    return corpus;
}

}  // namespace egosod::testing
