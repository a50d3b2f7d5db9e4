#include "egosod/remote.hpp"

#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "egosod/error.hpp"
#include "egosod/io.hpp"

namespace egosod {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// ResponseCache

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {}

fs::path ResponseCache::path_for(const std::string& key) const { return dir_ / (key + ".json"); }

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    const fs::path path = path_for(key);
    std::error_code ec;
    if (!fs::exists(path, ec)) return std::nullopt;
    try {
        const json entry = json::parse(read_file(path));
        if (entry.value("key", std::string()) != key) return std::nullopt;
        return entry.at("response").at("text").get<std::string>();
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void ResponseCache::store(const std::string& key, const json& metadata, const json& request,
                          const std::string& response_text) const {
    if (!enabled()) return;
    json entry = metadata;
    entry["key"] = key;
    entry["request"] = request;
    entry["response"] = json{{"text", response_text}};
    write_file_atomic(path_for(key), entry.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// RemoteBackend

std::pair<std::string, std::string> split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ValidationError("endpoint '" + url + "' has no scheme");
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ValidationError("endpoint '" + url + "' must use http or https");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    if (path_start == scheme_end + 3) throw ValidationError("endpoint '" + url + "' has no host");
    return {url.substr(0, path_start), url.substr(path_start)};
}

RemoteBackend::RemoteBackend(RemoteSpec spec, Mode mode)
    : spec_(std::move(spec)),
      mode_(mode),
      templates_(spec_.prompt_dir.empty() ? PromptTemplates::builtin() : PromptTemplates::load(spec_.prompt_dir)),
      cache_(spec_.cache_dir),
      slots_(std::make_unique<std::counting_semaphore<1024>>(std::clamp(spec_.max_concurrent_requests, 1, 1024))) {
    if (mode_ == Mode::live) {
        std::tie(scheme_host_port_, path_) = split_endpoint(spec_.endpoint);
    }
    if (!spec_.api_key_env.empty()) {
        if (const char* value = std::getenv(spec_.api_key_env.c_str())) {
            api_key_ = value;
        } else if (mode_ == Mode::live) {
            throw ValidationError("environment variable '" + spec_.api_key_env + "' named by api_key_env is not set");
        }
    }
}

std::string RemoteBackend::id() const {
    return std::string(mode_ == Mode::live ? "remote:" : "replay:") + spec_.model;
}

json RemoteBackend::request_body(const Prompt& prompt) const {
    json media = json::array();
    for (const auto& item : prompt.media) {
        const char* kind = item.kind == MediaItem::Kind::image ? "image" : "audio";
        std::error_code ec;
        if (spec_.inline_media && fs::is_regular_file(item.reference, ec)) {
            media.push_back(json{{"kind", kind}, {"data", base64_encode(read_file(item.reference))}});
        } else {
            media.push_back(json{{"kind", kind}, {"reference", item.reference}});
        }
    }
    return json{{"model", spec_.model}, {"text", prompt.text}, {"media", media}};
}

std::string RemoteBackend::post_with_retries(const json& body, const std::string& segment_id,
                                             const std::string& query) {
    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= spec_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(spec_.backoff_base * (1LL << std::min(attempt - 1, 16)));
        }

        httplib::Result result{nullptr, httplib::Error::Unknown};
        {
            slots_->acquire();
            httplib::Client client(scheme_host_port_);
            const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec_.timeout);
            const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(spec_.timeout - secs);
            client.set_connection_timeout(secs.count(), usecs.count());
            client.set_read_timeout(secs.count(), usecs.count());
            client.set_write_timeout(secs.count(), usecs.count());
            httplib::Headers headers;
            if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);
            ++requests_sent_;
            result = client.Post(path_, headers, payload, "application/json");
            slots_->release();
        }

        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        const int status = result->status;
        if (status == 429 || status >= 500) {
            last_error = "HTTP " + std::to_string(status);
            continue;
        }
        if (status < 200 || status >= 300) {
            throw BackendError("remote endpoint returned HTTP " + std::to_string(status) + " for segment '" +
                                   segment_id + "' query " + query,
                               segment_id, query);
        }
        try {
            return json::parse(result->body).at("text").get<std::string>();
        } catch (const std::exception& e) {
            throw BackendError("remote endpoint returned a malformed body for segment '" + segment_id + "' query " +
                                   query + ": " + e.what(),
                               segment_id, query);
        }
    }
    throw BackendError("remote request for segment '" + segment_id + "' query " + query + " failed after " +
                           std::to_string(spec_.max_retries + 1) + " attempt(s): " + last_error,
                       segment_id, query);
}

std::string RemoteBackend::complete(const std::string& key, const Prompt& prompt, const std::string& segment_id,
                                    const std::string& query) {
    if (auto hit = cache_.lookup(key)) {
        ++cache_hits_;
        return *hit;
    }
    if (mode_ == Mode::replay) {
        throw CacheMissError("no cached response for segment '" + segment_id + "' query " + query + " (key " + key +
                                 ")",
                             segment_id, query);
    }
    const json body = request_body(prompt);
    std::string text = post_with_retries(body, segment_id, query);
    cache_.store(key,
                 json{{"model", spec_.model},
                      {"segment_id", segment_id},
                      {"query", query},
                      {"prompt_version", templates_.version}},
                 body, text);
    return text;
}

CueAnswer RemoteBackend::to_answer(std::string raw) const {
    CueAnswer answer;
    try {
        answer.value = parse_answer(raw);
    } catch (const ParseError&) {
        answer.value = false;
        answer.parse_failed = true;
    }
    answer.raw = std::move(raw);
    return answer;
}

CueAnswer RemoteBackend::answer_cue(const LabeledSegment& segment, Cue cue, const ModalityConfig& modality) {
    if (is_audio_cue(cue) && !modality.has_audio()) {
        throw ValidationError("cue " + std::string(cue_acronym(cue)) + " needs audio but the modality is " +
                              std::string(to_string(modality.mode)));
    }
    // Per-cue prompts do not depend on the variant; a fixed variant in the key
    // lets every variant share the same cached cue answers.
    const PromptVariant canonical{};
    const Prompt prompt = build_prompt(segment.segment, cue, modality, canonical, std::nullopt, templates_);
    const std::string& id = segment.segment.segment_id;
    const std::string key = cache_key(id, cue, modality, canonical, spec_.model, "templates=" + templates_.version);
    return to_answer(complete(key, prompt, id, query_name(cue)));
}

CueAnswer RemoteBackend::answer_final(const LabeledSegment& segment, const ModalityConfig& modality,
                                      const PromptVariant& variant, const std::optional<CueVector>& prior) {
    const Prompt prompt = build_prompt(segment.segment, FinalDecision{}, modality, variant, prior, templates_);
    std::string context = "templates=" + templates_.version;
    if (variant.base == PromptVariant::Base::graph && prior) context += ";prior=" + std::to_string(prior->to_bits());
    const std::string& id = segment.segment.segment_id;
    const std::string key = cache_key(id, FinalDecision{}, modality, variant, spec_.model, context);
    return to_answer(complete(key, prompt, id, "FINAL_DECISION"));
}

}  // namespace egosod
