#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

#include "egosod/detectors.hpp"
#include "egosod/prompt.hpp"

namespace egosod {

/// One file per cache key, JSON with the request and the raw response.
/// Writes are atomic (write then rename); concurrent readers see whole entries.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    bool enabled() const noexcept { return !dir_.empty(); }
    std::filesystem::path path_for(const std::string& key) const;

    /// The cached response text, if present and well-formed.
    std::optional<std::string> lookup(const std::string& key) const;
    void store(const std::string& key, const nlohmann::json& metadata, const nlohmann::json& request,
               const std::string& response_text) const;

private:
    std::filesystem::path dir_;
};

/// Sends prompts to a generic JSON endpoint:
///   request  {"model", "text", "media": [{"kind", "reference"} | {"kind", "data"}]}
///   response {"text"}
/// Vendor APIs are reached through an adapter serving this contract.
class RemoteBackend final : public CueBackend {
public:
    enum class Mode { live, replay };

    RemoteBackend(RemoteSpec spec, Mode mode);

    std::string id() const override;
    CueAnswer answer_cue(const LabeledSegment& segment, Cue cue, const ModalityConfig& modality) override;
    CueAnswer answer_final(const LabeledSegment& segment, const ModalityConfig& modality,
                           const PromptVariant& variant, const std::optional<CueVector>& prior) override;

    /// HTTP attempts made, including retries.
    std::uint64_t requests_sent() const noexcept { return requests_sent_.load(); }
    std::uint64_t cache_hits() const noexcept { return cache_hits_.load(); }

    nlohmann::json request_body(const Prompt& prompt) const;

private:
    std::string complete(const std::string& key, const Prompt& prompt, const std::string& segment_id,
                         const std::string& query);
    std::string post_with_retries(const nlohmann::json& body, const std::string& segment_id,
                                  const std::string& query);
    CueAnswer to_answer(std::string raw) const;

    RemoteSpec spec_;
    Mode mode_;
    PromptTemplates templates_;
    ResponseCache cache_;
    std::string scheme_host_port_;
    std::string path_;
    std::optional<std::string> api_key_;
    std::unique_ptr<std::counting_semaphore<1024>> slots_;
    std::atomic<std::uint64_t> requests_sent_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
};

/// Splits "http://host:8080/v1/x" into ("http://host:8080", "/v1/x"). Throws ValidationError.
std::pair<std::string, std::string> split_endpoint(const std::string& url);

}  // namespace egosod
