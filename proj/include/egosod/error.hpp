#pragma once

#include <stdexcept>
#include <string>

namespace egosod {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input or configuration violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed text input: manifest lines, config documents, model answers.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::string raw = {})
        : Error(message), raw_(std::move(raw)) {}

    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// A cue backend could not produce an answer (transport failure, bad response).
class BackendError : public Error {
public:
    BackendError(const std::string& message, std::string segment_id, std::string query)
        : Error(message), segment_id_(std::move(segment_id)), query_(std::move(query)) {}

    const std::string& segment_id() const noexcept { return segment_id_; }
    const std::string& query() const noexcept { return query_; }

private:
    std::string segment_id_;
    std::string query_;
};

/// Replay backend asked for a response that is not in the cache.
class CacheMissError : public BackendError {
public:
    using BackendError::BackendError;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace egosod
