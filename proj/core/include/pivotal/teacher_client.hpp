#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pivotal {

struct TeacherMessage {
    std::string role;  // "system" or "user"
    std::string content;
};

struct TeacherRequest {
    std::string model_name;
    std::vector<TeacherMessage> messages;
    double temperature = 0.0;
    std::optional<std::string> image_ref;  // opaque reference, forwarded as-is
};

enum class TeacherStatus { Ok, TransientError, PermanentError };

struct TeacherResponse {
    std::string content;
    TeacherStatus status = TeacherStatus::Ok;
    std::string error;
};

/// Abstract teacher model. Implementations must be safe to call from
/// multiple threads.
class TeacherClient {
  public:
    virtual ~TeacherClient() = default;
    virtual TeacherResponse complete(const TeacherRequest& request) = 0;
};

/// Deterministic stand-in for the teacher model. Recognizes the three
/// pipeline prompts and produces structurally valid outputs: the insertion
/// step returns the original reasoning with one perception segment added at
/// a legal position. Failure injection covers the retry paths.
class MockTeacherClient : public TeacherClient {
  public:
    struct Options {
        int transient_failures = 0;   // fail this many calls before succeeding
        int fail_permanent_step = 0;  // 1..3 to hard-fail that step; 0 = never
        std::string observation = "The image shows the labeled quantities referenced here.";
    };

    MockTeacherClient() = default;
    explicit MockTeacherClient(Options options) : options_(std::move(options)) {}

    TeacherResponse complete(const TeacherRequest& request) override;

    int calls() const;

  private:
    Options options_;
    mutable std::mutex mutex_;
    int calls_ = 0;
    int transient_remaining_initialized_ = -1;
};

/// Production client speaking a chat-completion style JSON request over
/// HTTP(S). Endpoint and bearer token usually come from TEACHER_ENDPOINT and
/// TEACHER_API_KEY. Connection and 5xx/429 failures map to TransientError,
/// other HTTP errors to PermanentError.
class HttpTeacherClient : public TeacherClient {
  public:
    struct Options {
        std::string endpoint;  // e.g. https://host[:port]
        std::string api_key;
        std::string path = "/v1/chat/completions";
        int timeout_seconds = 60;
    };

    explicit HttpTeacherClient(Options options);

    TeacherResponse complete(const TeacherRequest& request) override;

  private:
    Options options_;
};

}  // namespace pivotal
