// CPPHTTPLIB_OPENSSL_SUPPORT comes from the build so every translation unit
// sees the same httplib configuration.
#include "httplib.h"

#include "pivotal/teacher_client.hpp"

#include <string_view>

#include "json.hpp"
#include "text_util.hpp"

namespace pivotal {

namespace {

using nlohmann::json;

enum class PipelineStep { Description = 1, Suggestions = 2, Insertion = 3, Unknown = 0 };

PipelineStep detect_step(const TeacherRequest& request) {
    if (request.messages.empty()) {
        return PipelineStep::Unknown;
    }
    const std::string& content = request.messages.back().content;
    if (content.find("comprehensive description of this image") != std::string::npos) {
        return PipelineStep::Description;
    }
    if (content.find("Suggest where perception segments") != std::string::npos) {
        return PipelineStep::Suggestions;
    }
    if (content.find("You will use the provided suggestions") != std::string::npos) {
        return PipelineStep::Insertion;
    }
    return PipelineStep::Unknown;
}

// Pulls the reasoning text back out of a filled insertion prompt.
std::string extract_thinking_content(const std::string& prompt) {
    static constexpr std::string_view kHeader =
        "Thinking Content (MUST be preserved exactly as shown below):\n";
    static constexpr std::string_view kTrailer = "\n\nPerception Suggestions:";
    const std::size_t begin = prompt.find(kHeader);
    if (begin == std::string::npos) {
        return {};
    }
    const std::size_t content_begin = begin + kHeader.size();
    const std::size_t end = prompt.rfind(kTrailer);
    if (end == std::string::npos || end < content_begin) {
        return {};
    }
    return prompt.substr(content_begin, end - content_begin);
}

bool is_insertion_point(std::string_view text, std::size_t pos) {
    const char c = text[pos];
    if (c == '.' || c == '!' || c == '?' || c == ':' || c == ';') {
        return true;
    }
    const auto cp = detail::decode_utf8(text, pos);
    return cp.length == 3 && detail::is_terminator_cp(cp.value);
}

// Inserts one perception segment at the first legal break point: directly
// after the first terminator, or at the start when the text has none.
std::string insert_observation(const std::string& cot, const std::string& observation) {
    const std::string segment = "<perception>" + observation + "</perception>";
    std::size_t pos = 0;
    while (pos < cot.size()) {
        if (is_insertion_point(cot, pos)) {
            const std::size_t after = pos + detail::decode_utf8(cot, pos).length;
            return cot.substr(0, after) + segment + cot.substr(after);
        }
        pos += detail::decode_utf8(cot, pos).length;
    }
    return segment + cot;
}

}  // namespace

TeacherResponse MockTeacherClient::complete(const TeacherRequest& request) {
    const PipelineStep step = detect_step(request);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        ++calls_;
        if (transient_remaining_initialized_ < 0) {
            transient_remaining_initialized_ = options_.transient_failures;
        }
        if (transient_remaining_initialized_ > 0) {
            --transient_remaining_initialized_;
            return {"", TeacherStatus::TransientError, "injected transient failure"};
        }
    }
    if (options_.fail_permanent_step == static_cast<int>(step)) {
        return {"", TeacherStatus::PermanentError, "injected permanent failure"};
    }

    switch (step) {
        case PipelineStep::Description:
            return {"The image shows the quantities and labels the question refers to, with every "
                    "marked value legible.",
                    TeacherStatus::Ok, ""};
        case PipelineStep::Suggestions:
            return {"- After the first sentence.\n"
                    "  - Suggested perception: Describe the labeled values visible in the image.",
                    TeacherStatus::Ok, ""};
        case PipelineStep::Insertion: {
            const std::string cot = extract_thinking_content(request.messages.back().content);
            if (cot.empty()) {
                return {"", TeacherStatus::PermanentError, "prompt missing thinking content"};
            }
            return {insert_observation(cot, options_.observation), TeacherStatus::Ok, ""};
        }
        case PipelineStep::Unknown:
            break;
    }
    // Generic judge-style fallback so the mock can stand behind other
    // client-backed interfaces in tests.
    return {"{\"verification\": false, \"backtracking\": false, \"subgoal_setting\": false, "
            "\"backward_chaining\": false}",
            TeacherStatus::Ok, ""};
}

int MockTeacherClient::calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return calls_;
}

HttpTeacherClient::HttpTeacherClient(Options options) : options_(std::move(options)) {}

TeacherResponse HttpTeacherClient::complete(const TeacherRequest& request) {
    json payload;
    payload["model"] = request.model_name;
    payload["temperature"] = request.temperature;
    payload["messages"] = json::array();
    for (const auto& message : request.messages) {
        payload["messages"].push_back({{"role", message.role}, {"content", message.content}});
    }
    if (request.image_ref) {
        payload["image_ref"] = *request.image_ref;
    }
    const std::string body = payload.dump();

    // The universal client speaks both http:// and https:// endpoints.
    httplib::Client client(options_.endpoint);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!options_.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options_.api_key);
    }
    auto res = client.Post(options_.path, headers, body, "application/json");
    if (!res) {
        return {"", TeacherStatus::TransientError,
                "connection failed: " + httplib::to_string(res.error())};
    }
    if (res->status == 429 || res->status >= 500) {
        return {"", TeacherStatus::TransientError, "http status " + std::to_string(res->status)};
    }
    if (res->status != 200) {
        return {"", TeacherStatus::PermanentError, "http status " + std::to_string(res->status)};
    }
    try {
        const json reply = json::parse(res->body);
        if (reply.contains("choices") && !reply["choices"].empty()) {
            return {reply["choices"][0]["message"]["content"].get<std::string>(),
                    TeacherStatus::Ok, ""};
        }
        if (reply.contains("content")) {
            return {reply["content"].get<std::string>(), TeacherStatus::Ok, ""};
        }
        return {"", TeacherStatus::PermanentError, "response missing content"};
    } catch (const json::exception& e) {
        return {"", TeacherStatus::PermanentError, std::string("bad response json: ") + e.what()};
    }
}

}  // namespace pivotal
