#include "ragloop/backend.hpp"

#include <algorithm>

#include "http_util.hpp"

namespace ragloop {

std::string_view stop_reason_name(StopReason reason) {
    switch (reason) {
        case StopReason::StopSequence: return "stop_sequence";
        case StopReason::MaxTokens: return "max_tokens";
        case StopReason::EndOfSequence: return "end_of_sequence";
    }
    return "";
}

void GenerationRequest::validate() const {
    if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (stop.size() > 4) throw ConfigError("at most 4 stop sequences are supported");
}

ConcurrencyLimiter::ConcurrencyLimiter(int limit) : available_(limit) {
    if (limit < 1) throw ConfigError("concurrency limit must be >= 1");
}

ConcurrencyLimiter::Guard::Guard(ConcurrencyLimiter& limiter) : limiter_(limiter) {
    limiter_.acquire();
}

ConcurrencyLimiter::Guard::~Guard() {
    limiter_.release();
}

void ConcurrencyLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
}

void ConcurrencyLimiter::release() {
    std::lock_guard lock(mutex_);
    ++available_;
    cv_.notify_one();
}

// ---------------------------------------------------------------------------
// ScriptedLlmClient
// ---------------------------------------------------------------------------

ScriptedLlmClient::ScriptedLlmClient(ScriptedPolicy policy) : policy_(std::move(policy)) {}

GenerationResult ScriptedLlmClient::generate(const GenerationRequest& request) {
    request.validate();
    std::lock_guard lock(mutex_);
    if (next_ >= policy_.steps.size()) throw PolicyExhausted(policy_.steps.size());

    const PolicyStep& step = policy_.steps[next_];
    if (!step.expect_substring.empty() &&
        request.prompt.find(step.expect_substring) == std::string::npos) {
        std::string tail = request.prompt.size() > 160
                               ? request.prompt.substr(request.prompt.size() - 160)
                               : request.prompt;
        throw PolicyMismatch(next_, step.expect_substring, tail);
    }
    ++next_;

    GenerationResult result;
    result.text = step.response;
    result.stop_reason = StopReason::EndOfSequence;

    std::size_t cut = std::string::npos;
    for (const auto& stop : request.stop) {
        if (stop.empty()) continue;
        std::size_t pos = result.text.find(stop);
        if (pos != std::string::npos && pos < cut) cut = pos;
    }
    if (cut != std::string::npos) {
        result.text.resize(cut);
        result.stop_reason = StopReason::StopSequence;
    } else if (result.text.size() > static_cast<std::size_t>(request.max_new_tokens)) {
        result.text.resize(static_cast<std::size_t>(request.max_new_tokens));
        result.stop_reason = StopReason::MaxTokens;
    }

    result.usage.prompt_tokens = static_cast<long>(request.prompt.size());
    result.usage.completion_tokens = static_cast<long>(result.text.size());
    return result;
}

std::size_t ScriptedLlmClient::steps_consumed() const {
    std::lock_guard lock(mutex_);
    return next_;
}

bool ScriptedLlmClient::exhausted() const {
    std::lock_guard lock(mutex_);
    return next_ >= policy_.steps.size();
}

// ---------------------------------------------------------------------------
// HttpLlmClient
// ---------------------------------------------------------------------------

HttpLlmClient::HttpLlmClient(HttpBackendConfig config, std::shared_ptr<ConcurrencyLimiter> limiter)
    : config_(std::move(config)), limiter_(std::move(limiter)) {
    if (config_.base_url.empty()) throw ConfigError("backend base_url is empty");
    if (!limiter_) limiter_ = std::make_shared<ConcurrencyLimiter>(config_.max_concurrent);
}

GenerationResult HttpLlmClient::generate(const GenerationRequest& request) {
    request.validate();

    nlohmann::json body{
        {"model", request.model_id},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"max_tokens", request.max_new_tokens},
        {"temperature", request.temperature},
    };
    if (!request.stop.empty()) body["stop"] = request.stop;
    if (request.seed) body["seed"] = *request.seed;

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    detail::HttpRetryPolicy policy{config_.max_retries, config_.backoff_base_ms, config_.timeout_sec};

    ConcurrencyLimiter::Guard guard(*limiter_);
    nlohmann::json reply = detail::post_json(config_.base_url, config_.path, body, headers, policy);

    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty()) {
        throw ParseError("backend reply has no choices: " + reply.dump());
    }
    const auto& choice = reply["choices"][0];

    GenerationResult result;
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
        result.text = choice["message"]["content"].get<std::string>();
    } else if (choice.contains("text") && choice["text"].is_string()) {
        result.text = choice["text"].get<std::string>();
    } else {
        throw ParseError("backend reply has no message content: " + reply.dump());
    }

    std::string finish = choice.value("finish_reason", "");
    if (finish == "length") {
        result.stop_reason = StopReason::MaxTokens;
    } else if (finish == "stop" && !request.stop.empty()) {
        result.stop_reason = StopReason::StopSequence;
    } else {
        result.stop_reason = StopReason::EndOfSequence;
    }

    // Some servers echo the stop sequence; the post-strip text excludes it.
    std::size_t cut = std::string::npos;
    for (const auto& stop : request.stop) {
        if (stop.empty()) continue;
        std::size_t pos = result.text.find(stop);
        if (pos != std::string::npos && pos < cut) cut = pos;
    }
    if (cut != std::string::npos) {
        result.text.resize(cut);
        result.stop_reason = StopReason::StopSequence;
    }

    if (reply.contains("usage") && reply["usage"].is_object()) {
        result.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
        result.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
    }
    return result;
}

std::string generate_judged_text(LlmClient& client, const trace::TemplateSet& templates,
                                 trace::TemplateId id, const trace::TemplateSet::Bindings& bindings,
                                 const std::string& model_id, int max_new_tokens, double temperature,
                                 TokenUsage* usage_out) {
    GenerationRequest request;
    request.model_id = model_id;
    request.prompt = templates.render(id, bindings);
    request.max_new_tokens = max_new_tokens;
    request.temperature = temperature;
    GenerationResult result = client.generate(request);
    if (usage_out) *usage_out += result.usage;
    return result.text;
}

}  // namespace ragloop
