#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ragloop/errors.hpp"
#include "ragloop/trace.hpp"

namespace ragloop {

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;

    TokenUsage& operator+=(const TokenUsage& other) {
        prompt_tokens += other.prompt_tokens;
        completion_tokens += other.completion_tokens;
        return *this;
    }
};

enum class StopReason { StopSequence, MaxTokens, EndOfSequence };

std::string_view stop_reason_name(StopReason reason);

struct GenerationRequest {
    std::string model_id;
    std::string prompt;
    std::vector<std::string> stop;  // at most 4 entries
    int max_new_tokens = 1024;
    double temperature = 0.0;
    std::optional<long> seed;

    void validate() const;
};

/// text never contains a matched stop sequence; clients strip it.
struct GenerationResult {
    std::string text;
    StopReason stop_reason = StopReason::EndOfSequence;
    TokenUsage usage;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual GenerationResult generate(const GenerationRequest& request) = 0;
};

/// Bounds the number of outbound calls in flight (default 4).
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int limit = 4);

    class Guard {
    public:
        explicit Guard(ConcurrencyLimiter& limiter);
        ~Guard();
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;

    private:
        ConcurrencyLimiter& limiter_;
    };

private:
    void acquire();
    void release();

    std::mutex mutex_;
    std::condition_variable cv_;
    int available_;
};

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

/// One scripted exchange: the prompt must contain expect_substring (empty
/// matches anything), and response is returned subject to the request's stop
/// sequences and token budget.
struct PolicyStep {
    std::string expect_substring;
    std::string response;
};

struct ScriptedPolicy {
    std::vector<PolicyStep> steps;
};

/// Deterministic offline backend. Steps are consumed strictly in order; a
/// prompt that does not match the next step throws PolicyMismatch, and a call
/// past the last step throws PolicyExhausted. Token accounting is one byte
/// per token, which also defines the MaxTokens truncation rule.
class ScriptedLlmClient : public LlmClient {
public:
    explicit ScriptedLlmClient(ScriptedPolicy policy);

    GenerationResult generate(const GenerationRequest& request) override;

    std::size_t steps_consumed() const;
    bool exhausted() const;

private:
    ScriptedPolicy policy_;
    std::size_t next_ = 0;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// HTTP chat-completions client
// ---------------------------------------------------------------------------

struct HttpBackendConfig {
    std::string base_url;  // e.g. "http://127.0.0.1:8000"
    std::string path = "/v1/chat/completions";
    std::string api_key;   // empty: no Authorization header
    int max_retries = 3;   // N retries = at most N+1 attempts
    int backoff_base_ms = 200;
    int timeout_sec = 120;
    int max_concurrent = 4;
};

/// Client for the usual chat-completions wire shape:
///   request  {model, messages:[{role,content}], stop, max_tokens, temperature, seed}
///   response {choices:[{message:{content}, finish_reason}], usage}
/// Transient transport failures and 429/5xx responses are retried with
/// exponential backoff up to max_retries; other error statuses raise
/// BackendRejected immediately.
class HttpLlmClient : public LlmClient {
public:
    explicit HttpLlmClient(HttpBackendConfig config,
                           std::shared_ptr<ConcurrencyLimiter> limiter = nullptr);

    GenerationResult generate(const GenerationRequest& request) override;

    const HttpBackendConfig& config() const { return config_; }

private:
    HttpBackendConfig config_;
    std::shared_ptr<ConcurrencyLimiter> limiter_;
};

/// Renders a judge/extractor template and returns the raw completion text
/// (no stop sequences). usage_out, when given, accumulates token usage.
std::string generate_judged_text(LlmClient& client, const trace::TemplateSet& templates,
                                 trace::TemplateId id, const trace::TemplateSet::Bindings& bindings,
                                 const std::string& model_id, int max_new_tokens = 1024,
                                 double temperature = 0.0, TokenUsage* usage_out = nullptr);

}  // namespace ragloop
