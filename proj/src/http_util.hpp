#pragma once

// Shared HTTP plumbing for the chat-completion and retrieval clients.
// Internal to src/.

#include <chrono>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ragloop/errors.hpp"

namespace ragloop::detail {

struct HttpRetryPolicy {
    int max_retries = 3;
    int backoff_base_ms = 200;
    int timeout_sec = 120;
};

inline bool retryable_status(int status) {
    return status == 429 || status == 500 || status == 502 || status == 503 || status == 504;
}

/// POST body as JSON, parse a JSON reply. Retries transport failures and
/// retryable statuses with exponential backoff; throws BackendRejected for
/// other non-2xx statuses, TimeoutError/TransportError once the budget is
/// spent, and ParseError if the reply is not JSON.
inline nlohmann::json post_json(const std::string& base_url, const std::string& path,
                                const nlohmann::json& body, const httplib::Headers& headers,
                                const HttpRetryPolicy& policy) {
    const std::string payload = body.dump();
    std::string last_error;
    bool last_was_timeout = false;

    for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
        if (attempt > 0) {
            auto delay = std::chrono::milliseconds(
                static_cast<long long>(policy.backoff_base_ms) * (1LL << (attempt - 1)));
            std::this_thread::sleep_for(delay);
        }

        httplib::Client client(base_url);
        client.set_connection_timeout(policy.timeout_sec, 0);
        client.set_read_timeout(policy.timeout_sec, 0);
        client.set_write_timeout(policy.timeout_sec, 0);

        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_was_timeout = res.error() == httplib::Error::ConnectionTimeout ||
                               res.error() == httplib::Error::Read ||
                               res.error() == httplib::Error::Write;
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw ParseError(std::string("backend reply is not JSON: ") + e.what());
            }
        }
        if (retryable_status(res->status)) {
            last_was_timeout = false;
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        throw BackendRejected(res->status, res->body);
    }

    const std::string detail = base_url + path + " after " +
                               std::to_string(policy.max_retries + 1) + " attempts (" + last_error + ")";
    if (last_was_timeout) throw TimeoutError(detail);
    throw TransportError(detail);
}

}  // namespace ragloop::detail
