#pragma once

// HTTP completion backend speaking the OpenAI-compatible chat-completions
// wire protocol. Kept out of llm.hpp so replay-only builds stay socket-free.

#include <chrono>
#include <functional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "newsagent/llm.hpp"

namespace newsagent {

struct http_backend_options {
    std::string endpoint_url;  // e.g. http://localhost:8081/v1/chat/completions
    std::string api_key;       // sent as a bearer token when non-empty
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{1000};
    double backoff_factor = 2.0;
    std::chrono::seconds read_timeout{60};
    // Injectable for tests; defaults to a real sleep.
    std::function<void(std::chrono::milliseconds)> sleep_fn;
};

class http_backend : public completion_backend {
public:
    explicit http_backend(http_backend_options opts) : opts_(std::move(opts)) {
        if (!opts_.sleep_fn)
            opts_.sleep_fn = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
        auto scheme_end = opts_.endpoint_url.find("://");
        if (scheme_end == std::string::npos)
            throw std::invalid_argument("endpoint_url needs a scheme: " + opts_.endpoint_url);
        auto path_start = opts_.endpoint_url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base_ = opts_.endpoint_url;
            path_ = "/";
        } else {
            base_ = opts_.endpoint_url.substr(0, path_start);
            path_ = opts_.endpoint_url.substr(path_start);
        }
    }

    std::string complete(const completion_request& req) override {
        validate_request(req);

        nlohmann::json body{{"model", req.model}, {"temperature", req.temperature}};
        auto& messages = body["messages"] = nlohmann::json::array();
        for (const auto& m : req.messages)
            messages.push_back({{"role", m.role}, {"content", m.content}});
        if (req.max_tokens) body["max_tokens"] = *req.max_tokens;
        const std::string payload = body.dump();

        std::string last_error;
        auto delay = opts_.base_delay;
        for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
            if (attempt > 1) {
                opts_.sleep_fn(delay);
                delay = std::chrono::milliseconds(
                    static_cast<long long>(static_cast<double>(delay.count()) * opts_.backoff_factor));
            }
            httplib::Client client(base_);
            client.set_read_timeout(opts_.read_timeout);
            httplib::Headers headers;
            if (!opts_.api_key.empty())
                headers.emplace("Authorization", "Bearer " + opts_.api_key);
            auto res = client.Post(path_, headers, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;  // timeouts and connection failures are transient
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "http status " + std::to_string(res->status);
                continue;
            }
            if (res->status < 200 || res->status >= 300)
                throw backend_exhausted("non-retryable http status " +
                                        std::to_string(res->status) + ": " + res->body);
            return parse_completion_body(res->body);
        }
        throw backend_exhausted("gave up after " + std::to_string(opts_.max_attempts) +
                                " attempts; last error: " + last_error);
    }

    static std::string parse_completion_body(const std::string& body) {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded())
            throw backend_exhausted("malformed response body (not JSON)");
        try {
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw backend_exhausted(std::string("response missing choices[0].message.content: ") +
                                    e.what());
        }
    }

private:
    http_backend_options opts_;
    std::string base_;
    std::string path_;
};

}  // namespace newsagent
