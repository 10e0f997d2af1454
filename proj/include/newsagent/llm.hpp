#pragma once

// Completion interface with a deterministic replay backend. The HTTP backend
// lives in llm_http.hpp so that offline code never pulls in a socket library.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsagent/common.hpp"

namespace newsagent {

struct backend_exhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct replay_miss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct invalid_request : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct chat_message {
    std::string role;  // system | user | assistant
    std::string content;
};

struct completion_request {
    std::string model;
    std::vector<chat_message> messages;
    double temperature = 0.0;
    std::optional<int> max_tokens;
};

// Deterministic upper-bound token estimate: ceil(bytes / bytes_per_token).
// Divides bytes rather than running a tokenizer; 3 bytes/token is conservative
// for English prose.
inline int estimate_tokens(std::string_view text, int bytes_per_token = 3) {
    if (bytes_per_token <= 0) throw std::invalid_argument("bytes_per_token must be positive");
    return static_cast<int>((text.size() + bytes_per_token - 1) / bytes_per_token);
}

inline int estimate_tokens(const completion_request& req, int bytes_per_token = 3) {
    size_t bytes = 0;
    for (const auto& m : req.messages) bytes += m.role.size() + m.content.size();
    return static_cast<int>((bytes + bytes_per_token - 1) / bytes_per_token);
}

// Rejects structurally invalid requests before any backend work happens.
inline void validate_request(const completion_request& req) {
    if (req.messages.empty()) throw invalid_request("request has no messages");
    const std::string& first = req.messages.front().role;
    if (first != "system" && first != "user")
        throw invalid_request("first message role must be system or user, got '" + first + "'");
    for (const auto& m : req.messages) {
        if (m.role != "system" && m.role != "user" && m.role != "assistant")
            throw invalid_request("unknown message role '" + m.role + "'");
        if (m.content.empty() && m.role != "assistant")
            throw invalid_request("empty content on non-assistant message");
    }
    if (req.temperature < 0.0 || req.temperature > 2.0)
        throw invalid_request("temperature out of [0,2]");
    if (req.max_tokens && *req.max_tokens <= 0)
        throw invalid_request("max_tokens must be positive");
}

// Digest of the full message list. Any prompt drift changes the digest, so a
// keyed replay script misses loudly instead of matching a stale entry.
inline std::string request_digest(const std::vector<chat_message>& messages) {
    std::uint64_t h = fnv1a64("");
    for (const auto& m : messages) {
        h = fnv1a64(m.role, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(m.content, h);
        h = fnv1a64("\x1e", h);
    }
    return to_hex64(h);
}

class completion_backend {
public:
    virtual ~completion_backend() = default;
    // Returns the assistant message content for the request.
    virtual std::string complete(const completion_request& req) = 0;
};

// Single-prompt convenience shape used by the agent loop and the summarizer;
// the pipeline binds it to a backend plus a model id.
using completion_fn = std::function<std::string(const std::string& prompt)>;

// ---------------------------------------------------------------------------
// replay backend

struct replay_entry {
    std::string key;  // request digest; empty in strict mode means "no check"
    std::string completion;
};

enum class replay_mode { strict_sequence, keyed };

// Serves pre-recorded completions. Holds no transport at all, so replaying is
// network-free by construction. strict_sequence consumes entries in order
// exactly once; keyed serves whichever entry matches the request digest.
class replay_backend : public completion_backend {
public:
    replay_backend(std::vector<replay_entry> entries, replay_mode mode)
        : entries_(std::move(entries)), mode_(mode) {
        if (mode_ == replay_mode::keyed) {
            for (const auto& e : entries_)
                keyed_.emplace(e.key, e.completion);  // first entry per key wins
        }
    }

    std::string complete(const completion_request& req) override {
        validate_request(req);
        std::lock_guard<std::mutex> lock(mu_);
        if (mode_ == replay_mode::strict_sequence) {
            if (next_ >= entries_.size())
                throw replay_miss("replay script exhausted after " +
                                  std::to_string(entries_.size()) + " completions");
            const replay_entry& e = entries_[next_];
            if (!e.key.empty() && e.key != request_digest(req.messages))
                throw replay_miss("replay entry " + std::to_string(next_) +
                                  " key mismatch: expected " + e.key + ", request digest " +
                                  request_digest(req.messages));
            ++next_;
            return e.completion;
        }
        auto it = keyed_.find(request_digest(req.messages));
        if (it == keyed_.end())
            throw replay_miss("no replay entry for request digest " +
                              request_digest(req.messages));
        return it->second;
    }

    size_t remaining() const {
        std::lock_guard<std::mutex> lock(mu_);
        return entries_.size() - next_;
    }

private:
    std::vector<replay_entry> entries_;
    replay_mode mode_;
    std::unordered_map<std::string, std::string> keyed_;
    size_t next_ = 0;
    mutable std::mutex mu_;
};

inline std::vector<replay_entry> load_replay_entries(const std::filesystem::path& path) {
    std::vector<replay_entry> entries;
    for (const auto& line : read_lines(path)) {
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        entries.push_back({j.value("key", ""), j.at("completion").get<std::string>()});
    }
    return entries;
}

inline void write_replay_script(const std::filesystem::path& path,
                                const std::vector<replay_entry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        nlohmann::json j{{"key", e.key}, {"completion", e.completion}};
        out += j.dump();
        out += '\n';
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// call recording

struct llm_call_record {
    int index = 0;
    std::string model;
    int prompt_tokens = 0;  // estimate_tokens over the request
    int token_limit = 0;    // context budget minus response reserve
};

// Wraps a backend and records one entry per call; the pipeline persists the
// log so the token-budget law is auditable after a run.
class recording_backend : public completion_backend {
public:
    recording_backend(std::shared_ptr<completion_backend> inner, int token_limit)
        : inner_(std::move(inner)), token_limit_(token_limit) {}

    std::string complete(const completion_request& req) override {
        {
            std::lock_guard<std::mutex> lock(mu_);
            records_.push_back({static_cast<int>(records_.size()), req.model,
                                estimate_tokens(req), token_limit_});
        }
        return inner_->complete(req);
    }

    std::vector<llm_call_record> records() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_;
    }

    int call_count() const {
        std::lock_guard<std::mutex> lock(mu_);
        return static_cast<int>(records_.size());
    }

    void write_log(const std::filesystem::path& path) const {
        std::string out;
        for (const auto& r : records()) {
            nlohmann::json j{{"index", r.index},
                             {"model", r.model},
                             {"prompt_tokens", r.prompt_tokens},
                             {"token_limit", r.token_limit}};
            out += j.dump();
            out += '\n';
        }
        write_file(path, out);
    }

private:
    std::shared_ptr<completion_backend> inner_;
    int token_limit_;
    std::vector<llm_call_record> records_;
    mutable std::mutex mu_;
};

}  // namespace newsagent
