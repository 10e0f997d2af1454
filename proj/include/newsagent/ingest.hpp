#pragma once

// The "search and save news" stage: crawl configured index pages (or take an
// injected URL list), fetch articles politely, strip them to plain text,
// pull publication dates, and persist everything append-only.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsagent/common.hpp"
#include "newsagent/html.hpp"
#include "newsagent/url.hpp"

namespace newsagent {

struct news_source {
    std::string id;
    std::string display_name;
    std::vector<std::string> index_urls;
    std::vector<std::string> host_allowlist;  // lowercase hostnames
    double rate_limit_seconds = 0.0;          // min spacing between requests per host
};

inline bool host_allowed(const news_source& source, std::string_view host) {
    std::string h = to_lower(host);
    for (const auto& allowed : source.host_allowlist)
        if (to_lower(allowed) == h) return true;
    return false;
}

inline void validate_source(const news_source& source) {
    if (source.id.empty()) throw std::invalid_argument("source id empty");
    if (source.rate_limit_seconds < 0)
        throw std::invalid_argument("rate_limit must be >= 0 for source " + source.id);
    for (const auto& u : source.index_urls) {
        auto parts = parse_url(u);
        if (!parts) throw std::invalid_argument("bad index url '" + u + "' in " + source.id);
        if (!host_allowed(source, parts->host))
            throw std::invalid_argument("index url host not in allowlist: " + u);
    }
}

struct article {
    std::string url;  // canonical
    std::string source_id;
    std::string title;
    std::string raw_html;
    std::string text;
    std::optional<civil_date> published_at;
    std::int64_t fetched_at = 0;  // unix seconds
};

inline nlohmann::json article_to_json(const article& a) {
    nlohmann::json j{{"url", a.url},       {"source_id", a.source_id},
                     {"title", a.title},   {"raw_html", a.raw_html},
                     {"text", a.text},     {"fetched_at", a.fetched_at}};
    if (a.published_at) j["published_at"] = format_date(*a.published_at);
    return j;
}

inline article article_from_json(const nlohmann::json& j) {
    article a;
    a.url = j.at("url").get<std::string>();
    a.source_id = j.at("source_id").get<std::string>();
    a.title = j.at("title").get<std::string>();
    a.raw_html = j.at("raw_html").get<std::string>();
    a.text = j.at("text").get<std::string>();
    a.fetched_at = j.at("fetched_at").get<std::int64_t>();
    if (j.contains("published_at")) a.published_at = parse_date(j["published_at"].get<std::string>());
    return a;
}

enum class fetch_status { ok, http_error, parse_error, duplicate, off_host };

inline std::string to_string(fetch_status s) {
    switch (s) {
        case fetch_status::ok: return "ok";
        case fetch_status::http_error: return "http_error";
        case fetch_status::parse_error: return "parse_error";
        case fetch_status::duplicate: return "duplicate";
        case fetch_status::off_host: return "off_host";
    }
    return "?";
}

struct fetch_record {
    std::string url;
    fetch_status status = fetch_status::ok;
    std::string detail;
};

// ---------------------------------------------------------------------------
// article store: append-only JSONL plus a url -> byte-offset index sidecar.
// The JSONL is authoritative; the index is rebuilt whenever it disagrees.

class article_store {
public:
    explicit article_store(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        load();
    }

    bool contains(const std::string& url) const { return by_url_.count(url) > 0; }

    const article* find(const std::string& url) const {
        auto it = by_url_.find(url);
        return it == by_url_.end() ? nullptr : &articles_[it->second];
    }

    size_t size() const { return articles_.size(); }

    // insertion order
    const std::vector<article>& all() const { return articles_; }

    void put(const article& a) {
        if (contains(a.url)) throw io_error("article already stored: " + a.url);
        std::string line = article_to_json(a).dump();
        line += '\n';
        std::uint64_t offset = std::filesystem::exists(records_path())
                                   ? static_cast<std::uint64_t>(
                                         std::filesystem::file_size(records_path()))
                                   : 0;
        std::ofstream out(records_path(), std::ios::binary | std::ios::app);
        if (!out) throw io_error("cannot append to " + records_path().string());
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        out.flush();
        if (!out) throw io_error("short append to " + records_path().string());

        std::ofstream idx(index_path(), std::ios::binary | std::ios::app);
        idx << a.url << '\t' << offset << '\n';

        by_url_.emplace(a.url, articles_.size());
        articles_.push_back(a);
    }

    std::filesystem::path records_path() const { return dir_ / "articles.jsonl"; }
    std::filesystem::path index_path() const { return dir_ / "articles.idx"; }

private:
    void load() {
        articles_.clear();
        by_url_.clear();
        if (!std::filesystem::exists(records_path())) return;
        std::ifstream in(records_path(), std::ios::binary);
        std::string line;
        std::string index_content;
        std::uint64_t offset = 0;
        while (std::getline(in, line)) {
            std::uint64_t line_start = offset;
            offset += line.size() + 1;
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) continue;  // torn write at the tail
            article a = article_from_json(j);
            if (by_url_.count(a.url)) continue;
            index_content += a.url + '\t' + std::to_string(line_start) + '\n';
            by_url_.emplace(a.url, articles_.size());
            articles_.push_back(std::move(a));
        }
        // keep the sidecar in sync with what we actually loaded
        std::ofstream idx(index_path(), std::ios::binary | std::ios::trunc);
        idx << index_content;
    }

    std::filesystem::path dir_;
    std::vector<article> articles_;
    std::unordered_map<std::string, size_t> by_url_;
};

// ---------------------------------------------------------------------------
// transports and fetch options

struct fetch_response {
    int status = 0;
    std::string body;
    std::string error;  // non-empty means the transport itself failed
};

using fetch_transport = std::function<fetch_response(const std::string& url)>;

// Serves https://host/path from <root>/host/path; "/" maps to index.html.
// Used for offline fixture runs in place of a socket transport.
inline fetch_transport make_file_transport(std::filesystem::path root) {
    return [root](const std::string& url) -> fetch_response {
        auto parts = parse_url(url);
        if (!parts) return {0, "", "unparseable url: " + url};
        std::string path = parts->path;
        if (path.empty() || path.back() == '/') path += "index.html";
        std::filesystem::path file = root / to_lower(parts->host) / path.substr(1);
        if (!std::filesystem::exists(file)) return {404, "", ""};
        return {200, read_file(file), ""};
    };
}

struct fetch_options {
    fetch_transport transport;            // required
    std::function<std::int64_t()> now_ms; // monotonic-enough clock, for rate limiting
    std::function<void(std::int64_t)> sleep_ms;
    std::function<std::int64_t()> now_unix;  // wall clock for fetched_at

    static fetch_options defaults(fetch_transport transport) {
        fetch_options o;
        o.transport = std::move(transport);
        o.now_ms = [] {
            return static_cast<std::int64_t>(
                std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now().time_since_epoch())
                    .count());
        };
        o.sleep_ms = [](std::int64_t ms) {
            std::this_thread::sleep_for(std::chrono::milliseconds(ms));
        };
        o.now_unix = [] { return static_cast<std::int64_t>(std::time(nullptr)); };
        return o;
    }
};

// ---------------------------------------------------------------------------
// operations

// Absolute, deduplicated, allowlist-filtered anchor targets from an index
// page, document order preserved. Relative hrefs resolve against base_url.
inline std::vector<std::string> discover_urls(const news_source& source,
                                              std::string_view index_html,
                                              const std::string& base_url) {
    auto base = parse_url(base_url);
    if (!base) throw std::invalid_argument("bad base url: " + base_url);

    anchor_scan anchors = list_anchors(index_html);
    std::vector<std::string> out;
    std::unordered_map<std::string, bool> seen;
    for (const auto& href : anchors.hrefs) {
        if (href.starts_with("mailto:") || href.starts_with("javascript:") ||
            href.starts_with("#"))
            continue;
        auto resolved = resolve_url(*base, href);
        if (!resolved) continue;
        auto canonical = canonicalize_url(*resolved);
        if (!canonical) continue;
        auto parts = parse_url(*canonical);
        if (!parts || (parts->scheme != "http" && parts->scheme != "https")) continue;
        if (!host_allowed(source, parts->host)) continue;
        if (seen.emplace(*canonical, true).second) out.push_back(*canonical);
    }
    if (out.empty() && anchors.anchors_seen > 0 && anchors.hrefs.empty())
        throw malformed_html("page has anchor tags but none with a parseable href");
    return out;
}

// Fetches each URL in order, honoring per-host spacing, skipping stored
// duplicates without network activity, and recording one outcome per URL.
// Individual failures never abort the batch.
inline std::vector<fetch_record> fetch_and_store(const news_source& source,
                                                 const std::vector<std::string>& urls,
                                                 article_store& store,
                                                 const fetch_options& options) {
    if (!options.transport) throw std::invalid_argument("fetch transport not set");
    std::vector<fetch_record> records;
    std::map<std::string, std::int64_t> last_request_ms;
    const auto rate_ms = static_cast<std::int64_t>(source.rate_limit_seconds * 1000.0);

    for (const auto& raw_url : urls) {
        auto canonical = canonicalize_url(raw_url);
        if (!canonical) {
            records.push_back({raw_url, fetch_status::http_error, "unparseable url"});
            continue;
        }
        const std::string& url = *canonical;
        if (store.contains(url)) {
            records.push_back({url, fetch_status::duplicate, "already stored"});
            continue;
        }
        std::string host = host_of(url);
        if (!host_allowed(source, host)) {
            records.push_back({url, fetch_status::off_host, "host not in allowlist: " + host});
            continue;
        }

        if (rate_ms > 0) {
            auto it = last_request_ms.find(host);
            if (it != last_request_ms.end()) {
                std::int64_t wait = it->second + rate_ms - options.now_ms();
                if (wait > 0) options.sleep_ms(wait);
            }
            last_request_ms[host] = options.now_ms();
        }

        fetch_response resp = options.transport(url);
        if (!resp.error.empty()) {
            records.push_back({url, fetch_status::http_error, resp.error});
            continue;
        }
        if (resp.status < 200 || resp.status >= 300) {
            records.push_back({url, fetch_status::http_error, std::to_string(resp.status)});
            continue;
        }

        article a;
        a.url = url;
        a.source_id = source.id;
        a.raw_html = std::move(resp.body);
        a.fetched_at = options.now_unix();
        try {
            extracted_doc doc = extract_text(a.raw_html);
            a.title = doc.title;
            a.text = doc.text;
        } catch (const empty_document& e) {
            records.push_back({url, fetch_status::parse_error, e.what()});
            continue;
        }
        a.published_at = extract_pub_date(a.raw_html, url);
        if (a.published_at) {
            // published_at <= fetched_at must hold; a future-dated page is
            // treated as undated.
            std::tm tm{};
            std::time_t t = static_cast<std::time_t>(a.fetched_at);
            gmtime_r(&t, &tm);
            civil_date today{tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday};
            if (*a.published_at > today) a.published_at.reset();
        }
        store.put(a);
        records.push_back({url, fetch_status::ok, ""});
    }
    return records;
}

}  // namespace newsagent
