#pragma once

// Small URL parser, reference resolution, and crawl canonicalization.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "newsagent/common.hpp"

namespace newsagent {

struct url_parts {
    std::string scheme;
    std::string host;
    int port = -1;  // -1 means none given
    std::string path;  // always begins with '/' when host is present
    std::string query;     // without '?'
    std::string fragment;  // without '#'

    std::string authority() const {
        if (port < 0) return host;
        return host + ":" + std::to_string(port);
    }

    std::string str() const {
        std::string out = scheme + "://" + authority() + path;
        if (!query.empty()) out += "?" + query;
        if (!fragment.empty()) out += "#" + fragment;
        return out;
    }
};

inline std::optional<url_parts> parse_url(std::string_view s) {
    url_parts u;
    size_t scheme_end = s.find("://");
    if (scheme_end == std::string_view::npos || scheme_end == 0) return std::nullopt;
    u.scheme = std::string(s.substr(0, scheme_end));
    for (char c : u.scheme)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.')
            return std::nullopt;
    s.remove_prefix(scheme_end + 3);

    size_t auth_end = s.find_first_of("/?#");
    std::string_view authority = s.substr(0, auth_end);
    if (authority.empty()) return std::nullopt;
    size_t colon = authority.rfind(':');
    if (colon != std::string_view::npos &&
        authority.find_first_not_of("0123456789", colon + 1) == std::string_view::npos &&
        colon + 1 < authority.size()) {
        u.host = std::string(authority.substr(0, colon));
        u.port = std::stoi(std::string(authority.substr(colon + 1)));
    } else {
        u.host = std::string(authority);
    }
    if (u.host.empty()) return std::nullopt;
    if (auth_end == std::string_view::npos) {
        u.path = "/";
        return u;
    }
    s.remove_prefix(auth_end);

    size_t frag = s.find('#');
    if (frag != std::string_view::npos) {
        u.fragment = std::string(s.substr(frag + 1));
        s = s.substr(0, frag);
    }
    size_t q = s.find('?');
    if (q != std::string_view::npos) {
        u.query = std::string(s.substr(q + 1));
        s = s.substr(0, q);
    }
    u.path = s.empty() ? "/" : std::string(s);
    if (u.path[0] != '/') return std::nullopt;
    return u;
}

// Collapses "." and ".." segments; keeps a trailing slash.
inline std::string normalize_path(std::string_view path) {
    std::vector<std::string> out;
    bool trailing_slash = path.size() > 1 && path.back() == '/';
    for (auto& seg : split(path, '/')) {
        if (seg.empty() || seg == ".") continue;
        if (seg == "..") {
            if (!out.empty()) out.pop_back();
            continue;
        }
        out.push_back(seg);
    }
    std::string joined = "/" + join(out, "/");
    if (trailing_slash && joined.size() > 1) joined += "/";
    return joined;
}

// Resolves `ref` against an absolute base. Handles absolute refs,
// scheme-relative (//host/...), root-relative (/...), and relative paths.
inline std::optional<std::string> resolve_url(const url_parts& base, std::string_view ref) {
    if (ref.empty()) return base.str();
    if (ref.find("://") != std::string_view::npos) {
        auto u = parse_url(ref);
        if (!u) return std::nullopt;
        u->path = normalize_path(u->path);
        return u->str();
    }
    url_parts u = base;
    u.fragment.clear();
    if (ref.starts_with("//")) {
        auto abs = parse_url(std::string(base.scheme) + ":" + std::string(ref));
        if (!abs) return std::nullopt;
        abs->path = normalize_path(abs->path);
        return abs->str();
    }
    size_t frag = ref.find('#');
    std::string_view ref_frag;
    if (frag != std::string_view::npos) {
        ref_frag = ref.substr(frag + 1);
        ref = ref.substr(0, frag);
    }
    size_t q = ref.find('?');
    std::string_view ref_query;
    if (q != std::string_view::npos) {
        ref_query = ref.substr(q + 1);
        ref = ref.substr(0, q);
    }
    u.fragment = std::string(ref_frag);
    if (ref.empty()) {
        u.query = ref_query.empty() ? u.query : std::string(ref_query);
        return u.str();
    }
    u.query = std::string(ref_query);
    if (ref[0] == '/') {
        u.path = normalize_path(ref);
    } else {
        std::string_view dir = u.path;
        size_t last = dir.rfind('/');
        dir = dir.substr(0, last == std::string_view::npos ? 0 : last + 1);
        u.path = normalize_path(std::string(dir) + std::string(ref));
    }
    return u.str();
}

// Crawl identity: lowercase scheme+host, default ports dropped, fragment
// dropped, utm_* tracking parameters dropped; other query parameters kept in
// their original order.
inline std::optional<std::string> canonicalize_url(std::string_view raw) {
    auto u = parse_url(raw);
    if (!u) return std::nullopt;
    u->scheme = to_lower(u->scheme);
    u->host = to_lower(u->host);
    if ((u->scheme == "http" && u->port == 80) || (u->scheme == "https" && u->port == 443))
        u->port = -1;
    u->fragment.clear();
    u->path = normalize_path(u->path);
    if (!u->query.empty()) {
        std::vector<std::string> kept;
        for (auto& param : split(u->query, '&')) {
            if (param.empty()) continue;
            std::string key = to_lower(param.substr(0, param.find('=')));
            if (key.rfind("utm_", 0) == 0) continue;
            kept.push_back(param);
        }
        u->query = join(kept, "&");
    }
    return u->str();
}

inline std::string host_of(std::string_view url) {
    auto u = parse_url(url);
    return u ? to_lower(u->host) : std::string();
}

}  // namespace newsagent
