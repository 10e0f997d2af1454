#pragma once

// Boilerplate-stripping HTML text extraction, anchor listing, and
// publication-date recovery. A deliberately small scanner, not a browser:
// tolerant of tag soup, strict about never leaking markup into output.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "newsagent/common.hpp"
#include "newsagent/url.hpp"

namespace newsagent {

struct malformed_html : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace html_detail {

inline bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

inline void append_utf8(std::string& out, unsigned long cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x110000) {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

// Decodes the common named entities plus numeric references.
inline std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out += s[i++];
            continue;
        }
        size_t semi = s.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += s[i++];
            continue;
        }
        std::string_view body = s.substr(i + 1, semi - i - 1);
        if (body.starts_with("#")) {
            unsigned long cp = 0;
            bool ok = body.size() > 1;
            if (body.size() > 2 && (body[1] == 'x' || body[1] == 'X')) {
                for (size_t k = 2; k < body.size() && ok; ++k) {
                    char c = body[k];
                    if (!std::isxdigit(static_cast<unsigned char>(c))) ok = false;
                    else cp = cp * 16 + (std::isdigit(static_cast<unsigned char>(c))
                                             ? c - '0'
                                             : std::tolower(c) - 'a' + 10);
                }
            } else {
                for (size_t k = 1; k < body.size() && ok; ++k) {
                    if (!std::isdigit(static_cast<unsigned char>(body[k]))) ok = false;
                    else cp = cp * 10 + (body[k] - '0');
                }
            }
            if (ok && cp > 0 && cp < 0x110000) {
                if (cp == 160) out += ' ';  // nbsp collapses like any space
                else append_utf8(out, cp);
                i = semi + 1;
                continue;
            }
            out += s[i++];
            continue;
        }
        struct named { std::string_view name; std::string_view repl; };
        static constexpr std::array<named, 10> table{{{"amp", "&"},
                                                      {"lt", "<"},
                                                      {"gt", ">"},
                                                      {"quot", "\""},
                                                      {"apos", "'"},
                                                      {"nbsp", " "},
                                                      {"ndash", "\xE2\x80\x93"},
                                                      {"mdash", "\xE2\x80\x94"},
                                                      {"rsquo", "\xE2\x80\x99"},
                                                      {"lsquo", "\xE2\x80\x98"}}};
        bool matched = false;
        for (const auto& e : table) {
            if (body == e.name) {
                out += e.repl;
                i = semi + 1;
                matched = true;
                break;
            }
        }
        if (!matched) out += s[i++];
    }
    return out;
}

}  // namespace html_detail

// ---------------------------------------------------------------------------
// event scanner

struct html_attribute {
    std::string name;   // lowercase
    std::string value;  // entity-decoded
};

struct html_event {
    enum class kind { text, tag };
    kind k = kind::text;
    std::string_view text;  // raw, entities not yet decoded
    std::string name;       // lowercase tag name
    bool closing = false;
    bool self_closing = false;
    std::vector<html_attribute> attrs;

    std::optional<std::string> attr(std::string_view name_lc) const {
        for (const auto& a : attrs)
            if (a.name == name_lc) return a.value;
        return std::nullopt;
    }
};

// Walks tags and text runs in document order. Comments, doctypes, CDATA and
// processing instructions are skipped; the contents of script/style elements
// are consumed without ever being surfaced as text.
class html_scanner {
public:
    explicit html_scanner(std::string_view html) : html_(html) {}

    std::optional<html_event> next() {
        // inside <script>/<style>: scan for the literal close tag
        if (!raw_element_.empty()) {
            std::string close = "</" + raw_element_;
            size_t p = pos_;
            while (p < html_.size()) {
                p = html_.find('<', p);
                if (p == std::string_view::npos) break;
                if (p + close.size() <= html_.size() &&
                    html_detail::iequals(html_.substr(p, close.size()), close)) {
                    size_t gt = html_.find('>', p);
                    html_event ev;
                    ev.k = html_event::kind::tag;
                    ev.name = raw_element_;
                    ev.closing = true;
                    raw_element_.clear();
                    pos_ = gt == std::string_view::npos ? html_.size() : gt + 1;
                    return ev;
                }
                ++p;
            }
            pos_ = html_.size();
            raw_element_.clear();
            return std::nullopt;
        }

        if (pos_ >= html_.size()) return std::nullopt;

        if (html_[pos_] != '<') {
            size_t lt = html_.find('<', pos_);
            html_event ev;
            ev.k = html_event::kind::text;
            ev.text = html_.substr(pos_, lt == std::string_view::npos ? std::string_view::npos
                                                                      : lt - pos_);
            pos_ = lt == std::string_view::npos ? html_.size() : lt;
            return ev;
        }

        // '<' at pos_
        if (starts_at(pos_, "<!--")) {
            size_t end = html_.find("-->", pos_ + 4);
            pos_ = end == std::string_view::npos ? html_.size() : end + 3;
            return next();
        }
        if (starts_at(pos_, "<![CDATA[")) {
            size_t end = html_.find("]]>", pos_ + 9);
            pos_ = end == std::string_view::npos ? html_.size() : end + 3;
            return next();
        }
        if (pos_ + 1 < html_.size() && (html_[pos_ + 1] == '!' || html_[pos_ + 1] == '?')) {
            size_t end = html_.find('>', pos_);
            pos_ = end == std::string_view::npos ? html_.size() : end + 1;
            return next();
        }

        size_t cursor = pos_ + 1;
        bool closing = false;
        if (cursor < html_.size() && html_[cursor] == '/') {
            closing = true;
            ++cursor;
        }
        if (cursor >= html_.size() || !std::isalpha(static_cast<unsigned char>(html_[cursor]))) {
            // literal '<' (never '<' + letter, so no markup survives in text)
            html_event ev;
            ev.k = html_event::kind::text;
            ev.text = html_.substr(pos_, 1);
            ++pos_;
            return ev;
        }

        html_event ev;
        ev.k = html_event::kind::tag;
        ev.closing = closing;
        size_t name_start = cursor;
        while (cursor < html_.size() &&
               (std::isalnum(static_cast<unsigned char>(html_[cursor])) || html_[cursor] == '-'))
            ++cursor;
        ev.name = to_lower(html_.substr(name_start, cursor - name_start));

        // attributes
        while (cursor < html_.size() && html_[cursor] != '>') {
            if (html_[cursor] == '/' && cursor + 1 < html_.size() && html_[cursor + 1] == '>') {
                ev.self_closing = true;
                cursor += 1;
                break;
            }
            if (html_[cursor] == '/' || std::isspace(static_cast<unsigned char>(html_[cursor]))) {
                ++cursor;
                continue;
            }
            size_t an_start = cursor;
            while (cursor < html_.size() && html_[cursor] != '=' && html_[cursor] != '>' &&
                   html_[cursor] != '/' &&
                   !std::isspace(static_cast<unsigned char>(html_[cursor])))
                ++cursor;
            std::string aname = to_lower(html_.substr(an_start, cursor - an_start));
            std::string avalue;
            while (cursor < html_.size() &&
                   std::isspace(static_cast<unsigned char>(html_[cursor])))
                ++cursor;
            if (cursor < html_.size() && html_[cursor] == '=') {
                ++cursor;
                while (cursor < html_.size() &&
                       std::isspace(static_cast<unsigned char>(html_[cursor])))
                    ++cursor;
                if (cursor < html_.size() && (html_[cursor] == '"' || html_[cursor] == '\'')) {
                    char quote = html_[cursor++];
                    size_t v_start = cursor;
                    size_t v_end = html_.find(quote, cursor);
                    if (v_end == std::string_view::npos) v_end = html_.size();
                    avalue = html_detail::decode_entities(html_.substr(v_start, v_end - v_start));
                    cursor = v_end < html_.size() ? v_end + 1 : v_end;
                } else {
                    size_t v_start = cursor;
                    while (cursor < html_.size() && html_[cursor] != '>' &&
                           !std::isspace(static_cast<unsigned char>(html_[cursor])))
                        ++cursor;
                    avalue = html_detail::decode_entities(html_.substr(v_start, cursor - v_start));
                }
            }
            if (!aname.empty()) ev.attrs.push_back({std::move(aname), std::move(avalue)});
        }
        pos_ = cursor < html_.size() ? cursor + 1 : html_.size();

        if (!ev.closing && !ev.self_closing && (ev.name == "script" || ev.name == "style"))
            raw_element_ = ev.name;
        return ev;
    }

private:
    bool starts_at(size_t pos, std::string_view lit) const {
        return html_.substr(pos, lit.size()) == lit;
    }

    std::string_view html_;
    size_t pos_ = 0;
    std::string raw_element_;
};

// ---------------------------------------------------------------------------
// text extraction

struct extracted_doc {
    std::string title;
    std::string text;
};

namespace html_detail {

inline bool is_block_element(std::string_view name) {
    static constexpr std::string_view blocks[] = {
        "p",       "div",     "section", "article", "header", "footer",  "nav",
        "aside",   "ul",      "ol",      "li",      "table",  "thead",   "tbody",
        "tr",      "td",      "th",      "h1",      "h2",     "h3",      "h4",
        "h5",      "h6",      "blockquote", "pre",  "hr",     "form",    "figure",
        "figcaption", "main", "dl",      "dt",      "dd",     "address", "body",
        "html",    "head",    "title"};
    for (auto b : blocks)
        if (name == b) return true;
    return false;
}

inline bool is_pruned_element(std::string_view name) {
    // script/style never surface text via the scanner; nav/footer subtrees are
    // boilerplate chrome and are dropped wholesale.
    return name == "script" || name == "style" || name == "nav" || name == "footer";
}

struct text_builder {
    std::string out;
    bool pending_space = false;
    int pending_breaks = 0;  // 0, 1 (line), 2 (paragraph)

    void add_text(std::string_view decoded) {
        for (char c : decoded) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!out.empty()) pending_space = true;
                continue;
            }
            if (pending_breaks > 0) {
                out.append(static_cast<size_t>(pending_breaks), '\n');
                pending_breaks = 0;
                pending_space = false;
            } else if (pending_space) {
                out += ' ';
                pending_space = false;
            }
            out += c;
        }
    }

    void block_break() {
        if (!out.empty()) pending_breaks = 2;
    }

    void line_break() {
        if (!out.empty() && pending_breaks < 1) pending_breaks = 1;
    }
};

inline extracted_doc extract_text_impl(std::string_view raw_html) {
    html_scanner scanner(raw_html);
    text_builder body;
    std::string title;
    std::string first_h1;
    bool in_title = false, title_done = false;
    bool in_h1 = false, h1_done = false;
    int prune_depth = 0;

    while (auto ev = scanner.next()) {
        if (ev->k == html_event::kind::text) {
            if (prune_depth > 0) continue;
            std::string decoded = decode_entities(ev->text);
            if (in_title) {
                title += decoded;
            } else {
                if (in_h1) first_h1 += decoded;
                body.add_text(decoded);
            }
            continue;
        }
        // tag
        const std::string& name = ev->name;
        if (is_pruned_element(name) && name != "script" && name != "style") {
            if (ev->self_closing) continue;
            if (!ev->closing) ++prune_depth;
            else if (prune_depth > 0) --prune_depth;
            continue;
        }
        if (name == "script" || name == "style") continue;
        if (prune_depth > 0) continue;

        if (name == "title") {
            if (!ev->closing && !title_done) in_title = true;
            if (ev->closing && in_title) {
                in_title = false;
                title_done = true;
            }
            continue;
        }
        if (name == "h1") {
            if (!ev->closing && !h1_done) in_h1 = true;
            if (ev->closing && in_h1) {
                in_h1 = false;
                h1_done = true;
            }
        }
        if (name == "br") {
            body.line_break();
            continue;
        }
        if (is_block_element(name)) body.block_break();
    }

    extracted_doc doc;
    doc.title = trim(title);
    if (doc.title.empty()) doc.title = trim(first_h1);
    // collapse any soft whitespace inside the title
    std::string t;
    bool ws = false;
    for (char c : doc.title) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            ws = true;
            continue;
        }
        if (ws && !t.empty()) t += ' ';
        ws = false;
        t += c;
    }
    doc.title = t;
    doc.text = body.out;
    return doc;
}

}  // namespace html_detail

// Strips markup: script/style/nav/footer subtrees removed, block elements
// become paragraph breaks, whitespace collapsed, entities decoded. Title
// comes from the title element, else the first h1.
inline extracted_doc extract_text(std::string_view raw_html) {
    extracted_doc doc = html_detail::extract_text_impl(raw_html);
    if (doc.text.size() < 20)
        throw empty_document("extracted text too short (" + std::to_string(doc.text.size()) +
                             " chars)");
    return doc;
}

// ---------------------------------------------------------------------------
// anchors

struct anchor_scan {
    std::vector<std::string> hrefs;  // document order, raw attribute values
    int anchors_seen = 0;
};

inline anchor_scan list_anchors(std::string_view raw_html) {
    anchor_scan result;
    html_scanner scanner(raw_html);
    while (auto ev = scanner.next()) {
        if (ev->k != html_event::kind::tag || ev->closing || ev->name != "a") continue;
        ++result.anchors_seen;
        if (auto href = ev->attr("href"); href && !trim(*href).empty())
            result.hrefs.push_back(trim(*href));
    }
    return result;
}

// ---------------------------------------------------------------------------
// publication dates

namespace html_detail {

// YYYY-MM-DD or YYYY/MM/DD at position `pos`, digit-bounded, calendar-valid.
inline std::optional<civil_date> scan_ymd(std::string_view s, size_t pos) {
    if (pos + 10 > s.size()) return std::nullopt;
    if (pos > 0 && std::isdigit(static_cast<unsigned char>(s[pos - 1]))) return std::nullopt;
    auto digit = [&](size_t i) { return std::isdigit(static_cast<unsigned char>(s[pos + i])); };
    for (size_t i : {0u, 1u, 2u, 3u}) if (!digit(i)) return std::nullopt;
    char sep = s[pos + 4];
    if ((sep != '-' && sep != '/') || s[pos + 7] != sep) return std::nullopt;
    for (size_t i : {5u, 6u, 8u, 9u}) if (!digit(i)) return std::nullopt;
    if (pos + 10 < s.size() && std::isdigit(static_cast<unsigned char>(s[pos + 10])))
        return std::nullopt;
    int y = (s[pos] - '0') * 1000 + (s[pos + 1] - '0') * 100 + (s[pos + 2] - '0') * 10 +
            (s[pos + 3] - '0');
    int m = (s[pos + 5] - '0') * 10 + (s[pos + 6] - '0');
    int d = (s[pos + 8] - '0') * 10 + (s[pos + 9] - '0');
    if (!valid_date(y, m, d)) return std::nullopt;
    return civil_date{y, m, d};
}

inline int month_from_name(std::string_view word) {
    static constexpr std::string_view names[] = {"january", "february", "march",     "april",
                                                 "may",     "june",     "july",      "august",
                                                 "september", "october", "november", "december"};
    std::string w = to_lower(word);
    if (w == "sept") return 9;
    for (int i = 0; i < 12; ++i) {
        if (w == names[i]) return i + 1;
        if (w.size() == 3 && names[i].substr(0, 3) == w) return i + 1;
    }
    return 0;
}

// "Month D, YYYY" starting at a word boundary.
inline std::optional<civil_date> scan_month_name_date(std::string_view s, size_t pos) {
    if (pos > 0 && std::isalpha(static_cast<unsigned char>(s[pos - 1]))) return std::nullopt;
    size_t i = pos;
    while (i < s.size() && std::isalpha(static_cast<unsigned char>(s[i]))) ++i;
    int month = month_from_name(s.substr(pos, i - pos));
    if (month == 0) return std::nullopt;
    if (i < s.size() && s[i] == '.') ++i;
    size_t sp = i;
    while (i < s.size() && s[i] == ' ') ++i;
    if (i == sp) return std::nullopt;
    int day = 0, digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && digits < 2) {
        day = day * 10 + (s[i] - '0');
        ++i;
        ++digits;
    }
    if (digits == 0) return std::nullopt;
    if (i >= s.size() || s[i] != ',') return std::nullopt;
    ++i;
    while (i < s.size() && s[i] == ' ') ++i;
    int year = 0;
    digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])) && digits < 4) {
        year = year * 10 + (s[i] - '0');
        ++i;
        ++digits;
    }
    if (digits != 4) return std::nullopt;
    if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    if (!valid_date(year, month, day)) return std::nullopt;
    return civil_date{year, month, day};
}

inline std::optional<civil_date> first_date_in(std::string_view s) {
    for (size_t pos = 0; pos < s.size(); ++pos) {
        if (std::isdigit(static_cast<unsigned char>(s[pos]))) {
            if (auto d = scan_ymd(s, pos)) return d;
        } else if (std::isalpha(static_cast<unsigned char>(s[pos]))) {
            if (auto d = scan_month_name_date(s, pos)) return d;
            while (pos + 1 < s.size() && std::isalpha(static_cast<unsigned char>(s[pos + 1])))
                ++pos;  // skip the rest of the word
        }
    }
    return std::nullopt;
}

}  // namespace html_detail

// Cascade, most to least authoritative; the first hit wins.
//   1. <meta property|name="article:published_time" content="...">
//   2. <time datetime="...">
//   3. a YYYY/MM/DD or YYYY-MM-DD pattern in the URL path
//   4. first ISO-like or "Month D, YYYY" string in the first 2000 chars of text
inline std::optional<civil_date> extract_pub_date(std::string_view raw_html,
                                                  std::string_view url) {
    std::optional<std::string> meta_content;
    std::optional<std::string> time_datetime;
    {
        html_scanner scanner(raw_html);
        while (auto ev = scanner.next()) {
            if (ev->k != html_event::kind::tag || ev->closing) continue;
            if (ev->name == "meta" && !meta_content) {
                auto prop = ev->attr("property");
                auto nm = ev->attr("name");
                if ((prop && *prop == "article:published_time") ||
                    (nm && *nm == "article:published_time"))
                    meta_content = ev->attr("content").value_or("");
            } else if (ev->name == "time" && !time_datetime) {
                if (auto dt = ev->attr("datetime")) time_datetime = *dt;
            }
        }
    }
    if (meta_content)
        if (auto d = html_detail::scan_ymd(trim(*meta_content), 0)) return d;
    if (time_datetime)
        if (auto d = html_detail::scan_ymd(trim(*time_datetime), 0)) return d;

    if (auto parts = parse_url(url)) {
        const std::string& path = parts->path;
        for (size_t pos = 0; pos < path.size(); ++pos)
            if (auto d = html_detail::scan_ymd(path, pos)) return d;
    }

    extracted_doc doc = html_detail::extract_text_impl(raw_html);
    std::string_view head(doc.text);
    if (head.size() > 2000) head = head.substr(0, 2000);
    return html_detail::first_date_in(head);
}

}  // namespace newsagent
