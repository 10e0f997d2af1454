#pragma once

// Toponym recognition over capitalized token sequences plus gazetteer-backed
// resolution (highest population wins, deterministic tie-break).

#include <charconv>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "newsagent/common.hpp"
#include "newsagent/ingest.hpp"

namespace newsagent {

struct malformed_gazetteer : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct unresolvable_toponym : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct gazetteer_entry {
    std::string name;
    std::vector<std::string> alternate_names;
    double latitude = 0.0;
    double longitude = 0.0;
    long long population = 0;
    std::string country_code;  // 2-letter
};

class gazetteer {
public:
    void add(gazetteer_entry entry) {
        size_t idx = entries_.size();
        index_name(entry.name, idx);
        for (const auto& alt : entry.alternate_names) index_name(alt, idx);
        entries_.push_back(std::move(entry));
    }

    size_t size() const { return entries_.size(); }
    const gazetteer_entry& entry(size_t i) const { return entries_[i]; }

    // Entry indices matching a surface key: exact-case first, then folded.
    std::vector<size_t> match(const std::string& key) const {
        auto it = exact_.find(key);
        if (it != exact_.end()) return it->second;
        auto fit = folded_.find(to_lower(key));
        if (fit != folded_.end()) return fit->second;
        return {};
    }

    bool has(const std::string& key) const { return !match(key).empty(); }

private:
    void index_name(const std::string& name, size_t idx) {
        if (name.empty()) return;
        auto& exact_bucket = exact_[name];
        if (exact_bucket.empty() || exact_bucket.back() != idx) exact_bucket.push_back(idx);
        auto& folded_bucket = folded_[to_lower(name)];
        if (folded_bucket.empty() || folded_bucket.back() != idx) folded_bucket.push_back(idx);
    }

    std::vector<gazetteer_entry> entries_;
    std::unordered_map<std::string, std::vector<size_t>> exact_;
    std::unordered_map<std::string, std::vector<size_t>> folded_;
};

namespace geo_detail {

inline double parse_double(std::string_view s, int line_no, const char* what) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw malformed_gazetteer("line " + std::to_string(line_no) + ": bad " + what + " '" +
                                  std::string(s) + "'");
    return v;
}

inline long long parse_count(std::string_view s, int line_no, const char* what) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
        throw malformed_gazetteer("line " + std::to_string(line_no) + ": bad " + what + " '" +
                                  std::string(s) + "'");
    return v;
}

}  // namespace geo_detail

// Tab-separated with header: name, alternates (comma-joined), lat, lon,
// population, country. Duplicate names are allowed (that is the ambiguity
// resolution exists for).
inline gazetteer load_gazetteer(const std::filesystem::path& path) {
    std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw malformed_gazetteer("gazetteer file is empty: " + path.string());
    gazetteer gaz;
    for (size_t i = 1; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        const int line_no = static_cast<int>(i + 1);
        if (trim(line).empty() || line[0] == '#') continue;
        std::vector<std::string> cols = split(line, '\t');
        if (cols.size() != 6)
            throw malformed_gazetteer("line " + std::to_string(line_no) + ": expected 6 columns, got " +
                                      std::to_string(cols.size()));
        gazetteer_entry e;
        e.name = trim(cols[0]);
        if (e.name.empty())
            throw malformed_gazetteer("line " + std::to_string(line_no) + ": empty name");
        e.alternate_names = split_list(cols[1], ',');
        e.latitude = geo_detail::parse_double(trim(cols[2]), line_no, "latitude");
        e.longitude = geo_detail::parse_double(trim(cols[3]), line_no, "longitude");
        if (e.latitude < -90.0 || e.latitude > 90.0)
            throw malformed_gazetteer("line " + std::to_string(line_no) + ": latitude out of range");
        if (e.longitude < -180.0 || e.longitude > 180.0)
            throw malformed_gazetteer("line " + std::to_string(line_no) + ": longitude out of range");
        e.population = geo_detail::parse_count(trim(cols[4]), line_no, "population");
        e.country_code = trim(cols[5]);
        if (e.country_code.size() != 2)
            throw malformed_gazetteer("line " + std::to_string(line_no) + ": country code must be 2 letters");
        gaz.add(std::move(e));
    }
    return gaz;
}

// One folded word per line; '#' comments. Guards against sentence-initial
// false positives like "May" or "Nice".
inline std::set<std::string> load_stoplist(const std::filesystem::path& path) {
    std::set<std::string> words;
    for (const auto& line : read_lines(path)) {
        std::string w = trim(line);
        if (w.empty() || w[0] == '#') continue;
        words.insert(to_lower(w));
    }
    return words;
}

struct toponym_candidate {
    std::string surface;    // exact text span
    size_t offset = 0;      // char offset of the span
    std::string match_key;  // tokens joined with single spaces
};

struct place_mention {
    std::string surface;
    std::string article_url;
    double latitude = 0.0;
    double longitude = 0.0;
    std::string resolved_name;
    size_t char_offset = 0;
};

namespace geo_detail {

struct token {
    size_t begin = 0, end = 0;
    std::string_view text;
    bool capitalized = false;
};

inline std::vector<token> tokenize(std::string_view text) {
    std::vector<token> tokens;
    size_t i = 0;
    while (i < text.size()) {
        if (!std::isalpha(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        size_t begin = i;
        while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
        token t;
        t.begin = begin;
        t.end = i;
        t.text = text.substr(begin, i - begin);
        t.capitalized = std::isupper(static_cast<unsigned char>(t.text[0])) != 0;
        tokens.push_back(t);
    }
    return tokens;
}

inline bool whitespace_only_between(std::string_view text, size_t from, size_t to) {
    for (size_t i = from; i < to; ++i)
        if (!std::isspace(static_cast<unsigned char>(text[i]))) return false;
    return true;
}

inline bool at_sentence_start(std::string_view text, size_t pos) {
    size_t i = pos;
    while (i > 0) {
        char c = text[i - 1];
        if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '(' ||
            c == ')') {
            --i;
            continue;
        }
        return c == '.' || c == '!' || c == '?';
    }
    return true;
}

}  // namespace geo_detail

// Scans capitalized token sequences (1-4 capitalized tokens, internal
// "of"/"the" allowed); a sequence is a candidate iff it matches a gazetteer
// name or alternate. Longest match wins at each position. Sentence-initial
// single tokens on the stoplist are dropped.
inline std::vector<toponym_candidate> recognize_toponyms(std::string_view text,
                                                         const gazetteer& gaz,
                                                         const std::set<std::string>& stoplist) {
    using geo_detail::token;
    std::vector<toponym_candidate> out;
    std::vector<token> tokens = geo_detail::tokenize(text);

    size_t i = 0;
    while (i < tokens.size()) {
        if (!tokens[i].capitalized) {
            ++i;
            continue;
        }
        std::optional<size_t> best_last;  // index of last token of best match
        std::string best_key;
        std::string key;
        int caps = 0;
        for (size_t k = i; k < tokens.size(); ++k) {
            if (k > i &&
                !geo_detail::whitespace_only_between(text, tokens[k - 1].end, tokens[k].begin))
                break;  // punctuation splits a name
            std::string folded = to_lower(tokens[k].text);
            if (tokens[k].capitalized) {
                if (++caps > 4) break;
            } else if (k > i && (folded == "of" || folded == "the")) {
                key += ' ';
                key += tokens[k].text;
                continue;  // connector; sequence must still end on a capitalized token
            } else {
                break;
            }
            if (k > i) key += ' ';
            key += tokens[k].text;
            if (gaz.has(key)) {
                best_last = k;
                best_key = key;
            }
        }
        if (!best_last) {
            ++i;
            continue;
        }
        bool single = *best_last == i;
        if (single && stoplist.count(to_lower(tokens[i].text)) &&
            geo_detail::at_sentence_start(text, tokens[i].begin)) {
            ++i;
            continue;
        }
        toponym_candidate cand;
        cand.offset = tokens[i].begin;
        cand.surface = std::string(text.substr(tokens[i].begin,
                                               tokens[*best_last].end - tokens[i].begin));
        cand.match_key = best_key;
        out.push_back(std::move(cand));
        i = *best_last + 1;
    }
    return out;
}

// Among matching entries: highest population, ties broken by smallest
// (country_code, name).
inline place_mention resolve_toponym(const toponym_candidate& candidate, const gazetteer& gaz) {
    std::vector<size_t> matches = gaz.match(candidate.match_key);
    if (matches.empty())
        throw unresolvable_toponym("no gazetteer entry for '" + candidate.match_key + "'");
    size_t best = matches[0];
    for (size_t idx : matches) {
        const auto& e = gaz.entry(idx);
        const auto& b = gaz.entry(best);
        if (e.population > b.population ||
            (e.population == b.population &&
             std::pair(e.country_code, e.name) < std::pair(b.country_code, b.name)))
            best = idx;
    }
    const auto& e = gaz.entry(best);
    place_mention m;
    m.surface = candidate.surface;
    m.latitude = e.latitude;
    m.longitude = e.longitude;
    m.resolved_name = e.name;
    m.char_offset = candidate.offset;
    return m;
}

// Recognition + resolution over title and text of each article; duplicates
// within one article collapse to a single mention per resolved place.
inline std::vector<place_mention> geoparse_corpus(const std::vector<article>& articles,
                                                  const gazetteer& gaz,
                                                  const std::set<std::string>& stoplist) {
    std::vector<place_mention> mentions;
    for (const auto& a : articles) {
        std::string doc = a.title.empty() ? a.text : a.title + "\n\n" + a.text;
        std::set<std::pair<std::string, std::string>> seen;  // (resolved_name, country via key)
        for (const auto& cand : recognize_toponyms(doc, gaz, stoplist)) {
            place_mention m = resolve_toponym(cand, gaz);
            // identity of the resolved place, not of the surface form
            std::pair<std::string, std::string> place_id{
                m.resolved_name, fmt_fixed(m.latitude, 4) + "," + fmt_fixed(m.longitude, 4)};
            if (!seen.insert(place_id).second) continue;
            m.article_url = a.url;
            mentions.push_back(std::move(m));
        }
    }
    return mentions;
}

// ---------------------------------------------------------------------------
// export

inline constexpr std::string_view k_mentions_header =
    "url\tsurface\tresolved_name\tlatitude\tlongitude";

inline std::string mentions_to_tsv(const std::vector<place_mention>& mentions) {
    std::string out{k_mentions_header};
    out += '\n';
    for (const auto& m : mentions) {
        out += m.article_url;
        out += '\t';
        out += m.surface;
        out += '\t';
        out += m.resolved_name;
        out += '\t';
        out += fmt_fixed(m.latitude, 4);
        out += '\t';
        out += fmt_fixed(m.longitude, 4);
        out += '\n';
    }
    return out;
}

inline std::vector<place_mention> mentions_from_tsv(const std::string& tsv) {
    std::vector<place_mention> out;
    bool first = true;
    for (const auto& line : split(tsv, '\n')) {
        if (first) {
            first = false;
            continue;
        }
        if (trim(line).empty()) continue;
        auto cols = split(line, '\t');
        if (cols.size() != 5) throw io_error("bad mentions row: " + line);
        place_mention m;
        m.article_url = cols[0];
        m.surface = cols[1];
        m.resolved_name = cols[2];
        m.latitude = std::stod(cols[3]);
        m.longitude = std::stod(cols[4]);
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace newsagent
