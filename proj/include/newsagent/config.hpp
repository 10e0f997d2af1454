#pragma once

// Sectioned key-value configuration. Section and key order is preserved so
// source declaration order is stable across runs.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "newsagent/agent.hpp"
#include "newsagent/common.hpp"
#include "newsagent/ingest.hpp"
#include "newsagent/lda.hpp"
#include "newsagent/summarize.hpp"
#include "newsagent/viz.hpp"

namespace newsagent {

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ini_section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;

    std::optional<std::string> get(const std::string& key) const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        return std::nullopt;
    }
};

struct ini_file {
    std::vector<ini_section> sections;

    static ini_file parse(const std::string& content) {
        ini_file out;
        ini_section* current = nullptr;
        int line_no = 0;
        for (const auto& raw : split(content, '\n')) {
            ++line_no;
            std::string line = trim(raw);
            if (line.empty() || line[0] == '#' || line[0] == ';') continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw config_error("line " + std::to_string(line_no) + ": unterminated section");
                out.sections.push_back({trim(line.substr(1, line.size() - 2)), {}});
                current = &out.sections.back();
                continue;
            }
            size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw config_error("line " + std::to_string(line_no) + ": expected key = value");
            if (!current)
                throw config_error("line " + std::to_string(line_no) + ": entry before any section");
            current->entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return out;
    }

    const ini_section* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) const {
        const ini_section* s = find(section);
        return s ? s->get(key) : std::nullopt;
    }
};

// ---------------------------------------------------------------------------

struct run_config {
    std::filesystem::path config_dir;  // everything relative resolves against this

    std::filesystem::path data_dir = "data_run";
    std::filesystem::path output_dir = "out";

    std::string backend = "replay";  // http | replay
    std::filesystem::path replay_path;
    std::string endpoint_url;
    std::string api_key_env = "NEWSAGENT_API_KEY";
    std::string model = "gpt-4";

    std::string fetch_mode = "http";  // http | file
    std::filesystem::path fetch_root;

    agent_config agent;  // prompt_template holds the loaded text

    summarize_options summarizer;  // templates hold the loaded text

    lda_config lda;
    int top_words = 5;
    std::filesystem::path stopwords_path;

    std::filesystem::path gazetteer_path;
    std::filesystem::path stoplist_path;

    month_window window{{2022, 6}, {2023, 5}};

    map_options map;
    chart_options chart;

    std::vector<news_source> sources;
};

namespace config_detail {

inline int to_int(const std::string& v, const std::string& what) {
    try {
        size_t used = 0;
        int out = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw config_error("bad integer for " + what + ": '" + v + "'");
    }
}

inline double to_double(const std::string& v, const std::string& what) {
    try {
        size_t used = 0;
        double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw config_error("bad number for " + what + ": '" + v + "'");
    }
}

inline std::uint64_t to_u64(const std::string& v, const std::string& what) {
    try {
        size_t used = 0;
        unsigned long long out = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw config_error("bad integer for " + what + ": '" + v + "'");
    }
}

inline year_month to_month(const std::string& v, const std::string& what) {
    auto m = parse_month(v);
    if (!m) throw config_error("bad month (YYYY-MM) for " + what + ": '" + v + "'");
    return *m;
}

}  // namespace config_detail

// Loads and validates a run configuration. Relative paths in the file are
// resolved against the file's own directory; template files are read here so
// the rest of the pipeline never touches the config directory again.
inline run_config load_run_config(const std::filesystem::path& path) {
    using namespace config_detail;
    ini_file ini = ini_file::parse(read_file(path));
    run_config cfg;
    cfg.config_dir = std::filesystem::absolute(path).parent_path();

    auto resolve = [&](const std::string& p) -> std::filesystem::path {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : cfg.config_dir / fp;
    };

    if (auto v = ini.get("run", "data_dir")) cfg.data_dir = resolve(*v);
    if (auto v = ini.get("run", "output_dir")) cfg.output_dir = resolve(*v);
    if (auto v = ini.get("run", "backend")) cfg.backend = *v;
    if (auto v = ini.get("run", "replay_path")) cfg.replay_path = resolve(*v);
    if (auto v = ini.get("run", "endpoint_url")) cfg.endpoint_url = *v;
    if (auto v = ini.get("run", "api_key_env")) cfg.api_key_env = *v;
    if (auto v = ini.get("run", "model")) cfg.model = *v;
    if (auto v = ini.get("run", "fetch_transport")) cfg.fetch_mode = *v;
    if (auto v = ini.get("run", "fetch_root")) cfg.fetch_root = resolve(*v);

    if (cfg.backend != "http" && cfg.backend != "replay")
        throw config_error("backend must be http or replay, got '" + cfg.backend + "'");
    if (cfg.backend == "replay" && cfg.replay_path.empty())
        throw config_error("backend=replay requires replay_path");
    if (cfg.backend == "http" && cfg.endpoint_url.empty())
        throw config_error("backend=http requires endpoint_url");
    if (cfg.fetch_mode != "http" && cfg.fetch_mode != "file")
        throw config_error("fetch_transport must be http or file");
    if (cfg.fetch_mode == "file" && cfg.fetch_root.empty())
        throw config_error("fetch_transport=file requires fetch_root");

    if (auto v = ini.get("agent", "max_steps")) cfg.agent.max_steps = to_int(*v, "agent.max_steps");
    if (auto v = ini.get("agent", "max_parse_failures"))
        cfg.agent.max_consecutive_parse_failures = to_int(*v, "agent.max_parse_failures");
    if (auto v = ini.get("agent", "prompt_token_budget"))
        cfg.agent.prompt_token_budget = to_int(*v, "agent.prompt_token_budget");
    if (auto v = ini.get("agent", "prompt_template")) {
        cfg.agent.prompt_template = read_file(resolve(*v));
    } else {
        throw config_error("agent.prompt_template is required");
    }
    validate_agent_config(cfg.agent);

    if (auto v = ini.get("summarizer", "chunk_budget"))
        cfg.summarizer.chunk_budget = to_int(*v, "summarizer.chunk_budget");
    if (auto v = ini.get("summarizer", "chunk_overlap"))
        cfg.summarizer.chunk_overlap = to_int(*v, "summarizer.chunk_overlap");
    if (auto v = ini.get("summarizer", "context_budget"))
        cfg.summarizer.context_budget = to_int(*v, "summarizer.context_budget");
    if (auto v = ini.get("summarizer", "response_reserve"))
        cfg.summarizer.response_reserve = to_int(*v, "summarizer.response_reserve");
    if (auto v = ini.get("summarizer", "map_template"))
        cfg.summarizer.map_template = read_file(resolve(*v));
    else
        throw config_error("summarizer.map_template is required");
    if (auto v = ini.get("summarizer", "reduce_template"))
        cfg.summarizer.reduce_template = read_file(resolve(*v));
    else
        throw config_error("summarizer.reduce_template is required");
    cfg.summarizer.model = cfg.model;
    if (cfg.summarizer.chunk_budget <= cfg.summarizer.chunk_overlap)
        throw config_error("summarizer.chunk_budget must exceed chunk_overlap");

    if (auto v = ini.get("lda", "topics")) cfg.lda.topics = to_int(*v, "lda.topics");
    if (auto v = ini.get("lda", "alpha")) cfg.lda.alpha = to_double(*v, "lda.alpha");
    if (auto v = ini.get("lda", "beta")) cfg.lda.beta = to_double(*v, "lda.beta");
    if (auto v = ini.get("lda", "sweeps")) cfg.lda.sweeps = to_int(*v, "lda.sweeps");
    if (auto v = ini.get("lda", "seed")) cfg.lda.seed = to_u64(*v, "lda.seed");
    if (auto v = ini.get("lda", "top_words")) cfg.top_words = to_int(*v, "lda.top_words");
    if (auto v = ini.get("lda", "stopwords")) cfg.stopwords_path = resolve(*v);
    else throw config_error("lda.stopwords is required");
    validate_lda_config(cfg.lda);

    if (auto v = ini.get("geoparse", "gazetteer")) cfg.gazetteer_path = resolve(*v);
    else throw config_error("geoparse.gazetteer is required");
    if (auto v = ini.get("geoparse", "stoplist")) cfg.stoplist_path = resolve(*v);
    else throw config_error("geoparse.stoplist is required");

    if (auto v = ini.get("window", "start")) cfg.window.start = to_month(*v, "window.start");
    if (auto v = ini.get("window", "end")) cfg.window.end = to_month(*v, "window.end");
    if (month_index(cfg.window.start) > month_index(cfg.window.end))
        throw config_error("window.start is after window.end");

    if (auto v = ini.get("viz", "map_width")) cfg.map.width = to_int(*v, "viz.map_width");
    if (auto v = ini.get("viz", "map_height")) cfg.map.height = to_int(*v, "viz.map_height");
    if (auto v = ini.get("viz", "chart_width")) cfg.chart.width = to_int(*v, "viz.chart_width");
    if (auto v = ini.get("viz", "chart_height"))
        cfg.chart.height = to_int(*v, "viz.chart_height");

    for (const auto& section : ini.sections) {
        if (!section.name.starts_with("source:")) continue;
        news_source src;
        src.id = section.name.substr(7);
        if (auto v = section.get("display_name")) src.display_name = *v;
        if (auto v = section.get("index_urls")) src.index_urls = split_list(*v, ',');
        if (auto v = section.get("host_allowlist")) {
            src.host_allowlist.clear();
            for (auto& h : split_list(*v, ',')) src.host_allowlist.push_back(to_lower(h));
        }
        if (auto v = section.get("rate_limit"))
            src.rate_limit_seconds = to_double(*v, section.name + ".rate_limit");
        try {
            validate_source(src);
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("bad source [") + section.name + "]: " + e.what());
        }
        cfg.sources.push_back(std::move(src));
    }

    return cfg;
}

}  // namespace newsagent
