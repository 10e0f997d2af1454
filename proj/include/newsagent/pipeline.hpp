#pragma once

// Wires the tool library onto the run directories: each stage reads its
// upstream artifact, writes its own, and returns a one-line observation for
// the agent transcript. Manual subcommands and agent tools call the same
// functions, so both modes produce identical artifacts.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "newsagent/agent.hpp"
#include "newsagent/config.hpp"
#include "newsagent/geoparse.hpp"
#include "newsagent/html.hpp"
#include "newsagent/ingest.hpp"
#include "newsagent/lda.hpp"
#include "newsagent/llm.hpp"
#include "newsagent/summarize.hpp"
#include "newsagent/viz.hpp"

namespace newsagent {

struct missing_upstream : std::runtime_error {
    explicit missing_upstream(const std::string& artifact)
        : std::runtime_error("missing upstream artifact: " + artifact) {}
};

struct run_report {
    int articles_ingested = 0;
    int articles_summarized = 0;
    int mentions_found = 0;
    int undated_excluded = 0;
    int llm_calls = 0;
    std::vector<std::string> outputs;  // emitted file paths
    std::string transcript_path;
};

inline nlohmann::json report_to_json(const run_report& r) {
    return {{"articles_ingested", r.articles_ingested},
            {"articles_summarized", r.articles_summarized},
            {"mentions_found", r.mentions_found},
            {"undated_excluded", r.undated_excluded},
            {"llm_calls", r.llm_calls},
            {"outputs", r.outputs},
            {"transcript_path", r.transcript_path}};
}

inline run_report report_from_json(const nlohmann::json& j) {
    run_report r;
    r.articles_ingested = j.at("articles_ingested").get<int>();
    r.articles_summarized = j.at("articles_summarized").get<int>();
    r.mentions_found = j.at("mentions_found").get<int>();
    r.undated_excluded = j.at("undated_excluded").get<int>();
    r.llm_calls = j.at("llm_calls").get<int>();
    r.outputs = j.at("outputs").get<std::vector<std::string>>();
    r.transcript_path = j.at("transcript_path").get<std::string>();
    return r;
}

class pipeline {
public:
    explicit pipeline(run_config cfg,
                      std::shared_ptr<completion_backend> backend_override = nullptr,
                      fetch_transport transport_override = nullptr)
        : cfg_(std::move(cfg)) {
        std::filesystem::create_directories(cfg_.data_dir);
        std::filesystem::create_directories(cfg_.output_dir);

        std::shared_ptr<completion_backend> inner = backend_override;
        if (!inner) inner = make_backend(cfg_);
        recorder_ = std::make_shared<recording_backend>(
            inner, cfg_.summarizer.context_budget - cfg_.summarizer.response_reserve);

        if (transport_override) {
            transport_ = std::move(transport_override);
        } else if (cfg_.fetch_mode == "file") {
            transport_ = make_file_transport(cfg_.fetch_root);
        }
        // fetch_mode == "http" binds lazily in tools/ (keeps this header
        // socket-free); run_ingest throws if no transport was provided.
    }

    const run_config& config() const { return cfg_; }
    run_report& report() { return report_; }

    void set_transport(fetch_transport t) { transport_ = std::move(t); }

    completion_fn completions() {
        auto recorder = recorder_;
        std::string model = cfg_.model;
        return [recorder, model](const std::string& prompt) {
            completion_request req;
            req.model = model;
            req.temperature = 0.0;
            req.messages.push_back({"user", prompt});
            return recorder->complete(req);
        };
    }

    // ------------------------------------------------------------------
    // stages

    std::string run_ingest() {
        if (!transport_) throw config_error("no fetch transport configured");
        article_store store(cfg_.data_dir);
        int ok = 0, duplicate = 0, failed = 0;
        fetch_options options = fetch_options::defaults(transport_);
        for (const auto& source : cfg_.sources) {
            for (const auto& index_url : source.index_urls) {
                fetch_response index = transport_(index_url);
                if (!index.error.empty() || index.status < 200 || index.status >= 300) {
                    ++failed;
                    continue;
                }
                std::vector<std::string> urls = discover_urls(source, index.body, index_url);
                for (const auto& rec : fetch_and_store(source, urls, store, options)) {
                    switch (rec.status) {
                        case fetch_status::ok: ++ok; break;
                        case fetch_status::duplicate: ++duplicate; break;
                        default: ++failed; break;
                    }
                }
            }
        }
        report_.articles_ingested = ok;
        return "saved " + std::to_string(ok) + " new articles (" + std::to_string(duplicate) +
               " duplicates, " + std::to_string(failed) + " failures) from " +
               std::to_string(cfg_.sources.size()) + " sources; store now holds " +
               std::to_string(store.size()) + " articles";
    }

    std::string run_summarize() {
        article_store store = open_store();
        completion_fn llm = completions();

        // already-summarized articles are skipped, so re-running is cheap
        std::vector<article_summary> existing = load_summaries();
        std::set<std::string> done;
        for (const auto& s : existing) done.insert(s.url);

        int new_count = 0;
        const int calls_before = recorder_->call_count();
        std::ofstream out(summaries_path(), std::ios::binary | std::ios::app);
        for (const auto& a : store.all()) {
            if (done.count(a.url)) continue;
            article_summary s = summarize_text(a.url, a.text, llm, cfg_.summarizer);
            out << summary_to_json(s).dump() << '\n';
            out.flush();
            ++new_count;
        }
        report_.articles_summarized = new_count;
        report_.llm_calls = recorder_->call_count();
        return "summarized " + std::to_string(new_count) + " articles (" +
               std::to_string(done.size()) + " already done) using " +
               std::to_string(recorder_->call_count() - calls_before) + " model calls";
    }

    std::string run_geoparse() {
        article_store store = open_store();
        gazetteer gaz = load_gazetteer(cfg_.gazetteer_path);
        std::set<std::string> stoplist = load_stoplist(cfg_.stoplist_path);
        std::vector<place_mention> mentions = geoparse_corpus(store.all(), gaz, stoplist);
        write_file(mentions_path(), mentions_to_tsv(mentions));
        report_.mentions_found = static_cast<int>(mentions.size());
        return "resolved " + std::to_string(mentions.size()) + " place mentions across " +
               std::to_string(store.size()) + " articles";
    }

    std::string run_temporal() {
        article_store store = open_store();
        monthly_tally tally = monthly_counts(store.all(), cfg_.window);
        std::string csv{k_monthly_csv_header};
        csv += '\n';
        int dated = 0;
        for (const auto& c : tally.counts) {
            csv += format_month(c.month) + "," + std::to_string(c.count) + "\n";
            dated += c.count;
        }
        write_file(temporal_path(), csv);
        report_.undated_excluded = tally.undated_excluded;
        return "counted " + std::to_string(dated) + " dated articles across " +
               std::to_string(tally.counts.size()) + " months (" +
               std::to_string(tally.undated_excluded) + " undated excluded, " +
               std::to_string(tally.outside_window) + " outside the window)";
    }

    std::string run_lda() {
        std::vector<article_summary> summaries = load_summaries();
        if (summaries.empty()) throw missing_upstream("summaries");
        article_store store = open_store();

        std::vector<std::string> texts, ids;
        std::vector<std::optional<civil_date>> dates;
        for (const auto& s : summaries) {
            texts.push_back(s.summary);
            ids.push_back(s.url);
            const article* a = store.find(s.url);
            dates.push_back(a ? a->published_at : std::nullopt);
        }
        std::set<std::string> stopwords = load_stopwords(cfg_.stopwords_path);
        corpus corp = preprocess(texts, ids, dates, stopwords);
        lda_model model = fit(corp, cfg_.lda);
        save_model(model_path(), model, corp);
        write_file(cfg_.data_dir / "topics.tsv", top_terms_tsv(model, corp, cfg_.top_words));
        write_file(cfg_.data_dir / "doc_topics.tsv", doc_topics_tsv(model, corp));
        return "fitted " + std::to_string(cfg_.lda.topics) + " topics over " +
               std::to_string(corp.documents.size()) + " summaries (vocabulary " +
               std::to_string(corp.vocabulary.size()) + " terms, " +
               std::to_string(cfg_.lda.sweeps) + " sweeps)";
    }

    std::string run_plot() {
        if (!std::filesystem::exists(model_path())) throw missing_upstream("lda model");
        if (!std::filesystem::exists(mentions_path())) throw missing_upstream("mentions table");
        article_store store = open_store();
        std::vector<place_mention> mentions = mentions_from_tsv(read_file(mentions_path()));
        auto [model, corp] = load_model(model_path());

        monthly_tally tally = monthly_counts(store.all(), cfg_.window);
        report_.undated_excluded = tally.undated_excluded;

        emit_map_scatter(mentions, out("map.svg"), out("map.csv"), cfg_.map);
        emit_monthly_bar(tally.counts, out("monthly.svg"), out("monthly.csv"), cfg_.chart);
        auto counts = keyword_trends(model, corp, cfg_.top_words, trend_kind::count, cfg_.window);
        emit_streamgraph(counts, cfg_.window, out("topics_count.svg"), out("topics_count.csv"),
                         cfg_.chart);
        auto weights =
            keyword_trends(model, corp, cfg_.top_words, trend_kind::weight, cfg_.window);
        emit_streamgraph(weights, cfg_.window, out("topics_weight.svg"),
                         out("topics_weight.csv"), cfg_.chart);

        std::vector<std::string> names = {"map.svg",          "map.csv",
                                          "monthly.svg",      "monthly.csv",
                                          "topics_count.svg", "topics_count.csv",
                                          "topics_weight.svg", "topics_weight.csv"};
        for (const auto& n : names)
            report_.outputs.push_back((cfg_.output_dir / n).string());
        return "wrote " + join(names, ", ");
    }

    // ------------------------------------------------------------------
    // agent wiring

    tool_registry build_registry() {
        tool_registry registry;
        registry.register_tool(
            {"search_and_save_news",
             "Crawl the configured news sources and save newly found articles locally.",
             "topic keywords (informational)"},
            [this](const std::string&) { return run_ingest(); });
        registry.register_tool(
            {"summarize_news",
             "Summarize every stored article with the language model (map-reduce).",
             "none"},
            [this](const std::string&) { return run_summarize(); });
        registry.register_tool(
            {"extract_spatial_data",
             "Recognize place names in stored articles and resolve them to coordinates.",
             "none"},
            [this](const std::string&) { return run_geoparse(); });
        registry.register_tool(
            {"extract_temporal_data",
             "Tally stored articles per publication month over the reporting window.",
             "none"},
            [this](const std::string&) { return run_temporal(); });
        registry.register_tool(
            {"visualize_results",
             "Fit the topic model and write the map, monthly and streamgraph plots.",
             "none"},
            [this](const std::string&) {
                std::string lda_obs = run_lda();
                std::string plot_obs = run_plot();
                return lda_obs + "; " + plot_obs;
            });
        return registry;
    }

    agent_transcript run_agent(const std::string& question) {
        tool_registry registry = build_registry();
        agent_transcript transcript = run_loop(cfg_.agent, registry, completions(), question);
        write_transcript(transcript_path(), transcript);
        report_.transcript_path = transcript_path().string();
        report_.llm_calls = recorder_->call_count();
        return transcript;
    }

    // ------------------------------------------------------------------
    // artifacts

    std::filesystem::path summaries_path() const { return cfg_.data_dir / "summaries.jsonl"; }
    std::filesystem::path mentions_path() const { return cfg_.data_dir / "mentions.tsv"; }
    std::filesystem::path temporal_path() const { return cfg_.data_dir / "temporal.csv"; }
    std::filesystem::path model_path() const { return cfg_.data_dir / "lda_model.json"; }
    std::filesystem::path transcript_path() const { return cfg_.output_dir / "transcript.jsonl"; }
    std::filesystem::path report_path() const { return cfg_.output_dir / "report.json"; }
    std::filesystem::path llm_log_path() const { return cfg_.data_dir / "llm_calls.jsonl"; }

    article_store open_store() const {
        if (!std::filesystem::exists(cfg_.data_dir / "articles.jsonl"))
            throw missing_upstream("article store");
        return article_store(cfg_.data_dir);
    }

    std::vector<article_summary> load_summaries() const {
        std::vector<article_summary> out;
        if (!std::filesystem::exists(summaries_path())) return out;
        for (const auto& line : read_lines(summaries_path())) {
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded()) continue;
            out.push_back(summary_from_json(j));
        }
        return out;
    }

    // Every claimed output must exist on disk before the report is written.
    void finalize() {
        report_.llm_calls = recorder_->call_count();
        recorder_->write_log(llm_log_path());
        for (const auto& o : report_.outputs)
            if (!std::filesystem::exists(o))
                throw io_error("report lists a missing output: " + o);
        write_file(report_path(), report_to_json(report_).dump(2) + "\n");
    }

    static std::shared_ptr<completion_backend> make_backend(const run_config& cfg) {
        if (cfg.backend == "replay")
            return std::make_shared<replay_backend>(load_replay_entries(cfg.replay_path),
                                                    replay_mode::strict_sequence);
        throw config_error(
            "http backend must be constructed by the caller (see tools/); "
            "pass backend_override");
    }

private:
    std::filesystem::path out(const char* name) const { return cfg_.output_dir / name; }

    run_config cfg_;
    std::shared_ptr<recording_backend> recorder_;
    fetch_transport transport_;
    run_report report_;
};

}  // namespace newsagent
