#pragma once

// Map-reduce summarization: split article text into token-budgeted chunks on
// sentence boundaries, summarize each chunk, then combine the partial
// summaries (recursively if the concatenation is still over budget).

#include <cstdint>
#include <ctime>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "newsagent/common.hpp"
#include "newsagent/llm.hpp"

namespace newsagent {

struct chunk_span {
    size_t begin = 0;
    size_t end = 0;  // exclusive
};

struct chunk_plan {
    std::vector<chunk_span> chunks;  // cover the text in order; may overlap
    int budget = 0;                  // tokens per chunk
    int overlap = 0;                 // tokens shared with the previous chunk
};

namespace summarize_detail {

// Sentence spans tile the text exactly: each span ends after the whitespace
// that follows a '.', '!' or '?' run (or at end of text).
inline std::vector<chunk_span> sentence_spans(std::string_view text) {
    std::vector<chunk_span> spans;
    size_t start = 0;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            size_t j = i + 1;
            while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
            if (j >= text.size() || std::isspace(static_cast<unsigned char>(text[j]))) {
                while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
                spans.push_back({start, j});
                start = j;
                i = j;
                continue;
            }
            i = j;
            continue;
        }
        ++i;
    }
    if (start < text.size()) spans.push_back({start, text.size()});
    return spans;
}

}  // namespace summarize_detail

// Greedy sentence packing up to `budget` tokens per chunk; consecutive chunks
// re-include trailing sentences of the previous chunk worth at most `overlap`
// tokens. A single sentence over the budget is hard-split at the budget
// boundary.
inline chunk_plan chunk_text(std::string_view text, int budget, int overlap,
                             int bytes_per_token = 3) {
    if (budget <= overlap || overlap < 0)
        throw std::invalid_argument("chunk budget must exceed overlap and overlap must be >= 0");
    chunk_plan plan;
    plan.budget = budget;
    plan.overlap = overlap;
    if (text.empty()) return plan;

    auto tokens_of = [&](size_t begin, size_t end) {
        return estimate_tokens(text.substr(begin, end - begin), bytes_per_token);
    };

    std::vector<chunk_span> sentences = summarize_detail::sentence_spans(text);
    const size_t max_chunk_bytes = static_cast<size_t>(budget) * bytes_per_token;

    size_t i = 0;  // sentence cursor
    size_t prev_start_sentence = 0;
    while (i < sentences.size()) {
        // oversized single sentence: hard split at the budget boundary
        if (tokens_of(sentences[i].begin, sentences[i].end) > budget) {
            size_t pos = sentences[i].begin;
            while (pos < sentences[i].end) {
                size_t end = std::min(pos + max_chunk_bytes, sentences[i].end);
                plan.chunks.push_back({pos, end});
                pos = end;
            }
            ++i;
            prev_start_sentence = i;
            continue;
        }

        size_t start_sentence = i;
        // back up whole sentences into the previous chunk while the overlap
        // region stays within the overlap token budget and the new chunk
        // still fits its own budget
        if (!plan.chunks.empty() && overlap > 0) {
            size_t prev_end = plan.chunks.back().end;
            while (start_sentence > prev_start_sentence + 1 &&
                   sentences[start_sentence - 1].begin >= plan.chunks.back().begin &&
                   tokens_of(sentences[start_sentence - 1].begin, prev_end) <= overlap &&
                   tokens_of(sentences[start_sentence - 1].begin, sentences[i].end) <= budget)
                --start_sentence;
        }

        size_t begin = sentences[start_sentence].begin;
        size_t j = i;
        while (j + 1 < sentences.size() &&
               tokens_of(begin, sentences[j + 1].end) <= budget &&
               tokens_of(sentences[j + 1].begin, sentences[j + 1].end) <= budget)
            ++j;
        plan.chunks.push_back({begin, sentences[j].end});
        prev_start_sentence = start_sentence;
        i = j + 1;
    }
    return plan;
}

// ---------------------------------------------------------------------------

struct article_summary {
    std::string url;
    std::vector<std::string> chunk_summaries;
    std::string summary;
    std::string model;
    std::int64_t created_at = 0;
};

inline nlohmann::json summary_to_json(const article_summary& s) {
    return {{"url", s.url},
            {"chunk_summaries", s.chunk_summaries},
            {"summary", s.summary},
            {"model", s.model},
            {"created_at", s.created_at}};
}

inline article_summary summary_from_json(const nlohmann::json& j) {
    article_summary s;
    s.url = j.at("url").get<std::string>();
    s.chunk_summaries = j.at("chunk_summaries").get<std::vector<std::string>>();
    s.summary = j.at("summary").get<std::string>();
    s.model = j.value("model", "");
    s.created_at = j.value("created_at", static_cast<std::int64_t>(0));
    return s;
}

struct summarize_options {
    int chunk_budget = 3000;   // tokens per chunk
    int chunk_overlap = 100;   // tokens shared between neighboring chunks
    int context_budget = 4096; // model context size
    int response_reserve = 512;
    int max_reduce_depth = 5;  // hard cap on reduce recursion
    int bytes_per_token = 3;
    std::string map_template;     // must contain {text}
    std::string reduce_template;  // must contain {text}
    std::string model = "gpt-4";
    std::function<std::int64_t()> now_unix = [] {
        return static_cast<std::int64_t>(std::time(nullptr));
    };
};

namespace summarize_detail {

inline std::string fill_template(const std::string& tmpl, std::string_view text) {
    if (tmpl.find("{text}") == std::string::npos)
        throw std::invalid_argument("summary prompt template missing {text}");
    return replace_all(tmpl, "{text}", std::string(text));
}

inline std::string guarded_call(const completion_fn& llm, const std::string& prompt,
                                const summarize_options& opt) {
    if (estimate_tokens(prompt, opt.bytes_per_token) >
        opt.context_budget - opt.response_reserve)
        throw std::logic_error("summary prompt exceeds context budget minus reserve");
    return llm(prompt);
}

inline std::string reduce(std::vector<std::string> summaries, const completion_fn& llm,
                          const summarize_options& opt, int depth) {
    std::string joined = join(summaries, "\n\n");
    if (estimate_tokens(joined, opt.bytes_per_token) <= opt.chunk_budget)
        return guarded_call(llm, fill_template(opt.reduce_template, joined), opt);
    if (depth >= opt.max_reduce_depth) {
        // non-shrinking reduce: truncate to the budget and combine once
        joined.resize(std::min(joined.size(),
                               static_cast<size_t>(opt.chunk_budget) * opt.bytes_per_token));
        return guarded_call(llm, fill_template(opt.reduce_template, joined), opt);
    }
    chunk_plan plan = chunk_text(joined, opt.chunk_budget, opt.chunk_overlap, opt.bytes_per_token);
    std::vector<std::string> next;
    next.reserve(plan.chunks.size());
    for (const auto& span : plan.chunks)
        next.push_back(guarded_call(
            llm,
            fill_template(opt.reduce_template,
                          std::string_view(joined).substr(span.begin, span.end - span.begin)),
            opt));
    return reduce(std::move(next), llm, opt, depth + 1);
}

}  // namespace summarize_detail

// Map phase: one completion per chunk. Reduce phase: combine the chunk
// summaries, re-chunking recursively while the concatenation is over budget.
// With a replay backend the whole operation is deterministic.
inline article_summary summarize_text(const std::string& url, std::string_view text,
                                      const completion_fn& llm,
                                      const summarize_options& opt) {
    if (text.empty()) throw empty_document("article text is empty: " + url);

    article_summary result;
    result.url = url;
    result.model = opt.model;
    result.created_at = opt.now_unix();

    chunk_plan plan = chunk_text(text, opt.chunk_budget, opt.chunk_overlap, opt.bytes_per_token);
    result.chunk_summaries.reserve(plan.chunks.size());
    for (const auto& span : plan.chunks)
        result.chunk_summaries.push_back(summarize_detail::guarded_call(
            llm,
            summarize_detail::fill_template(opt.map_template,
                                            text.substr(span.begin, span.end - span.begin)),
            opt));

    result.summary = summarize_detail::reduce(result.chunk_summaries, llm, opt, 0);
    if (result.summary.empty() && !result.chunk_summaries.empty()) {
        // a summary exists whenever chunk summaries exist, even if the model
        // returned nothing for the combine step
        result.summary = join(result.chunk_summaries, "\n\n");
        result.summary.resize(std::min(result.summary.size(),
                                       static_cast<size_t>(opt.chunk_budget) *
                                           opt.bytes_per_token));
    }
    return result;
}

}  // namespace newsagent
