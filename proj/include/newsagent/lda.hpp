#pragma once

// Latent Dirichlet Allocation by collapsed Gibbs sampling. The sampler is a
// plain sequential scan over token positions so that count invariants are
// exact and reference traces are reproducible. All randomness flows through
// std::mt19937_64 (the standard fixes its output sequence, so seeded runs are
// bit-identical across platforms) mapped to [0,1) via the top 53 bits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "newsagent/common.hpp"

namespace newsagent {

struct empty_corpus : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct corpus {
    std::vector<std::vector<int>> documents;  // token ids
    std::vector<std::string> vocabulary;      // id -> term
    std::vector<std::string> doc_ids;
    std::vector<std::optional<civil_date>> doc_dates;

    size_t total_tokens() const {
        size_t n = 0;
        for (const auto& d : documents) n += d.size();
        return n;
    }
};

inline std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::set<std::string> words;
    for (const auto& line : read_lines(path)) {
        std::string w = trim(line);
        if (w.empty() || w[0] == '#') continue;
        words.insert(to_lower(w));
    }
    return words;
}

// Bag-of-words preprocessing: lowercase, split on non-alphabetic characters,
// drop tokens shorter than 3 chars, drop stopwords, drop terms appearing in
// fewer than 2 documents, drop documents left empty. Vocabulary ids follow
// first occurrence order.
inline corpus preprocess(const std::vector<std::string>& texts,
                         const std::vector<std::string>& doc_ids,
                         const std::vector<std::optional<civil_date>>& doc_dates,
                         const std::set<std::string>& stopwords) {
    if (texts.size() != doc_ids.size() || texts.size() != doc_dates.size())
        throw std::invalid_argument("preprocess: parallel lists differ in length");

    std::vector<std::vector<std::string>> tokenized(texts.size());
    std::unordered_map<std::string, int> doc_freq;
    for (size_t d = 0; d < texts.size(); ++d) {
        const std::string& text = texts[d];
        std::string word;
        auto flush = [&] {
            if (word.size() >= 3 && !stopwords.count(word)) tokenized[d].push_back(word);
            word.clear();
        };
        for (char c : text) {
            if (std::isalpha(static_cast<unsigned char>(c)))
                word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            else
                flush();
        }
        flush();
        std::set<std::string> unique(tokenized[d].begin(), tokenized[d].end());
        for (const auto& t : unique) ++doc_freq[t];
    }

    corpus out;
    std::unordered_map<std::string, int> term_ids;
    for (size_t d = 0; d < texts.size(); ++d) {
        std::vector<int> doc;
        for (const auto& t : tokenized[d]) {
            if (doc_freq[t] < 2) continue;
            auto [it, inserted] = term_ids.emplace(t, static_cast<int>(out.vocabulary.size()));
            if (inserted) out.vocabulary.push_back(t);
            doc.push_back(it->second);
        }
        if (doc.empty()) continue;  // empty-after-preprocess docs are excluded
        out.documents.push_back(std::move(doc));
        out.doc_ids.push_back(doc_ids[d]);
        out.doc_dates.push_back(doc_dates[d]);
    }
    if (out.documents.empty())
        throw empty_corpus("no document retains any token after preprocessing");
    return out;
}

inline corpus preprocess(const std::vector<std::string>& texts,
                         const std::set<std::string>& stopwords) {
    std::vector<std::string> ids(texts.size());
    for (size_t i = 0; i < ids.size(); ++i) ids[i] = "doc" + std::to_string(i);
    return preprocess(texts, ids, std::vector<std::optional<civil_date>>(texts.size()),
                      stopwords);
}

// ---------------------------------------------------------------------------
// model

struct lda_config {
    int topics = 5;
    double alpha = 0.1;  // symmetric document-topic prior
    double beta = 0.01;  // symmetric topic-word prior
    int sweeps = 500;
    std::uint64_t seed = 42;
};

inline void validate_lda_config(const lda_config& cfg) {
    if (cfg.topics <= 0) throw std::invalid_argument("topics must be positive");
    if (cfg.alpha <= 0 || cfg.beta <= 0) throw std::invalid_argument("priors must be positive");
    if (cfg.sweeps <= 0) throw std::invalid_argument("sweeps must be positive");
}

struct lda_model {
    lda_config config;
    int vocab_size = 0;
    std::vector<std::vector<int>> assignments;  // z, parallel to corpus.documents
    std::vector<std::vector<int>> doc_topic;    // n_dk
    std::vector<std::vector<int>> topic_word;   // n_kw
    std::vector<long long> topic_total;         // n_k
};

using lda_rng = std::mt19937_64;

// top 53 bits -> [0,1)
inline double next_unit(lda_rng& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

inline lda_model init_model(const corpus& corp, const lda_config& cfg, lda_rng& rng) {
    validate_lda_config(cfg);
    if (corp.documents.empty()) throw empty_corpus("cannot fit on an empty corpus");
    lda_model m;
    m.config = cfg;
    m.vocab_size = static_cast<int>(corp.vocabulary.size());
    const int K = cfg.topics;
    m.assignments.resize(corp.documents.size());
    m.doc_topic.assign(corp.documents.size(), std::vector<int>(K, 0));
    m.topic_word.assign(K, std::vector<int>(m.vocab_size, 0));
    m.topic_total.assign(K, 0);
    for (size_t d = 0; d < corp.documents.size(); ++d) {
        const auto& doc = corp.documents[d];
        m.assignments[d].resize(doc.size());
        for (size_t i = 0; i < doc.size(); ++i) {
            int k = static_cast<int>(rng() % static_cast<std::uint64_t>(K));
            m.assignments[d][i] = k;
            ++m.doc_topic[d][k];
            ++m.topic_word[k][doc[i]];
            ++m.topic_total[k];
        }
    }
    return m;
}

// One full sequential scan. For each token position: remove the token from
// the counts, draw a topic with weight
//   (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta),
// then add it back under the new topic.
inline void gibbs_sweep(lda_model& m, const corpus& corp, lda_rng& rng) {
    const int K = m.config.topics;
    const double alpha = m.config.alpha;
    const double beta = m.config.beta;
    const double v_beta = static_cast<double>(m.vocab_size) * beta;
    std::vector<double> weight(K);
    for (size_t d = 0; d < corp.documents.size(); ++d) {
        const auto& doc = corp.documents[d];
        auto& z = m.assignments[d];
        auto& n_dk = m.doc_topic[d];
        for (size_t i = 0; i < doc.size(); ++i) {
            const int w = doc[i];
            const int old_k = z[i];
            --n_dk[old_k];
            --m.topic_word[old_k][w];
            --m.topic_total[old_k];

            double total = 0.0;
            for (int k = 0; k < K; ++k) {
                weight[k] = (n_dk[k] + alpha) * (m.topic_word[k][w] + beta) /
                            (static_cast<double>(m.topic_total[k]) + v_beta);
                total += weight[k];
            }
            const double u = next_unit(rng) * total;
            int new_k = K - 1;
            double acc = 0.0;
            for (int k = 0; k < K; ++k) {
                acc += weight[k];
                if (u < acc) {
                    new_k = k;
                    break;
                }
            }

            z[i] = new_k;
            ++n_dk[new_k];
            ++m.topic_word[new_k][w];
            ++m.topic_total[new_k];
        }
    }
}

// Seeded end-to-end fit: random init then `sweeps` Gibbs sweeps.
inline lda_model fit(const corpus& corp, const lda_config& cfg) {
    lda_rng rng(cfg.seed);
    lda_model m = init_model(corp, cfg, rng);
    for (int s = 0; s < cfg.sweeps; ++s) gibbs_sweep(m, corp, rng);
    return m;
}

// Recomputes all count matrices from the assignments; true iff they match the
// model's incrementally maintained ones exactly.
inline bool counts_consistent(const lda_model& m, const corpus& corp) {
    const int K = m.config.topics;
    std::vector<std::vector<int>> n_dk(corp.documents.size(), std::vector<int>(K, 0));
    std::vector<std::vector<int>> n_kw(K, std::vector<int>(m.vocab_size, 0));
    std::vector<long long> n_k(K, 0);
    for (size_t d = 0; d < corp.documents.size(); ++d) {
        if (m.assignments[d].size() != corp.documents[d].size()) return false;
        for (size_t i = 0; i < corp.documents[d].size(); ++i) {
            int k = m.assignments[d][i];
            if (k < 0 || k >= K) return false;
            ++n_dk[d][k];
            ++n_kw[k][corp.documents[d][i]];
            ++n_k[k];
        }
    }
    return n_dk == m.doc_topic && n_kw == m.topic_word && n_k == m.topic_total;
}

// ---------------------------------------------------------------------------
// derived quantities

inline double phi(const lda_model& m, int k, int w) {
    return (m.topic_word[k][w] + m.config.beta) /
           (static_cast<double>(m.topic_total[k]) + m.vocab_size * m.config.beta);
}

inline std::vector<double> doc_topics(const lda_model& m, size_t d) {
    const int K = m.config.topics;
    double len = 0;
    for (int k = 0; k < K; ++k) len += m.doc_topic[d][k];
    std::vector<double> theta(K);
    for (int k = 0; k < K; ++k)
        theta[k] = (m.doc_topic[d][k] + m.config.alpha) / (len + K * m.config.alpha);
    return theta;
}

inline int argmax_topic(const lda_model& m, size_t d) {
    const auto theta = doc_topics(m, d);
    return static_cast<int>(std::max_element(theta.begin(), theta.end()) - theta.begin());
}

// n highest-phi terms of topic k, ties broken alphabetically.
inline std::vector<std::pair<std::string, double>> top_words(const lda_model& m,
                                                             const corpus& corp, int k, int n) {
    if (k < 0 || k >= m.config.topics) throw std::invalid_argument("topic index out of range");
    std::vector<int> order(m.vocab_size);
    for (int w = 0; w < m.vocab_size; ++w) order[w] = w;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double pa = phi(m, k, a), pb = phi(m, k, b);
        if (pa != pb) return pa > pb;
        return corp.vocabulary[a] < corp.vocabulary[b];
    });
    std::vector<std::pair<std::string, double>> out;
    for (int i = 0; i < n && i < m.vocab_size; ++i)
        out.emplace_back(corp.vocabulary[order[i]], phi(m, k, order[i]));
    return out;
}

// exp(-mean log-likelihood per token) under theta * phi.
inline double perplexity(const lda_model& m, const corpus& corp) {
    const int K = m.config.topics;
    double log_sum = 0.0;
    size_t tokens = 0;
    for (size_t d = 0; d < corp.documents.size(); ++d) {
        const auto theta = doc_topics(m, d);
        for (int w : corp.documents[d]) {
            double p = 0.0;
            for (int k = 0; k < K; ++k) p += theta[k] * phi(m, k, w);
            log_sum += std::log(p);
            ++tokens;
        }
    }
    if (tokens == 0) return 1.0;
    return std::exp(-log_sum / static_cast<double>(tokens));
}

// ---------------------------------------------------------------------------
// persistence and export

inline void save_model(const std::filesystem::path& path, const lda_model& m,
                       const corpus& corp) {
    nlohmann::json j;
    j["config"] = {{"topics", m.config.topics}, {"alpha", m.config.alpha},
                   {"beta", m.config.beta},     {"sweeps", m.config.sweeps},
                   {"seed", m.config.seed}};
    j["vocabulary"] = corp.vocabulary;
    j["doc_ids"] = corp.doc_ids;
    auto& dates = j["doc_dates"] = nlohmann::json::array();
    for (const auto& d : corp.doc_dates)
        dates.push_back(d ? nlohmann::json(format_date(*d)) : nlohmann::json(nullptr));
    j["documents"] = corp.documents;
    j["assignments"] = m.assignments;
    write_file(path, j.dump());
}

inline std::pair<lda_model, corpus> load_model(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    corpus corp;
    corp.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
    corp.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    for (const auto& d : j.at("doc_dates")) {
        if (d.is_null()) corp.doc_dates.push_back(std::nullopt);
        else corp.doc_dates.push_back(parse_date(d.get<std::string>()));
    }
    corp.documents = j.at("documents").get<std::vector<std::vector<int>>>();

    lda_model m;
    const auto& c = j.at("config");
    m.config.topics = c.at("topics").get<int>();
    m.config.alpha = c.at("alpha").get<double>();
    m.config.beta = c.at("beta").get<double>();
    m.config.sweeps = c.at("sweeps").get<int>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.vocab_size = static_cast<int>(corp.vocabulary.size());
    m.assignments = j.at("assignments").get<std::vector<std::vector<int>>>();

    const int K = m.config.topics;
    m.doc_topic.assign(corp.documents.size(), std::vector<int>(K, 0));
    m.topic_word.assign(K, std::vector<int>(m.vocab_size, 0));
    m.topic_total.assign(K, 0);
    for (size_t d = 0; d < corp.documents.size(); ++d) {
        if (m.assignments[d].size() != corp.documents[d].size())
            throw io_error("model file assignments do not match documents");
        for (size_t i = 0; i < corp.documents[d].size(); ++i) {
            int k = m.assignments[d][i];
            if (k < 0 || k >= K) throw io_error("model file has out-of-range topic");
            ++m.doc_topic[d][k];
            ++m.topic_word[k][corp.documents[d][i]];
            ++m.topic_total[k];
        }
    }
    return {std::move(m), std::move(corp)};
}

inline std::string top_terms_tsv(const lda_model& m, const corpus& corp, int n) {
    std::string out = "topic\tterm\tphi\n";
    for (int k = 0; k < m.config.topics; ++k)
        for (const auto& [term, p] : top_words(m, corp, k, n))
            out += std::to_string(k) + '\t' + term + '\t' + fmt_fixed(p, 6) + '\n';
    return out;
}

inline std::string doc_topics_tsv(const lda_model& m, const corpus& corp) {
    std::string out = "doc_id\ttopic\ttheta\n";
    for (size_t d = 0; d < corp.documents.size(); ++d) {
        const auto theta = doc_topics(m, d);
        for (int k = 0; k < m.config.topics; ++k)
            out += corp.doc_ids[d] + '\t' + std::to_string(k) + '\t' + fmt_fixed(theta[k], 6) +
                   '\n';
    }
    return out;
}

}  // namespace newsagent
