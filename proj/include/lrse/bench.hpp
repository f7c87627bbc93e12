#pragma once

// Timing harness over synthetic workloads: index build, trapdoor generation
// and query execution for the embedding scheme and the dictionary baseline,
// swept over vector dimension, document count and query length.

#include <chrono>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lrse/embedding_store.hpp"
#include "lrse/mrse.hpp"
#include "lrse/roles.hpp"

namespace lrse::bench {

struct Row {
    std::string scheme;
    std::string phase;
    std::size_t dimension = 0;
    std::size_t doc_count = 0;
    double seconds = 0.0;
};

inline std::string csv_header() { return "scheme,phase,dimension,doc_count,seconds"; }

inline std::string to_csv(const Row& r) {
    std::ostringstream os;
    os << r.scheme << ',' << r.phase << ',' << r.dimension << ',' << r.doc_count << ',' << std::setprecision(6)
       << std::scientific << r.seconds;
    return os.str();
}

template <typename F>
double time_seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::vector<std::string> make_vocabulary(std::size_t size, const std::string& prefix = "w") {
    std::vector<std::string> out;
    out.reserve(size);
    for (std::size_t i = 0; i < size; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

/// `count` distinct words drawn uniformly from `vocab`.
inline std::vector<std::string> sample_words(const std::vector<std::string>& vocab, std::size_t count, Rng& rng) {
    std::vector<std::string> out;
    std::sample(vocab.begin(), vocab.end(), std::back_inserter(out), std::min(count, vocab.size()), rng);
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

struct Workload {
    std::vector<std::string> vocab;
    std::vector<DocumentInput> docs;
    std::vector<std::vector<std::string>> queries;
};

inline Workload make_workload(std::size_t vocab_size, std::size_t doc_count, std::size_t keywords_per_doc,
                              std::size_t query_count, std::size_t query_keywords, std::uint64_t seed) {
    Workload w;
    w.vocab = make_vocabulary(vocab_size);
    Rng rng = make_stream(seed, StreamTag::workload);
    w.docs.reserve(doc_count);
    for (std::size_t i = 0; i < doc_count; ++i) {
        w.docs.push_back(DocumentInput{i, sample_words(w.vocab, keywords_per_doc, rng), {}});
    }
    for (std::size_t i = 0; i < query_count; ++i) w.queries.push_back(sample_words(w.vocab, query_keywords, rng));
    return w;
}

struct Config {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> doc_counts{1000};
    std::vector<std::size_t> query_keyword_counts;  // extra trapdoor sweep; empty to skip
    std::size_t keywords_per_doc = 25;
    std::size_t query_keywords = 10;
    std::size_t lrse_vocab = 5000;
    std::size_t queries = 20;
    std::size_t k = 50;
    double sigma = kDefaultSigma;
    std::uint64_t seed = 1;
};

/// Average seconds per trapdoor over `reps` generations cycling through `queries`.
inline double time_trapdoor(const std::vector<std::vector<std::string>>& queries, const EmbeddingStore& store,
                            const SecretKey& key, std::size_t reps, std::uint64_t seed) {
    double sink = 0.0;
    const double total = time_seconds([&] {
        for (std::size_t i = 0; i < reps; ++i) {
            QueryOptions qo{seed, i, EmbeddingSide::in, false};
            sink += gen_trapdoor(queries[i % queries.size()], store, key, qo).trapdoor.p[0];
        }
    });
    volatile double keep = sink;
    (void)keep;
    return total / static_cast<double>(reps);
}

inline double time_trapdoor(const std::vector<std::vector<std::string>>& queries, const mrse::Dictionary& dict,
                            const SecretKey& key, std::size_t reps, std::uint64_t seed) {
    double sink = 0.0;
    const double total = time_seconds([&] {
        for (std::size_t i = 0; i < reps; ++i) sink += mrse::gen_trapdoor(queries[i % queries.size()], dict, key, seed, i).p[0];
    });
    volatile double keep = sink;
    (void)keep;
    return total / static_cast<double>(reps);
}

inline double time_queries(const IndexStore& index, const std::vector<Trapdoor>& tds, std::size_t k) {
    std::size_t sink = 0;
    const double total = time_seconds([&] {
        for (const auto& td : tds) sink += execute_query(index, td, k).size();
    });
    volatile std::size_t keep = sink;
    (void)keep;
    return total / static_cast<double>(tds.size());
}

/// Rows for the embedding scheme at each dimension in cfg.dims.
inline std::vector<Row> run_lrse(const Config& cfg) {
    std::vector<Row> rows;
    for (auto n : cfg.dims) {
        std::size_t max_docs = 0;
        for (auto c : cfg.doc_counts) max_docs = std::max(max_docs, c);
        auto w = make_workload(cfg.lrse_vocab, max_docs, cfg.keywords_per_doc, cfg.queries, cfg.query_keywords, cfg.seed);
        const auto store = synthesize(n, w.vocab, cfg.seed);

        SecretKey key;
        rows.push_back({"lrse", "keygen", n, 0, time_seconds([&] { key = gen_key(n, cfg.seed); })});

        for (auto count : cfg.doc_counts) {
            std::span<const DocumentInput> docs(w.docs.data(), count);
            IndexStore index;
            const IndexOptions opt{cfg.sigma, cfg.seed, EmbeddingSide::in};
            rows.push_back({"lrse", "index", n, count, time_seconds([&] { index = build_index(docs, store, key, opt); })});

            std::vector<Trapdoor> tds;
            for (std::size_t i = 0; i < w.queries.size(); ++i) {
                tds.push_back(gen_trapdoor(w.queries[i], store, key, QueryOptions{cfg.seed, i}).trapdoor);
            }
            rows.push_back({"lrse", "query", n, count, time_queries(index, tds, cfg.k)});
        }
        rows.push_back({"lrse", "trapdoor", n, 0, time_trapdoor(w.queries, store, key, 2000, cfg.seed)});

        for (auto qk : cfg.query_keyword_counts) {
            Rng rng = make_stream(cfg.seed, StreamTag::workload, qk);
            std::vector<std::vector<std::string>> qs;
            for (std::size_t i = 0; i < cfg.queries; ++i) qs.push_back(sample_words(w.vocab, qk, rng));
            rows.push_back({"lrse", "trapdoor_kw" + std::to_string(qk), n, 0, time_trapdoor(qs, store, key, 2000, cfg.seed)});
        }
    }
    return rows;
}

/// Rows for the dictionary baseline at each dictionary size W in cfg.dims.
inline std::vector<Row> run_mrse(const Config& cfg) {
    std::vector<Row> rows;
    for (auto wsize : cfg.dims) {
        std::size_t max_docs = 0;
        for (auto c : cfg.doc_counts) max_docs = std::max(max_docs, c);
        auto w = make_workload(wsize, max_docs, cfg.keywords_per_doc, cfg.queries, cfg.query_keywords, cfg.seed);
        const mrse::Dictionary dict(w.vocab);
        std::vector<mrse::MrseDocument> docs;
        docs.reserve(w.docs.size());
        for (const auto& d : w.docs) docs.push_back({d.doc_id, d.keywords});

        SecretKey key;
        rows.push_back({"mrse", "keygen", wsize, 0, time_seconds([&] { key = gen_key(wsize, cfg.seed); })});

        for (auto count : cfg.doc_counts) {
            std::span<const mrse::MrseDocument> subset(docs.data(), count);
            IndexStore index;
            rows.push_back({"mrse", "index", wsize, count,
                            time_seconds([&] { index = mrse::build_index(subset, dict, key, cfg.sigma, cfg.seed); })});
            std::vector<Trapdoor> tds;
            for (std::size_t i = 0; i < w.queries.size(); ++i) tds.push_back(mrse::gen_trapdoor(w.queries[i], dict, key, cfg.seed, i));
            rows.push_back({"mrse", "query", wsize, count, time_queries(index, tds, cfg.k)});
        }
        rows.push_back({"mrse", "trapdoor", wsize, 0, time_trapdoor(w.queries, dict, key, 20, cfg.seed)});

        for (auto qk : cfg.query_keyword_counts) {
            Rng rng = make_stream(cfg.seed, StreamTag::workload, qk);
            std::vector<std::vector<std::string>> qs;
            for (std::size_t i = 0; i < cfg.queries; ++i) qs.push_back(sample_words(w.vocab, qk, rng));
            rows.push_back({"mrse", "trapdoor_kw" + std::to_string(qk), wsize, 0, time_trapdoor(qs, dict, key, 20, cfg.seed)});
        }
    }
    return rows;
}

}  // namespace lrse::bench
