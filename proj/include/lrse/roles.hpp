#pragma once

// Owner and user roles: turn keyword sets into an encrypted index, and query
// terms into a trapdoor. Every document gets its own random stream derived
// from (seed, doc_id), so results do not depend on processing order.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrse/query_engine.hpp"
#include "lrse/scheme.hpp"

namespace lrse {

inline constexpr double kDefaultSigma = 0.05;

struct DocumentInput {
    std::uint64_t doc_id = 0;
    std::vector<std::string> keywords;
    std::string payload;  // opaque reference; empty for none
};

struct IndexOptions {
    double sigma = kDefaultSigma;
    std::uint64_t seed = 0;
    EmbeddingSide doc_side = EmbeddingSide::in;
};

struct IndexReport {
    std::size_t indexed = 0;
    std::size_t unindexable = 0;       // no resolvable keyword; stored with a zero embedding
    std::size_t missing_keywords = 0;  // keyword lookups that missed
    EmbeddingSide side_used = EmbeddingSide::in;
    std::vector<PlainIndexVector> plain;  // filled only when requested
};

/// Plain (n+2)-vector for one document, drawing eps from the document stream.
inline PlainIndexVector plain_index_vector(const DocumentInput& doc, const EmbeddingStore& store, const IndexOptions& opt,
                                           Rng& rng, IndexReport* report = nullptr) {
    Vector d;
    try {
        auto e = doc_embedding(doc.keywords, store, opt.doc_side);
        if (report) {
            report->missing_keywords += e.missing;
            report->side_used = e.side;
        }
        d = std::move(e.vector);
    } catch (const UnresolvableError&) {
        if (report) {
            ++report->unindexable;
            const auto side = store.resolve(opt.doc_side);
            for (const auto& w : doc.keywords) report->missing_keywords += store.lookup(w, side) ? 0 : 1;
        }
        d = Vector::Zero(static_cast<Eigen::Index>(store.dimension()));
    }
    return extend_index_vector(doc.doc_id, d, opt.sigma, rng);
}

inline IndexStore build_index(std::span<const DocumentInput> docs, const EmbeddingStore& store, const SecretKey& key,
                              const IndexOptions& opt, IndexReport* report = nullptr, bool keep_plain = false) {
    if (store.dimension() != key.n) {
        throw SchemeError("embedding dimension " + std::to_string(store.dimension()) + " does not match key n = " +
                          std::to_string(key.n));
    }
    IndexStore index(key.n);
    if (report) report->side_used = store.resolve(opt.doc_side);
    for (const auto& doc : docs) {
        Rng rng = make_stream(opt.seed, StreamTag::document, doc.doc_id);
        auto plain = plain_index_vector(doc, store, opt, rng, report);
        index.add(encrypt_index(plain, key, rng));
        if (!doc.payload.empty()) index.set_payload(doc.doc_id, doc.payload);
        if (report) {
            ++report->indexed;
            if (keep_plain) report->plain.push_back(std::move(plain));
        }
    }
    return index;
}

struct QueryOptions {
    std::uint64_t seed = 0;
    std::uint64_t query_id = 0;
    EmbeddingSide query_side = EmbeddingSide::in;
    bool normalize_query = false;
};

struct TrapdoorBundle {
    Trapdoor trapdoor;
    BlindingSecret blinding;  // stays with the querier
    std::size_t missing_terms = 0;
};

/// Builds a trapdoor from an already aggregated query vector.
inline TrapdoorBundle make_trapdoor(const Vector& query, const SecretKey& key, const QueryOptions& opt) {
    Rng rng = make_stream(opt.seed, StreamTag::trapdoor, opt.query_id);
    TrapdoorBundle out;
    out.blinding = draw_blinding(rng);
    out.trapdoor = encrypt_trapdoor(extend_query_vector(query, out.blinding), key, rng);
    out.trapdoor.query_id = opt.query_id;
    return out;
}

inline TrapdoorBundle gen_trapdoor(std::span<const std::string> terms, const EmbeddingStore& store, const SecretKey& key,
                                   const QueryOptions& opt) {
    if (store.dimension() != key.n) throw SchemeError("embedding dimension does not match key");
    auto q = query_embedding(terms, store, opt.query_side, opt.normalize_query);
    auto out = make_trapdoor(q.vector, key, opt);
    out.missing_terms = q.missing;
    return out;
}

/// Recovers DESM + eps from a blinded score.
inline double unblind(double blinded, BlindingSecret b) { return (blinded - b.t) / b.r; }

}  // namespace lrse
