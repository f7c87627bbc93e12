#pragma once

// Server role: holds encrypted subindexes and answers trapdoors with a ranked top-k.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "lrse/scheme.hpp"

namespace lrse {

class IndexStore {
public:
    explicit IndexStore(std::size_t n = 0) : n_(n) {}

    std::size_t dimension() const noexcept { return n_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<EncryptedSubindex>& entries() const noexcept { return entries_; }

    void add(EncryptedSubindex sub) {
        if (static_cast<std::size_t>(sub.a.size()) != n_ + 2 || static_cast<std::size_t>(sub.b.size()) != n_ + 2) {
            throw SchemeError("subindex length " + std::to_string(sub.a.size()) + " does not match n + 2 = " +
                              std::to_string(n_ + 2));
        }
        if (!ids_.insert(sub.doc_id).second) {
            throw SchemeError("duplicate doc_id " + std::to_string(sub.doc_id) + " in index");
        }
        entries_.push_back(std::move(sub));
    }

    /// Opaque payload reference (e.g. the encrypted file's name) for a document.
    void set_payload(std::uint64_t doc_id, std::string payload) { payloads_[doc_id] = std::move(payload); }

    std::optional<std::string> payload(std::uint64_t doc_id) const {
        auto it = payloads_.find(doc_id);
        if (it == payloads_.end()) return std::nullopt;
        return it->second;
    }

    const std::map<std::uint64_t, std::string>& payloads() const noexcept { return payloads_; }

private:
    std::size_t n_;
    std::vector<EncryptedSubindex> entries_;
    std::unordered_set<std::uint64_t> ids_;
    std::map<std::uint64_t, std::string> payloads_;
};

struct SearchHit {
    std::uint64_t doc_id = 0;
    double score = 0.0;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

using SearchResult = std::vector<SearchHit>;

/// Descending score, ascending doc_id on ties.
inline bool ranks_before(const SearchHit& a, const SearchHit& b) noexcept {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
}

/// Top-k of an already-scored list under ranks_before.
inline SearchResult select_top_k(std::vector<SearchHit> hits, std::size_t k) {
    const auto keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), ranks_before);
    hits.resize(keep);
    return hits;
}

inline SearchResult execute_query(const IndexStore& store, const Trapdoor& td, std::size_t k) {
    if (k < 1) throw SchemeError("execute_query: k must be >= 1");
    if (store.empty()) return {};
    if (static_cast<std::size_t>(td.p.size()) != store.dimension() + 2 ||
        static_cast<std::size_t>(td.q.size()) != store.dimension() + 2) {
        throw SchemeError("execute_query: trapdoor length " + std::to_string(td.p.size()) +
                          " does not match index n + 2 = " + std::to_string(store.dimension() + 2));
    }
    std::vector<SearchHit> hits;
    hits.reserve(store.size());
    for (const auto& sub : store.entries()) hits.push_back({sub.doc_id, score(sub, td)});
    return select_top_k(std::move(hits), k);
}

}  // namespace lrse
