#pragma once

// Dictionary-based baseline: binary keyword-occurrence vectors of dictionary
// size W pushed through the same extend/split/encrypt pipeline at W + 2.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lrse/query_engine.hpp"
#include "lrse/scheme.hpp"
#include "lrse/text_analysis.hpp"

namespace lrse::mrse {

class Dictionary {
public:
    Dictionary() = default;

    /// Deduplicates and sorts `words`.
    explicit Dictionary(std::vector<std::string> words) : words_(std::move(words)) {
        std::sort(words_.begin(), words_.end());
        words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
        for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
    }

    /// The W terms with the highest document frequency (ties by ascending term), stored sorted.
    static Dictionary top_by_document_frequency(const Corpus& corpus, std::size_t w) {
        std::vector<std::pair<std::string, std::size_t>> terms(corpus.document_frequencies().begin(),
                                                               corpus.document_frequencies().end());
        auto by_df = [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; };
        const auto keep = std::min(w, terms.size());
        std::partial_sort(terms.begin(), terms.begin() + static_cast<std::ptrdiff_t>(keep), terms.end(), by_df);
        std::vector<std::string> words;
        words.reserve(keep);
        for (std::size_t i = 0; i < keep; ++i) words.push_back(std::move(terms[i].first));
        return Dictionary(std::move(words));
    }

    static Dictionary load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read dictionary " + path.string());
        std::vector<std::string> words;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) words.push_back(line);
        }
        return Dictionary(std::move(words));
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write dictionary " + path.string());
        for (const auto& w : words_) out << w << '\n';
    }

    std::size_t size() const noexcept { return words_.size(); }
    const std::vector<std::string>& words() const noexcept { return words_; }

    std::optional<std::size_t> position(const std::string& word) const {
        auto it = index_.find(word);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Component w is 1 iff dictionary word w occurs in `keywords`.
inline Vector binary_vector(std::span<const std::string> keywords, const Dictionary& dict) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(dict.size()));
    for (const auto& k : keywords) {
        if (auto pos = dict.position(k)) v[static_cast<Eigen::Index>(*pos)] = 1.0;
    }
    return v;
}

inline Vector binary_doc_vector(const KeywordSet& keywords, const Dictionary& dict) {
    const auto words = keywords.words();
    return binary_vector(words, dict);
}

/// Blinded score of one document against one query through the full pipeline:
/// r * (|doc & query| + eps) + t.
inline double mrse_score(const Vector& doc_vec, const Vector& query_vec, const SecretKey& key, double sigma,
                         BlindingSecret blinding, Rng& rng) {
    if (doc_vec.size() != query_vec.size() || static_cast<std::size_t>(doc_vec.size()) != key.n) {
        throw SchemeError("mrse_score: vector length must equal the dictionary size of the key");
    }
    const auto plain = extend_index_vector(0, doc_vec, sigma, rng);
    const auto sub = encrypt_index(plain, key, rng);
    const auto td = encrypt_trapdoor(extend_query_vector(query_vec, blinding), key, rng);
    return score(sub, td);
}

struct MrseDocument {
    std::uint64_t doc_id = 0;
    std::vector<std::string> keywords;
};

/// Encrypted baseline index; document streams derive from (seed, doc_id) as in the main scheme.
inline IndexStore build_index(std::span<const MrseDocument> docs, const Dictionary& dict, const SecretKey& key,
                              double sigma, std::uint64_t seed) {
    if (key.n != dict.size()) throw SchemeError("baseline key dimension must equal the dictionary size");
    IndexStore index(key.n);
    for (const auto& doc : docs) {
        Rng rng = make_stream(seed, StreamTag::document, doc.doc_id);
        const auto plain = extend_index_vector(doc.doc_id, binary_vector(doc.keywords, dict), sigma, rng);
        index.add(encrypt_index(plain, key, rng));
    }
    return index;
}

inline Trapdoor gen_trapdoor(std::span<const std::string> terms, const Dictionary& dict, const SecretKey& key,
                             std::uint64_t seed, std::uint64_t query_id, BlindingSecret* blinding_out = nullptr) {
    Rng rng = make_stream(seed, StreamTag::trapdoor, query_id);
    const auto blinding = draw_blinding(rng);
    if (blinding_out) *blinding_out = blinding;
    auto td = encrypt_trapdoor(extend_query_vector(binary_vector(terms, dict), blinding), key, rng);
    td.query_id = query_id;
    return td;
}

}  // namespace lrse::mrse
