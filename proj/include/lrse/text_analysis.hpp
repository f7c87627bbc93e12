#pragma once

// Tokenization and per-document tf-idf keyword extraction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lrse/embedding_store.hpp"

namespace lrse {

inline constexpr std::size_t kDefaultKeywordCount = 25;

struct TokenizeOptions {
    bool lowercase = false;
    std::size_t min_length = 2;
};

/// ASCII letters and digits are word characters, as is any byte >= 0x80 so
/// that UTF-8 sequences stay inside their token. Everything else separates.
inline bool is_word_byte(unsigned char c) noexcept {
    return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c >= 0x80;
}

inline std::vector<std::string> tokenize(std::string_view text, TokenizeOptions options = {}) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
        if (j - i >= options.min_length && j > i) {
            tokens.push_back(options.lowercase ? fold_lower(text.substr(i, j - i)) : std::string(text.substr(i, j - i)));
        }
        i = j;
    }
    return tokens;
}

struct WeightedTerm {
    std::string term;
    double weight = 0.0;
};

struct KeywordSet {
    std::size_t doc_id = 0;
    std::vector<WeightedTerm> terms;  // weight non-increasing

    bool empty() const noexcept { return terms.empty(); }
    std::size_t size() const noexcept { return terms.size(); }

    std::vector<std::string> words() const {
        std::vector<std::string> out;
        out.reserve(terms.size());
        for (const auto& t : terms) out.push_back(t.term);
        return out;
    }
};

class Corpus {
public:
    static Corpus from_token_lists(std::vector<std::vector<std::string>> docs) {
        Corpus c;
        c.docs_ = std::move(docs);
        for (const auto& doc : c.docs_) {
            std::vector<std::string_view> distinct(doc.begin(), doc.end());
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            for (auto term : distinct) ++c.df_[std::string(term)];
        }
        return c;
    }

    static Corpus from_texts(const std::vector<std::string>& texts, TokenizeOptions options = {}) {
        std::vector<std::vector<std::string>> docs;
        docs.reserve(texts.size());
        for (const auto& t : texts) docs.push_back(tokenize(t, options));
        return from_token_lists(std::move(docs));
    }

    std::size_t size() const noexcept { return docs_.size(); }

    const std::vector<std::string>& tokens(std::size_t doc_id) const {
        if (doc_id >= docs_.size()) throw std::out_of_range("doc_id " + std::to_string(doc_id) + " not in corpus");
        return docs_[doc_id];
    }

    std::size_t df(std::string_view term) const {
        auto it = df_.find(std::string(term));
        return it == df_.end() ? 0 : it->second;
    }

    const std::unordered_map<std::string, std::size_t>& document_frequencies() const noexcept { return df_; }

private:
    std::vector<std::vector<std::string>> docs_;
    std::unordered_map<std::string, std::size_t> df_;
};

/// Top-m terms by tf * ln(N / df), ties broken by ascending term. Terms that
/// occur in every document (idf = 0) are used only when nothing else remains.
/// A document without tokens yields an empty set.
inline KeywordSet extract_keywords(const Corpus& corpus, std::size_t doc_id, std::size_t m = kDefaultKeywordCount) {
    if (m == 0) throw std::invalid_argument("extract_keywords: m must be >= 1");
    const auto& tokens = corpus.tokens(doc_id);

    std::unordered_map<std::string_view, std::size_t> tf;
    for (const auto& t : tokens) ++tf[t];

    const double ndocs = static_cast<double>(corpus.size());
    std::vector<WeightedTerm> scored;
    std::vector<WeightedTerm> zero_idf;
    for (const auto& [term, count] : tf) {
        const auto df = corpus.df(term);
        const double idf = std::log(ndocs / static_cast<double>(df));
        WeightedTerm wt{std::string(term), static_cast<double>(count) * idf};
        (df == corpus.size() ? zero_idf : scored).push_back(std::move(wt));
    }
    if (scored.empty()) scored = std::move(zero_idf);

    auto by_rank = [](const WeightedTerm& a, const WeightedTerm& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.term < b.term;
    };
    const auto keep = std::min(m, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(), by_rank);
    scored.resize(keep);
    return KeywordSet{doc_id, std::move(scored)};
}

struct CorpusDirectory {
    Corpus corpus;
    std::vector<std::filesystem::path> files;  // files[doc_id]
};

/// One document per regular file, doc_ids assigned in filename order.
inline CorpusDirectory load_corpus_directory(const std::filesystem::path& dir, TokenizeOptions options = {}) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error("corpus directory not found: " + dir.string());
    CorpusDirectory out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file()) out.files.push_back(entry.path());
    }
    std::sort(out.files.begin(), out.files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    std::vector<std::string> texts;
    texts.reserve(out.files.size());
    for (const auto& f : out.files) {
        std::ifstream in(f, std::ios::binary);
        if (!in) throw std::runtime_error("cannot read " + f.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        texts.push_back(ss.str());
    }
    out.corpus = Corpus::from_texts(texts, options);
    return out;
}

}  // namespace lrse
