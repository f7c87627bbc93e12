#pragma once

// Fixed-dimension word vectors in the word2vec text format, with an optional
// second ("OUT") vector space for dual-embedding scoring.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lrse/rng.hpp"

namespace lrse {

enum class EmbeddingSide { in, out };

inline const char* to_string(EmbeddingSide side) { return side == EmbeddingSide::in ? "IN" : "OUT"; }

class EmbeddingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct LoadOptions {
    bool lowercase = false;
};

inline std::string fold_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

namespace detail {

struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) fields.push_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

inline bool parse_double(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace detail

class EmbeddingStore {
public:
    explicit EmbeddingStore(std::size_t dimension, LoadOptions options = {})
        : dim_(dimension), options_(options) {
        if (dimension == 0) throw EmbeddingError("embedding dimension must be positive");
    }

    /// Parses "<count> <dim>" then `count` lines of "word v1 .. vdim".
    static EmbeddingStore read_text(std::istream& in, LoadOptions options = {}) {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!detail::split_ws(line).empty()) break;
        }
        const auto header = detail::split_ws(line);
        long long count = -1;
        long long dim = -1;
        if (header.size() != 2 || !parse_integer(header[0], count) || !parse_integer(header[1], dim) ||
            count < 0) {
            throw EmbeddingError("malformed header on line " + std::to_string(lineno) +
                                 ": expected \"<count> <dim>\"");
        }
        if (dim <= 0) throw EmbeddingError("embedding dimension must be positive, got " + std::to_string(dim));

        EmbeddingStore store(static_cast<std::size_t>(dim), options);
        store.in_.reserve(static_cast<std::size_t>(count), store.dim_);
        store.read_rows(in, store.in_, static_cast<std::size_t>(count), lineno);
        return store;
    }

    static EmbeddingStore load_text(const std::filesystem::path& in_path,
                                    const std::optional<std::filesystem::path>& out_path = std::nullopt,
                                    LoadOptions options = {}) {
        std::ifstream in(in_path);
        if (!in) throw EmbeddingError("cannot open embedding file " + in_path.string());
        auto store = read_text(in, options);
        if (out_path) {
            std::ifstream out(*out_path);
            if (!out) throw EmbeddingError("cannot open OUT embedding file " + out_path->string());
            store.read_out_vectors(out);
        }
        return store;
    }

    /// Attaches OUT vectors from a second word2vec-format stream. Vocabulary order may differ.
    void read_out_vectors(std::istream& in) {
        auto other = read_text(in, options_);
        if (other.dim_ != dim_) {
            throw EmbeddingError("OUT embedding dimension " + std::to_string(other.dim_) +
                                 " does not match IN dimension " + std::to_string(dim_));
        }
        out_ = std::move(other.in_);
    }

    std::size_t dimension() const noexcept { return dim_; }
    bool dual_available() const noexcept { return out_.has_value(); }
    bool lowercase() const noexcept { return options_.lowercase; }

    std::size_t size(EmbeddingSide side = EmbeddingSide::in) const { return table(side).words.size(); }
    std::size_t duplicate_count(EmbeddingSide side = EmbeddingSide::in) const { return table(side).duplicates; }

    /// Exact-match lookup. A miss is std::nullopt; asking for OUT without OUT vectors throws.
    std::optional<std::span<const double>> lookup(std::string_view word, EmbeddingSide side) const {
        const Table& t = table(side);
        auto it = options_.lowercase ? t.index.find(fold_lower(word)) : t.index.find(word);
        if (it == t.index.end()) return std::nullopt;
        return row(t, it->second);
    }

    struct ScaledRow {
        std::span<const double> values;
        double inverse_norm = 1.0;
    };

    /// Like lookup, but also returns 1 / ||v|| computed at load time.
    std::optional<ScaledRow> lookup_scaled(std::string_view word, EmbeddingSide side) const {
        const Table& t = table(side);
        auto it = options_.lowercase ? t.index.find(fold_lower(word)) : t.index.find(word);
        if (it == t.index.end()) return std::nullopt;
        return ScaledRow{row(t, it->second), t.inverse_norms[it->second]};
    }

    /// OUT when requested and available, IN otherwise.
    EmbeddingSide resolve(EmbeddingSide requested) const noexcept {
        return requested == EmbeddingSide::out && dual_available() ? EmbeddingSide::out : EmbeddingSide::in;
    }

    const std::vector<std::string>& words(EmbeddingSide side = EmbeddingSide::in) const { return table(side).words; }

    std::span<const double> vector_at(std::size_t i, EmbeddingSide side = EmbeddingSide::in) const {
        const Table& t = table(side);
        if (i >= t.words.size()) throw EmbeddingError("vector index out of range");
        return row(t, i);
    }

    /// Inserts a vector; returns false (and counts a duplicate) when the word is already present.
    bool insert(std::string_view word, std::span<const double> values, EmbeddingSide side = EmbeddingSide::in) {
        if (side == EmbeddingSide::out && !out_) out_.emplace();
        return insert_into(side == EmbeddingSide::in ? in_ : *out_, word, values);
    }

private:
    struct Table {
        std::vector<std::string> words;
        std::vector<double> data;
        std::vector<double> inverse_norms;
        std::unordered_map<std::string, std::size_t, detail::StringHash, std::equal_to<>> index;
        std::size_t duplicates = 0;

        void reserve(std::size_t count, std::size_t dim) {
            words.reserve(count);
            data.reserve(count * dim);
            inverse_norms.reserve(count);
            index.reserve(count);
        }
    };

    static bool parse_integer(std::string_view text, long long& out) {
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        return ec == std::errc() && ptr == text.data() + text.size();
    }

    std::span<const double> row(const Table& t, std::size_t i) const {
        return std::span<const double>(t.data.data() + i * dim_, dim_);
    }

    const Table& table(EmbeddingSide side) const {
        if (side == EmbeddingSide::in) return in_;
        if (!out_) throw EmbeddingError("OUT vectors requested but the store has IN vectors only");
        return *out_;
    }

    bool insert_into(Table& t, std::string_view word, std::span<const double> values) {
        if (values.size() != dim_) {
            throw EmbeddingError("vector for \"" + std::string(word) + "\" has " + std::to_string(values.size()) +
                                 " components, expected " + std::to_string(dim_));
        }
        double sq = 0.0;
        for (double v : values) {
            if (!std::isfinite(v)) throw EmbeddingError("non-finite component in vector for \"" + std::string(word) + "\"");
            sq += v * v;
        }
        if (sq == 0.0) throw EmbeddingError("zero vector for \"" + std::string(word) + "\"");

        std::string key = options_.lowercase ? fold_lower(word) : std::string(word);
        if (t.index.contains(key)) {
            ++t.duplicates;
            return false;
        }
        t.index.emplace(key, t.words.size());
        t.words.push_back(std::move(key));
        t.data.insert(t.data.end(), values.begin(), values.end());
        t.inverse_norms.push_back(1.0 / std::sqrt(sq));
        return true;
    }

    void read_rows(std::istream& in, Table& t, std::size_t count, std::size_t& lineno) {
        std::string line;
        std::vector<double> values(dim_);
        std::size_t rows = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto fields = detail::split_ws(line);
            if (fields.empty()) continue;
            if (rows == count) {
                throw EmbeddingError("line " + std::to_string(lineno) + ": more vectors than the header count " +
                                     std::to_string(count));
            }
            if (fields.size() != dim_ + 1) {
                throw EmbeddingError("line " + std::to_string(lineno) + ": expected " + std::to_string(dim_) +
                                     " components, got " + std::to_string(fields.size() - 1));
            }
            for (std::size_t k = 0; k < dim_; ++k) {
                if (!detail::parse_double(fields[k + 1], values[k])) {
                    throw EmbeddingError("line " + std::to_string(lineno) + ": bad scalar \"" +
                                         std::string(fields[k + 1]) + "\"");
                }
            }
            try {
                insert_into(t, fields[0], values);
            } catch (const EmbeddingError& e) {
                throw EmbeddingError("line " + std::to_string(lineno) + ": " + e.what());
            }
            ++rows;
        }
        if (rows != count) {
            throw EmbeddingError("truncated file: header declares " + std::to_string(count) + " vectors, found " +
                                 std::to_string(rows));
        }
    }

    std::size_t dim_;
    LoadOptions options_;
    Table in_;
    std::optional<Table> out_;
};

/// Deterministic test fixture: each word's vector comes from its own stream
/// seeded by (seed, word); components are standard normal, redrawn if the
/// norm falls below 1e-9.
inline EmbeddingStore synthesize(std::size_t n, std::span<const std::string> vocab, std::uint64_t seed,
                                 bool with_out = false) {
    if (n == 0) throw EmbeddingError("synthesize: dimension must be >= 1");
    if (vocab.empty()) throw EmbeddingError("synthesize: empty vocabulary");

    EmbeddingStore store(n);
    std::vector<double> v(n);
    auto fill = [&](StreamTag tag, const std::string& word) {
        Rng rng(derive_seed(seed, tag, fnv1a(word)));
        std::normal_distribution<double> normal(0.0, 1.0);
        double sq = 0.0;
        do {
            sq = 0.0;
            for (auto& x : v) {
                x = normal(rng);
                sq += x * x;
            }
        } while (std::sqrt(sq) < 1e-9);
    };
    for (const auto& word : vocab) {
        fill(StreamTag::embedding_in, word);
        store.insert(word, v, EmbeddingSide::in);
        if (with_out) {
            fill(StreamTag::embedding_out, word);
            store.insert(word, v, EmbeddingSide::out);
        }
    }
    return store;
}

/// Writes the IN (or OUT) table in word2vec text format with round-trip precision.
inline void write_text(std::ostream& os, const EmbeddingStore& store, EmbeddingSide side = EmbeddingSide::in) {
    os << store.size(side) << ' ' << store.dimension() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < store.size(side); ++i) {
        os << store.words(side)[i];
        for (double x : store.vector_at(i, side)) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
            os << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        os << '\n';
    }
}

}  // namespace lrse
