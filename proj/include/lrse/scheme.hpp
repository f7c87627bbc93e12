#pragma once

// Key generation, index/trapdoor construction and encrypted scoring for
// embedding-based ranked search under the secure kNN vector-split encryption,
// plus the plaintext DESM score used as the correctness oracle.
//
// Index vector:  (D, eps, 1)        D = normalized centroid of unit keyword vectors
// Query vector:  (r*Q, r, t)        Q = mean of unit query-term vectors
// Encrypted inner product:  r * (D.Q + eps) + t

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lrse/embedding_store.hpp"
#include "lrse/linalg.hpp"
#include "lrse/rng.hpp"
#include "lrse/text_analysis.hpp"

namespace lrse {

using linalg::Matrix;
using linalg::Vector;

class SchemeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when no keyword of a document or query resolves in the embedding store.
class UnresolvableError : public SchemeError {
public:
    using SchemeError::SchemeError;
};

struct SecretKey {
    std::size_t n = 0;                          // embedding dimension; vectors have n + 2 entries
    std::vector<std::uint8_t> split_indicator;  // S, entries in {0, 1}
    Matrix m1, m2;
    Matrix m1_inv, m2_inv;
    std::uint64_t seed = 0;  // audit only; not serialized

    std::size_t order() const noexcept { return n + 2; }
    std::size_t ones() const noexcept {
        std::size_t c = 0;
        for (auto s : split_indicator) c += s;
        return c;
    }
};

/// Builds a key from explicit parts, computing the cached inverses.
inline SecretKey make_key(std::vector<std::uint8_t> split_indicator, Matrix m1, Matrix m2) {
    const auto d = split_indicator.size();
    if (d < 3) throw SchemeError("split indicator must have n + 2 >= 3 entries");
    for (auto s : split_indicator) {
        if (s > 1) throw SchemeError("split indicator entries must be 0 or 1");
    }
    const auto di = static_cast<Eigen::Index>(d);
    if (m1.rows() != di || m1.cols() != di || m2.rows() != di || m2.cols() != di) {
        throw SchemeError("key matrices must be (n+2) x (n+2)");
    }
    SecretKey key;
    key.n = d - 2;
    key.split_indicator = std::move(split_indicator);
    key.m1_inv = linalg::invert(m1);
    key.m2_inv = linalg::invert(m2);
    key.m1 = std::move(m1);
    key.m2 = std::move(m2);
    return key;
}

/// S from a fair coin per entry; M1 and M2 from independent conditioned substreams.
inline SecretKey gen_key(std::size_t n, std::uint64_t seed, double cond_max = linalg::kDefaultCondMax) {
    if (n < 1) throw SchemeError("gen_key: dimension must be >= 1");
    const auto d = n + 2;

    std::vector<std::uint8_t> s(d);
    Rng coin = make_stream(seed, StreamTag::split_indicator);
    std::bernoulli_distribution fair(0.5);
    for (auto& bit : s) bit = fair(coin) ? 1 : 0;

    const auto di = static_cast<Eigen::Index>(d);
    auto m1 = linalg::random_invertible_with_inverse(di, derive_seed(seed, StreamTag::matrix_m1), cond_max);
    auto m2 = linalg::random_invertible_with_inverse(di, derive_seed(seed, StreamTag::matrix_m2), cond_max);

    SecretKey key;
    key.n = n;
    key.split_indicator = std::move(s);
    key.m1 = std::move(m1.matrix);
    key.m1_inv = std::move(m1.inverse);
    key.m2 = std::move(m2.matrix);
    key.m2_inv = std::move(m2.inverse);
    key.seed = seed;
    return key;
}

// ---------------------------------------------------------------------------
// Embedding aggregation

struct EmbeddingSummary {
    Vector vector;
    std::size_t resolved = 0;
    std::size_t missing = 0;
    EmbeddingSide side = EmbeddingSide::in;  // side actually used after fallback
};

namespace detail {

inline EmbeddingSummary sum_unit_vectors(std::span<const std::string> words, const EmbeddingStore& store,
                                         EmbeddingSide requested) {
    EmbeddingSummary out;
    out.side = store.resolve(requested);
    out.vector = Vector::Zero(static_cast<Eigen::Index>(store.dimension()));
    for (const auto& w : words) {
        auto v = store.lookup_scaled(w, out.side);
        if (!v) {
            ++out.missing;
            continue;
        }
        out.vector += v->inverse_norm * Eigen::Map<const Vector>(v->values.data(), static_cast<Eigen::Index>(v->values.size()));
        ++out.resolved;
    }
    return out;
}

}  // namespace detail

/// Normalized centroid of the unit vectors of the resolvable keywords.
/// Missing keywords are skipped and counted.
inline EmbeddingSummary doc_embedding(std::span<const std::string> keywords, const EmbeddingStore& store,
                                      EmbeddingSide side) {
    auto out = detail::sum_unit_vectors(keywords, store, side);
    if (out.resolved == 0) throw UnresolvableError("document has no keyword present in the embedding store");
    out.vector /= static_cast<double>(out.resolved);
    const double norm = out.vector.norm();
    if (norm < 1e-12) throw UnresolvableError("document centroid norm below 1e-12 (keyword vectors cancel)");
    out.vector /= norm;
    return out;
}

inline EmbeddingSummary doc_embedding(const KeywordSet& keywords, const EmbeddingStore& store, EmbeddingSide side) {
    const auto words = keywords.words();
    return doc_embedding(words, store, side);
}

/// Mean of the unit vectors of the resolvable terms. Not re-normalized unless
/// `normalize` is set.
inline EmbeddingSummary query_embedding(std::span<const std::string> terms, const EmbeddingStore& store,
                                        EmbeddingSide side, bool normalize = false) {
    auto out = detail::sum_unit_vectors(terms, store, side);
    if (out.resolved == 0) throw UnresolvableError("query has no term present in the embedding store");
    out.vector /= static_cast<double>(out.resolved);
    if (normalize) {
        const double norm = out.vector.norm();
        if (norm < 1e-12) throw UnresolvableError("query mean norm below 1e-12");
        out.vector /= norm;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plaintext extension

struct PlainIndexVector {
    std::uint64_t doc_id = 0;
    Vector values;  // (D..., eps, 1)
    double epsilon = 0.0;
    double sigma = 0.0;
};

/// Appends eps ~ Normal(0, sigma^2) and a trailing 1.
inline PlainIndexVector extend_index_vector(std::uint64_t doc_id, const Vector& d, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) throw SchemeError("sigma must be >= 0");
    PlainIndexVector out;
    out.doc_id = doc_id;
    out.sigma = sigma;
    out.epsilon = sigma > 0.0 ? std::normal_distribution<double>(0.0, sigma)(rng) : 0.0;
    const auto n = d.size();
    out.values.resize(n + 2);
    out.values.head(n) = d;
    out.values[n] = out.epsilon;
    out.values[n + 1] = 1.0;
    return out;
}

/// Querier-held blinding; r > 0 keeps the server-side order equal to the DESM order.
struct BlindingSecret {
    double r = 1.0;
    double t = 0.0;
};

inline constexpr double kBlindingScaleMin = 1.0;
inline constexpr double kBlindingScaleMax = 10.0;
inline constexpr double kBlindingOffsetBound = 10.0;

/// r ~ U[1, 10), t ~ U[-10, 10).
inline BlindingSecret draw_blinding(Rng& rng) {
    BlindingSecret b;
    b.r = std::uniform_real_distribution<double>(kBlindingScaleMin, kBlindingScaleMax)(rng);
    b.t = std::uniform_real_distribution<double>(-kBlindingOffsetBound, kBlindingOffsetBound)(rng);
    return b;
}

/// (r*q..., r, t)
inline Vector extend_query_vector(const Vector& q, BlindingSecret blinding) {
    if (!(blinding.r > 0.0)) throw SchemeError("blinding scale r must be > 0");
    const auto n = q.size();
    Vector out(n + 2);
    out.head(n) = blinding.r * q;
    out[n] = blinding.r;
    out[n + 1] = blinding.t;
    return out;
}

// ---------------------------------------------------------------------------
// Split and encryption

enum class SplitMode { index, query };

/// Index mode splits where S = 1 and copies where S = 0; query mode is the
/// complement. A split draws v'[m] ~ U[-B, B] with B = max(1, 2 max|v|) and
/// sets v''[m] = v[m] - v'[m].
inline std::pair<Vector, Vector> split(const Vector& v, std::span<const std::uint8_t> s, SplitMode mode, Rng& rng) {
    if (static_cast<std::size_t>(v.size()) != s.size()) {
        throw SchemeError("split: vector length " + std::to_string(v.size()) + " does not match indicator length " +
                          std::to_string(s.size()));
    }
    const std::uint8_t split_on = mode == SplitMode::index ? 1 : 0;
    const double bound = std::max(1.0, 2.0 * (v.size() ? v.cwiseAbs().maxCoeff() : 0.0));
    std::uniform_real_distribution<double> share(-bound, bound);

    std::pair<Vector, Vector> out{v, v};
    for (Eigen::Index m = 0; m < v.size(); ++m) {
        const auto bit = s[static_cast<std::size_t>(m)];
        if (bit > 1) throw SchemeError("split: indicator entries must be 0 or 1");
        if (bit == split_on) {
            out.first[m] = share(rng);
            out.second[m] = v[m] - out.first[m];
        }
    }
    return out;
}

struct EncryptedSubindex {
    std::uint64_t doc_id = 0;
    Vector a;  // M1^T D'
    Vector b;  // M2^T D''
};

struct Trapdoor {
    Vector p;  // M1^-1 Q'
    Vector q;  // M2^-1 Q''
    std::uint64_t query_id = 0;
};

inline EncryptedSubindex encrypt_index(const PlainIndexVector& plain, const SecretKey& key, Rng& rng) {
    if (static_cast<std::size_t>(plain.values.size()) != key.order()) {
        throw SchemeError("encrypt_index: vector length does not match key order");
    }
    auto [lo, hi] = split(plain.values, key.split_indicator, SplitMode::index, rng);
    return EncryptedSubindex{plain.doc_id, linalg::mat_vec_T(key.m1, lo), linalg::mat_vec_T(key.m2, hi)};
}

inline Trapdoor encrypt_trapdoor(const Vector& query_ext, const SecretKey& key, Rng& rng) {
    if (static_cast<std::size_t>(query_ext.size()) != key.order()) {
        throw SchemeError("encrypt_trapdoor: vector length does not match key order");
    }
    auto [lo, hi] = split(query_ext, key.split_indicator, SplitMode::query, rng);
    return Trapdoor{linalg::mat_vec(key.m1_inv, lo), linalg::mat_vec(key.m2_inv, hi), 0};
}

/// a.p + b.q, which equals r (DESM + eps) + t.
inline double score(const EncryptedSubindex& sub, const Trapdoor& td) {
    if (sub.a.size() != td.p.size() || sub.b.size() != td.q.size() || sub.a.size() != sub.b.size()) {
        throw SchemeError("score: subindex and trapdoor dimensions differ");
    }
    return sub.a.dot(td.p) + sub.b.dot(td.q);
}

// ---------------------------------------------------------------------------
// Plaintext oracle

struct Sides {
    EmbeddingSide doc = EmbeddingSide::in;
    EmbeddingSide query = EmbeddingSide::in;
};

/// IN-OUT (doc OUT, query IN) when OUT vectors exist; IN-IN otherwise.
inline Sides default_sides(const EmbeddingStore& store) {
    return Sides{store.dual_available() ? EmbeddingSide::out : EmbeddingSide::in, EmbeddingSide::in};
}

inline double desm_plain(std::span<const std::string> doc_keywords, std::span<const std::string> query_terms,
                         const EmbeddingStore& store, Sides sides, bool normalize_query = false) {
    const auto d = doc_embedding(doc_keywords, store, sides.doc);
    const auto q = query_embedding(query_terms, store, sides.query, normalize_query);
    return d.vector.dot(q.vector);
}

inline double desm_plain(const KeywordSet& doc_keywords, std::span<const std::string> query_terms,
                         const EmbeddingStore& store, Sides sides, bool normalize_query = false) {
    const auto words = doc_keywords.words();
    return desm_plain(words, query_terms, store, sides, normalize_query);
}

}  // namespace lrse
