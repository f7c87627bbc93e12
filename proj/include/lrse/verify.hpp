#pragma once

// Self-checks behind `lrse verify`: each returns pass/fail plus a one-line detail.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lrse/bench.hpp"
#include "lrse/mrse.hpp"
#include "lrse/roles.hpp"
#include "lrse/serialization.hpp"

namespace lrse::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Options {
    std::uint64_t seed = 1;
    std::size_t n = 100;
    std::size_t trials = 200;
};

/// Encrypted score against r * (DESM + eps) + t from the plaintext route.
inline CheckResult score_identity(const Options& o) {
    const auto vocab = bench::make_vocabulary(500);
    const auto store = synthesize(o.n, vocab, o.seed);
    Rng rng = make_stream(o.seed, StreamTag::workload, 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < o.trials; ++i) {
        const auto key = gen_key(o.n, derive_seed(o.seed, StreamTag::workload, 100 + i));
        const DocumentInput doc{i, bench::sample_words(vocab, 25, rng), {}};
        const auto terms = bench::sample_words(vocab, 1 + i % 5, rng);
        IndexReport report;
        const IndexOptions io{0.05, o.seed + i, EmbeddingSide::in};
        const auto index = build_index(std::span(&doc, 1), store, key, io, &report, true);
        const auto bundle = gen_trapdoor(terms, store, key, QueryOptions{o.seed + i, i});
        const double got = score(index.entries()[0], bundle.trapdoor);
        const double desm = desm_plain(doc.keywords, terms, store, Sides{});
        const double want = bundle.blinding.r * (desm + report.plain[0].epsilon) + bundle.blinding.t;
        worst = std::max(worst, std::abs(got - want) / (1.0 + std::abs(got)));
    }
    std::ostringstream os;
    os << o.trials << " triples, worst relative error " << worst;
    return {"score_identity", worst <= 1e-8, os.str()};
}

/// With sigma = 0 the encrypted ranking equals the plaintext DESM ranking.
inline CheckResult zero_noise_equivalence(const Options& o) {
    const auto w = bench::make_workload(500, 100, 25, 20, 3, o.seed);
    const auto store = synthesize(o.n, w.vocab, o.seed);
    const auto key = gen_key(o.n, o.seed);
    const auto index = build_index(w.docs, store, key, IndexOptions{0.0, o.seed, EmbeddingSide::in});
    std::size_t mismatches = 0;
    for (std::size_t qi = 0; qi < w.queries.size(); ++qi) {
        std::vector<SearchHit> plain;
        for (const auto& d : w.docs) plain.push_back({d.doc_id, desm_plain(d.keywords, w.queries[qi], store, Sides{})});
        const auto expect = select_top_k(plain, 50);
        const auto got = execute_query(index, gen_trapdoor(w.queries[qi], store, key, QueryOptions{o.seed, qi}).trapdoor, 50);
        bool same = expect.size() == got.size();
        for (std::size_t i = 0; same && i < got.size(); ++i) same = expect[i].doc_id == got[i].doc_id;
        if (!same) ++mismatches;
    }
    return {"zero_noise_equivalence", mismatches == 0, std::to_string(mismatches) + " of 20 rankings differ"};
}

/// Independent blindings of one query give distinct trapdoors and one ranking.
inline CheckResult reblinding_invariance(const Options& o) {
    const auto w = bench::make_workload(500, 100, 25, 1, 3, o.seed);
    const auto store = synthesize(o.n, w.vocab, o.seed);
    const auto key = gen_key(o.n, o.seed);
    const auto index = build_index(w.docs, store, key, IndexOptions{0.05, o.seed, EmbeddingSide::in});
    std::set<io::Bytes> trapdoors;
    std::set<std::vector<std::uint64_t>> rankings;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const auto td = gen_trapdoor(w.queries[0], store, key, QueryOptions{o.seed + 1000 + i, 0}).trapdoor;
        trapdoors.insert(io::serialize_trapdoor(td));
        std::vector<std::uint64_t> ids;
        for (const auto& h : execute_query(index, td, 100)) ids.push_back(h.doc_id);
        rankings.insert(ids);
    }
    std::ostringstream os;
    os << trapdoors.size() << " distinct trapdoors, " << rankings.size() << " distinct rankings";
    return {"reblinding_invariance", trapdoors.size() == 20 && rankings.size() == 1, os.str()};
}

/// (M^T a).(M^-1 b) == a.b for conditioned M.
inline CheckResult knn_algebra(const Options& o) {
    double worst = 0.0;
    for (Eigen::Index d : {Eigen::Index{6}, static_cast<Eigen::Index>(o.n + 2)}) {
        for (std::size_t i = 0; i < o.trials; ++i) {
            auto m = linalg::random_invertible_with_inverse(d, derive_seed(o.seed, StreamTag::workload, 7000 + i));
            Rng rng = make_stream(o.seed, StreamTag::workload, 9000 + i);
            std::normal_distribution<double> normal;
            Vector a(d), b(d);
            for (Eigen::Index k = 0; k < d; ++k) {
                a[k] = normal(rng);
                b[k] = normal(rng);
            }
            a.normalize();
            b.normalize();
            const double got = linalg::mat_vec_T(m.matrix, a).dot(linalg::mat_vec(m.inverse, b));
            worst = std::max(worst, std::abs(got - a.dot(b)));
        }
    }
    std::ostringstream os;
    os << 2 * o.trials << " instances, worst error " << worst;
    return {"knn_algebra", worst <= 1e-8, os.str()};
}

/// Baseline score with identity blinding equals the intersection size.
inline CheckResult baseline_intersection(const Options& o) {
    const mrse::Dictionary dict(bench::make_vocabulary(8));
    const auto key = gen_key(dict.size(), o.seed);
    Rng rng = make_stream(o.seed, StreamTag::workload, 3);
    std::size_t failures = 0;
    const std::size_t subsets = std::size_t{1} << dict.size();
    for (std::size_t qmask = 0; qmask < subsets; qmask += 7) {
        for (std::size_t dmask = 0; dmask < subsets; dmask += 5) {
            Vector dv = Vector::Zero(static_cast<Eigen::Index>(dict.size()));
            Vector qv = dv;
            for (std::size_t b = 0; b < dict.size(); ++b) {
                dv[static_cast<Eigen::Index>(b)] = (dmask >> b) & 1U;
                qv[static_cast<Eigen::Index>(b)] = (qmask >> b) & 1U;
            }
            const double got = mrse::mrse_score(dv, qv, key, 0.0, BlindingSecret{1.0, 0.0}, rng);
            if (std::abs(got - std::popcount(qmask & dmask)) > 1e-8) ++failures;
        }
    }
    return {"baseline_intersection", failures == 0, std::to_string(failures) + " mismatches"};
}

inline CheckResult serialization_round_trip(const Options& o) {
    const auto key = gen_key(8, o.seed);
    const auto back = io::deserialize_key(io::serialize_key(key));
    bool ok = back.split_indicator == key.split_indicator && back.m1 == key.m1 && back.m2 == key.m2 &&
              back.m1_inv == key.m1_inv && back.m2_inv == key.m2_inv;
    auto bytes = io::serialize_key(key);
    bytes[io::kHeaderSize + 3] ^= 0x10;
    try {
        io::deserialize_key(bytes);
        ok = false;
    } catch (const io::FormatError& e) {
        ok = ok && e.kind() == io::FormatErrorKind::checksum_mismatch;
    }
    return {"serialization_round_trip", ok, ok ? "key round-trips; corruption detected" : "round-trip or CRC failure"};
}

inline std::vector<CheckResult> run_all(const Options& o) {
    return {score_identity(o),        zero_noise_equivalence(o), reblinding_invariance(o),
            knn_algebra(o),           baseline_intersection(o),  serialization_round_trip(o)};
}

}  // namespace lrse::verify
