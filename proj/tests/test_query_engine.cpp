#include <gtest/gtest.h>

#include <bit>
#include <filesystem>
#include <set>
#include <vector>

#include "lrse/roles.hpp"
#include "lrse/serialization.hpp"
#include "oracles.hpp"

using namespace lrse;

namespace {

/// Subindex whose score against `unit_trapdoor(d)` is exactly `value`.
EncryptedSubindex fixed_score(std::uint64_t id, double value, std::size_t n) {
    const auto d = static_cast<Eigen::Index>(n + 2);
    Vector a = Vector::Zero(d);
    a[0] = value;
    return EncryptedSubindex{id, a, Vector::Zero(d)};
}

Trapdoor unit_trapdoor(std::size_t n) {
    const auto d = static_cast<Eigen::Index>(n + 2);
    Vector p = Vector::Zero(d);
    p[0] = 1.0;
    return Trapdoor{p, Vector::Zero(d), 0};
}

std::vector<std::uint64_t> ids(const SearchResult& r) {
    std::vector<std::uint64_t> out;
    for (const auto& h : r) out.push_back(h.doc_id);
    return out;
}

}  // namespace

TEST(ExecuteQuery, TiesBrokenByAscendingDocId) {
    IndexStore store(2);
    store.add(fixed_score(0, 4.2, 2));
    store.add(fixed_score(1, 1.0, 2));
    store.add(fixed_score(2, 4.2, 2));
    const auto r = execute_query(store, unit_trapdoor(2), 2);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0], (SearchHit{0, 4.2}));
    EXPECT_EQ(r[1], (SearchHit{2, 4.2}));
}

TEST(ExecuteQuery, KBeyondStoreReturnsAllSorted) {
    IndexStore store(1);
    store.add(fixed_score(5, 0.1, 1));
    store.add(fixed_score(3, 0.9, 1));
    store.add(fixed_score(4, 0.5, 1));
    EXPECT_EQ(ids(execute_query(store, unit_trapdoor(1), 10)), (std::vector<std::uint64_t>{3, 4, 5}));
}

TEST(ExecuteQuery, EdgeCasesAndErrors) {
    IndexStore empty(3);
    EXPECT_TRUE(execute_query(empty, unit_trapdoor(3), 5).empty());
    IndexStore store(3);
    store.add(fixed_score(0, 1.0, 3));
    EXPECT_THROW(execute_query(store, unit_trapdoor(3), 0), SchemeError);
    EXPECT_THROW(execute_query(store, unit_trapdoor(4), 1), SchemeError);
    EXPECT_THROW(store.add(fixed_score(0, 2.0, 3)), SchemeError);  // duplicate id
    EXPECT_THROW(store.add(fixed_score(1, 2.0, 4)), SchemeError);  // wrong length
}

TEST(ExecuteQuery, MatchesFullSortOracle) {
    const auto vocab = [] {
        std::vector<std::string> v;
        for (int i = 0; i < 300; ++i) v.push_back("q" + std::to_string(i));
        return v;
    }();
    const auto s = synthesize(16, vocab, 8);
    const auto key = gen_key(16, 8);
    Rng rng(12);
    std::vector<DocumentInput> docs;
    for (std::uint64_t i = 0; i < 100; ++i) {
        DocumentInput d{i, {}, {}};
        for (int k = 0; k < 10; ++k) d.keywords.push_back(vocab[rng() % vocab.size()]);
        docs.push_back(d);
    }
    const auto index = build_index(docs, s, key, IndexOptions{0.05, 3, EmbeddingSide::in});
    const std::vector<std::string> query{vocab[4], vocab[77]};
    const auto td = gen_trapdoor(query, s, key, QueryOptions{5, 0}).trapdoor;

    std::vector<std::pair<std::uint64_t, double>> scored;
    for (const auto& sub : index.entries()) scored.emplace_back(sub.doc_id, sub.a.dot(td.p) + sub.b.dot(td.q));
    const auto result = execute_query(index, td, 50);
    EXPECT_EQ(ids(result), oracle::rank_ids(scored, 50));
    for (std::size_t i = 1; i < result.size(); ++i) EXPECT_GE(result[i - 1].score, result[i].score);
}

// --- serialization -----------------------------------------------------------

TEST(Serialization, KeyRoundTripIsBitIdentical) {
    const auto key = gen_key(7, 3);
    const auto bytes = io::serialize_key(key);
    const auto back = io::deserialize_key(bytes);
    EXPECT_EQ(back.n, key.n);
    EXPECT_EQ(back.split_indicator, key.split_indicator);
    EXPECT_EQ(back.m1, key.m1);
    EXPECT_EQ(back.m2, key.m2);
    EXPECT_EQ(back.m1_inv, key.m1_inv);
    EXPECT_EQ(back.m2_inv, key.m2_inv);
    EXPECT_EQ(io::serialize_key(back), bytes);
}

TEST(Serialization, HeaderLayout) {
    const auto key = gen_key(2, 1);
    const auto bytes = io::serialize_key(key);
    ASSERT_EQ(bytes.size(), io::kHeaderSize + 4 + 2 * 16 * 8 + io::kTrailerSize);
    EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LRSE");
    EXPECT_EQ(bytes[4], 1);  // version, little-endian
    EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
    EXPECT_EQ(bytes[8], 1);  // record type: key
    EXPECT_EQ(bytes[9], 2);  // n
    EXPECT_EQ(bytes[13], 4); // count = n + 2
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(bytes[io::kHeaderSize + i], key.split_indicator[i]);
    // First scalar of M1, little-endian binary64.
    std::uint64_t raw = 0;
    for (int i = 0; i < 8; ++i) raw |= static_cast<std::uint64_t>(bytes[io::kHeaderSize + 4 + i]) << (8 * i);
    EXPECT_EQ(std::bit_cast<double>(raw), key.m1(0, 0));
}

TEST(Serialization, IndexAndTrapdoorRoundTrip) {
    const std::vector<std::string> vocab{"aa", "bb", "cc", "dd"};
    const auto s = synthesize(4, vocab, 2);
    const auto key = gen_key(4, 2);
    const std::vector<DocumentInput> docs{{10, {"aa", "bb"}, {}}, {3, {"cc"}, {}}};
    const auto index = build_index(docs, s, key, IndexOptions{0.05, 9, EmbeddingSide::in});
    const auto ibytes = io::serialize_index(index);
    const auto iback = io::deserialize_index(ibytes);
    ASSERT_EQ(iback.size(), 2u);
    EXPECT_EQ(iback.entries()[0].doc_id, 10u);
    EXPECT_EQ(iback.entries()[1].a, index.entries()[1].a);
    EXPECT_EQ(io::serialize_index(iback), ibytes);

    const auto td = gen_trapdoor(std::vector<std::string>{"bb"}, s, key, QueryOptions{1, 0}).trapdoor;
    const auto tbytes = io::serialize_trapdoor(td);
    EXPECT_EQ(tbytes.size(), io::kHeaderSize + 2 * 6 * 8 + io::kTrailerSize);
    const auto tback = io::deserialize_trapdoor(tbytes);
    EXPECT_EQ(tback.p, td.p);
    EXPECT_EQ(tback.q, td.q);
}

TEST(Serialization, EmptyIndexRoundTrips) {
    IndexStore empty(5);
    const auto back = io::deserialize_index(io::serialize_index(empty));
    EXPECT_EQ(back.dimension(), 5u);
    EXPECT_TRUE(back.empty());
}

TEST(Serialization, IndexFileSizeIsLinearInDocuments) {
    IndexStore index(100);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        index.add(EncryptedSubindex{i, Vector::Ones(102), Vector::Ones(102)});
    }
    EXPECT_EQ(io::serialize_index(index).size(), io::kHeaderSize + 1000 * (8 + 2 * 102 * 8) + io::kTrailerSize);
}

TEST(Serialization, CorruptionIsDetected) {
    const auto key = gen_key(3, 4);
    const auto good = io::serialize_key(key);
    auto expect_kind = [](io::Bytes bytes, io::FormatErrorKind kind) {
        try {
            io::deserialize_key(bytes);
            ADD_FAILURE() << "no error raised";
        } catch (const io::FormatError& e) {
            EXPECT_EQ(e.kind(), kind) << e.what();
        }
    };
    for (std::size_t pos = io::kHeaderSize; pos + io::kTrailerSize < good.size(); pos += 17) {
        auto bad = good;
        bad[pos] ^= 0x01;
        expect_kind(bad, io::FormatErrorKind::checksum_mismatch);
    }
    auto bad = good;
    bad[0] = 'X';
    expect_kind(bad, io::FormatErrorKind::bad_magic);
    bad = good;
    bad[4] = 2;
    expect_kind(bad, io::FormatErrorKind::version_mismatch);
    bad = good;
    bad[8] = 3;
    expect_kind(bad, io::FormatErrorKind::wrong_record_type);
    bad = good;
    bad.resize(bad.size() - 9);
    expect_kind(bad, io::FormatErrorKind::truncated);
    bad = good;
    bad.insert(bad.end() - 4, 0);
    expect_kind(bad, io::FormatErrorKind::dimension_mismatch);
    bad = good;
    bad[9] = 9;  // n no longer matches count
    expect_kind(bad, io::FormatErrorKind::dimension_mismatch);
    expect_kind(io::Bytes(good.begin(), good.begin() + 10), io::FormatErrorKind::truncated);
}

TEST(Serialization, RecordTypesAreNotInterchangeable) {
    const auto key = gen_key(3, 4);
    EXPECT_THROW(io::deserialize_index(io::serialize_key(key)), io::FormatError);
    EXPECT_THROW(io::deserialize_trapdoor(io::serialize_key(key)), io::FormatError);
}

TEST(Serialization, PayloadSidecarRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "lrse_payload_test";
    std::filesystem::create_directories(dir);
    IndexStore index(1);
    index.add(EncryptedSubindex{7, Vector::Ones(3), Vector::Ones(3)});
    index.set_payload(7, "doc7.txt");
    const auto path = dir / "idx.lrse";
    io::write_bytes(path, io::serialize_index(index));
    io::write_payload_refs(io::payload_sidecar(path), index);

    auto back = io::deserialize_index(io::read_bytes(path));
    io::read_payload_refs(io::payload_sidecar(path), back);
    EXPECT_EQ(back.payload(7), std::optional<std::string>("doc7.txt"));
    std::filesystem::remove_all(dir);
}
