#include <gtest/gtest.h>

#include <sstream>
#include <string>
#include <vector>

#include "lrse/embedding_store.hpp"
#include "oracles.hpp"

using namespace lrse;

namespace {

EmbeddingStore parse(const std::string& text, LoadOptions opt = {}) {
    std::istringstream in(text);
    return EmbeddingStore::read_text(in, opt);
}

std::vector<double> as_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(EmbeddingStore, LoadsHeaderAndVectors) {
    const auto store = parse("2 3\na 1 0 0\nb 0 1 0");
    EXPECT_EQ(store.dimension(), 3u);
    EXPECT_EQ(store.size(), 2u);
    EXPECT_FALSE(store.dual_available());
    EXPECT_EQ(as_vec(*store.lookup("a", EmbeddingSide::in)), (std::vector<double>{1, 0, 0}));
}

TEST(EmbeddingStore, MissIsNotAnError) {
    const auto store = parse("2 3\na 1 0 0\nb 0 1 0");
    EXPECT_FALSE(store.lookup("zzz", EmbeddingSide::in).has_value());
}

TEST(EmbeddingStore, RejectsZeroVector) {
    EXPECT_THROW(parse("1 3\na 0 0 0"), EmbeddingError);
}

TEST(EmbeddingStore, RejectsMalformedInput) {
    EXPECT_THROW(parse("two 3\na 1 0 0"), EmbeddingError);
    EXPECT_THROW(parse("1\na 1 0 0"), EmbeddingError);
    EXPECT_THROW(parse("1 0\na"), EmbeddingError);
    EXPECT_THROW(parse("1 -2\na 1 1"), EmbeddingError);
    EXPECT_THROW(parse("1 3\na 1 0"), EmbeddingError);
    EXPECT_THROW(parse("1 3\na 1 0 0 4"), EmbeddingError);
    EXPECT_THROW(parse("1 3\na 1 x 0"), EmbeddingError);
    EXPECT_THROW(parse("2 3\na 1 0 0"), EmbeddingError);            // truncated
    EXPECT_THROW(parse("1 3\na 1 0 0\nb 0 1 0"), EmbeddingError);   // extra row
    EXPECT_THROW(parse(""), EmbeddingError);
}

TEST(EmbeddingStore, CaseSensitiveByDefault) {
    const auto store = parse("2 2\nJava 1 0\njava 0 1");
    EXPECT_EQ(as_vec(*store.lookup("Java", EmbeddingSide::in)), (std::vector<double>{1, 0}));
    EXPECT_EQ(as_vec(*store.lookup("java", EmbeddingSide::in)), (std::vector<double>{0, 1}));
    EXPECT_EQ(store.duplicate_count(), 0u);
}

TEST(EmbeddingStore, LowercaseFoldsAndKeepsFirstDuplicate) {
    const auto store = parse("2 2\nJava 1 0\njava 0 1", LoadOptions{true});
    EXPECT_EQ(store.size(), 1u);
    EXPECT_EQ(store.duplicate_count(), 1u);
    EXPECT_EQ(as_vec(*store.lookup("JAVA", EmbeddingSide::in)), (std::vector<double>{1, 0}));
}

TEST(EmbeddingStore, DuplicatesFirstWins) {
    const auto store = parse("3 2\na 1 0\nb 0 1\na 5 5");
    EXPECT_EQ(store.size(), 2u);
    EXPECT_EQ(store.duplicate_count(), 1u);
    EXPECT_EQ(as_vec(*store.lookup("a", EmbeddingSide::in)), (std::vector<double>{1, 0}));
}

TEST(EmbeddingStore, OutSideRequiresDualVectors) {
    auto store = parse("1 2\na 1 0");
    EXPECT_THROW(store.lookup("a", EmbeddingSide::out), EmbeddingError);
    EXPECT_EQ(store.resolve(EmbeddingSide::out), EmbeddingSide::in);

    std::istringstream out("1 2\na 0 3");
    store.read_out_vectors(out);
    EXPECT_TRUE(store.dual_available());
    EXPECT_EQ(as_vec(*store.lookup("a", EmbeddingSide::out)), (std::vector<double>{0, 3}));
    EXPECT_EQ(store.resolve(EmbeddingSide::out), EmbeddingSide::out);
}

TEST(EmbeddingStore, OutDimensionMustMatch) {
    auto store = parse("1 2\na 1 0");
    std::istringstream out("1 3\na 0 3 1");
    EXPECT_THROW(store.read_out_vectors(out), EmbeddingError);
}

TEST(EmbeddingStore, LookupMatchesIndependentlyReadLine) {
    // 50 words at n = 100; word17 sits on line 18 of the file.
    const auto vocab = [] {
        std::vector<std::string> v;
        for (int i = 0; i < 50; ++i) v.push_back("word" + std::to_string(i));
        return v;
    }();
    const auto generated = synthesize(100, vocab, 3);
    std::ostringstream file;
    write_text(file, generated);
    const std::string text = file.str();

    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);  // header
    for (int i = 0; i < 18; ++i) std::getline(lines, line);
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    ASSERT_EQ(word, "word17");
    std::vector<double> expected;
    for (double x; fields >> x;) expected.push_back(x);
    ASSERT_EQ(expected.size(), 100u);

    const auto loaded = parse(text);
    EXPECT_EQ(as_vec(*loaded.lookup("word17", EmbeddingSide::in)), expected);
}

TEST(EmbeddingStore, RoundTripIsExactOverRandomFiles) {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 1 + rng() % 8;
        std::vector<std::string> vocab;
        for (std::size_t i = 0, count = 1 + rng() % 30; i < count; ++i) vocab.push_back("t" + std::to_string(rng() % 1000));
        std::sort(vocab.begin(), vocab.end());
        vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());

        const auto original = synthesize(n, vocab, rng());
        std::ostringstream os;
        write_text(os, original);
        const auto back = parse(os.str());
        ASSERT_EQ(back.size(), original.size());
        for (const auto& w : vocab) {
            const auto a = *original.lookup(w, EmbeddingSide::in);
            const auto b = *back.lookup(w, EmbeddingSide::in);
            ASSERT_EQ(a.size(), n);
            ASSERT_EQ(b.size(), n);
            EXPECT_EQ(as_vec(a), as_vec(b)) << w;
        }
    }
}

TEST(Synthesize, DeterministicPerSeed) {
    const std::vector<std::string> vocab{"a", "b"};
    const auto x = synthesize(4, vocab, 7);
    const auto y = synthesize(4, vocab, 7);
    const auto z = synthesize(4, vocab, 8);
    for (const auto& w : vocab) {
        EXPECT_EQ(as_vec(*x.lookup(w, EmbeddingSide::in)), as_vec(*y.lookup(w, EmbeddingSide::in)));
        EXPECT_NE(as_vec(*x.lookup(w, EmbeddingSide::in)), as_vec(*z.lookup(w, EmbeddingSide::in)));
    }
}

TEST(Synthesize, PerWordStreamIndependentOfVocabulary) {
    const std::vector<std::string> small{"b"};
    const std::vector<std::string> large{"a", "b", "c"};
    EXPECT_EQ(as_vec(*synthesize(5, small, 3).lookup("b", EmbeddingSide::in)),
              as_vec(*synthesize(5, large, 3).lookup("b", EmbeddingSide::in)));
}

TEST(Synthesize, RejectsBadArguments) {
    const std::vector<std::string> vocab{"a"};
    EXPECT_THROW(synthesize(0, vocab, 7), EmbeddingError);
    EXPECT_THROW(synthesize(3, std::vector<std::string>{}, 7), EmbeddingError);
}

TEST(Synthesize, DualVectorsDifferFromIn) {
    const std::vector<std::string> vocab{"a", "b"};
    const auto s = synthesize(6, vocab, 1, true);
    ASSERT_TRUE(s.dual_available());
    EXPECT_NE(as_vec(*s.lookup("a", EmbeddingSide::in)), as_vec(*s.lookup("a", EmbeddingSide::out)));
}
