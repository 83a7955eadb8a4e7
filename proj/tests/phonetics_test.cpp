#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "test_data.hpp"
#include "voicerelay/phonetics.hpp"

using namespace voicerelay;
using voicerelay::testing::data_path;
using voicerelay::testing::lexicon;

namespace {

// Plain recursive edit distance with memoization; shares nothing with the
// two-row DP under test.
std::size_t recursive_distance(const PhonemeSeq& a, const PhonemeSeq& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == 0) return j;
        if (j == 0) return i;
        auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        std::size_t best = std::min(go(i - 1, j) + 1, go(i, j - 1) + 1);
        best = std::min(best, go(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1));
        memo[key] = best;
        return best;
    };
    return go(a.size(), b.size());
}

PhonemeSeq random_seq(std::mt19937& gen, std::size_t max_len, std::size_t alphabet) {
    PhonemeSeq s(gen() % (max_len + 1));
    for (auto& p : s) p = Phoneme{static_cast<std::uint8_t>(gen() % alphabet)};
    return s;
}

}  // namespace

TEST(Phoneme, ParseStripsStress) {
    EXPECT_EQ(parse_phoneme("AE1")->symbol(), "AE");
    EXPECT_EQ(parse_phoneme("zh")->symbol(), "ZH");
    EXPECT_FALSE(parse_phoneme("QQ"));
    EXPECT_EQ(to_string(parse_phonemes("K AE1 T")), "K AE T");
    EXPECT_THROW(parse_phonemes("K XX"), PhoneticsError);
}

TEST(NormalizedLevenshtein, Examples) {
    const auto cat = parse_phonemes("K AE T");
    EXPECT_DOUBLE_EQ(normalized_levenshtein(cat, cat), 0.0);
    EXPECT_DOUBLE_EQ(normalized_levenshtein(PhonemeSeq{}, parse_phonemes("K")), 1.0);
    EXPECT_DOUBLE_EQ(normalized_levenshtein(cat, parse_phonemes("B AE T")), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(normalized_levenshtein(PhonemeSeq{}, PhonemeSeq{}), 0.0);
}

TEST(NormalizedLevenshtein, MatchesRecursiveOracleAndProperties) {
    std::mt19937 gen(20210702);
    for (int i = 0; i < 500; ++i) {
        // Small alphabets make near-matches and ties common.
        const std::size_t alphabet = 2 + gen() % 6;
        const auto a = random_seq(gen, 20, alphabet);
        const auto b = random_seq(gen, 20, alphabet);
        const auto raw = recursive_distance(a, b);
        const double expected = std::max(a.size(), b.size()) == 0 ? 0.0 : double(raw) / double(std::max(a.size(), b.size()));
        const double d = normalized_levenshtein(a, b);
        ASSERT_EQ(d, expected);
        ASSERT_EQ(d, normalized_levenshtein(b, a));
        ASSERT_GE(d, 0.0);
        ASSERT_LE(d, 1.0);
        ASSERT_EQ(d == 0.0, a == b);
    }
}

TEST(Levenshtein, WorksOnWords) {
    std::vector<std::string> a{"have", "dinner", "with"}, b{"have", "dinner", "was", "a"};
    EXPECT_EQ(levenshtein(std::span<const std::string>(a), std::span<const std::string>(b)), 2u);
}

TEST(Inventory, BuiltinCoversArpabet) {
    const auto& inv = PhonemeInventory::builtin();
    EXPECT_EQ(inv.phonemes().size(), kArpabet.size());
    EXPECT_EQ(inv.dimension(), 18u);
}

TEST(Inventory, ShippedFileMatchesBuiltin) {
    const auto file = PhonemeInventory::load(data_path("phoneme_features.txt"));
    const auto& inv = PhonemeInventory::builtin();
    for (auto p : inv.phonemes()) EXPECT_EQ(file.features(p), inv.features(p)) << p.symbol();
}

TEST(PhonemeSimilarity, Examples) {
    const auto& inv = PhonemeInventory::builtin();
    const auto P = *parse_phoneme("P"), B = *parse_phoneme("B"), AE = *parse_phoneme("AE");
    EXPECT_DOUBLE_EQ(phoneme_similarity(AE, AE, inv), 1.0);
    EXPECT_DOUBLE_EQ(phoneme_similarity(P, B, inv), phoneme_similarity(B, P, inv));
    // P = {cons, stop, labial}; B adds voiced: 3 / (sqrt(3) * sqrt(4)).
    EXPECT_NEAR(phoneme_similarity(P, B, inv), 3.0 / std::sqrt(12.0), 1e-12);
}

TEST(PhonemeSimilarity, MatrixSymmetricUnitDiagonalInRange) {
    const auto& inv = PhonemeInventory::builtin();
    for (auto p : inv.phonemes()) {
        EXPECT_EQ(inv.similarity(p, p), 1.0);
        for (auto q : inv.phonemes()) {
            const double s = inv.similarity(p, q);
            EXPECT_EQ(s, inv.similarity(q, p));
            EXPECT_GE(s, 0.0);
            EXPECT_LE(s, 1.0);
        }
    }
}

TEST(PhonemeSimilarity, UnknownPhonemeNamed) {
    auto inv = PhonemeInventory::parse("P 1 0\nB 1 1\n");
    try {
        inv.similarity(*parse_phoneme("P"), *parse_phoneme("K"));
        FAIL();
    } catch (const PhoneticsError& e) {
        EXPECT_NE(std::string(e.what()).find("K"), std::string::npos);
    }
}

TEST(Inventory, MostSimilarExcludesSelfAndBreaksTiesBySymbol) {
    const auto& inv = PhonemeInventory::builtin();
    for (auto p : inv.phonemes()) EXPECT_NE(inv.most_similar(p), p);
    EXPECT_EQ(inv.most_similar(*parse_phoneme("P")).symbol(), "B");
    // Equal rows: both candidates tie for the third phoneme, the earlier symbol wins.
    auto tie = PhonemeInventory::parse("AA 1 0\nB 1 0\nK 1 0\n");
    EXPECT_EQ(tie.most_similar(*parse_phoneme("K")).symbol(), "AA");
}

TEST(Inventory, RejectsRaggedRows) {
    EXPECT_THROW(PhonemeInventory::parse("P 1 0\nB 1\n"), PhoneticsError);
    EXPECT_THROW(PhonemeInventory::parse("# nothing\n"), PhoneticsError);
    EXPECT_THROW(PhonemeInventory::parse("P 1 x\n"), PhoneticsError);
}

TEST(Lexicon, ParsesCmudictFormat) {
    std::istringstream in(
        ";;; comment\n"
        "CAT  K AE1 T\n"
        "READ  R IY1 D\n"
        "READ(2)  R EH1 D\n"
        "aalborg AO1 L B AO0 R G # place, danish\n"
        "DON'T  D OW1 N T\n");
    auto lex = Lexicon::parse(in);
    EXPECT_EQ(lex.size(), 4u);
    EXPECT_EQ(to_string(*lex.primary("cat")), "K AE T");
    ASSERT_TRUE(lex.contains("read"));
    EXPECT_EQ(lex.entries()[1].pronunciations.size(), 2u);
    EXPECT_EQ(to_string(lex.entries()[1].pronunciations[1]), "R EH D");
    EXPECT_EQ(to_string(*lex.primary("aalborg")), "AO L B AO R G");
    EXPECT_EQ(to_string(*lex.primary("dont")), "D OW N T");
}

TEST(Lexicon, UnknownPhonemeReportsLine) {
    std::istringstream in("CAT K AE1 T\nDOG D XX G\n");
    try {
        Lexicon::parse(in);
        FAIL();
    } catch (const PhoneticsError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(GraphemesToPhonemes, Examples) {
    const auto& lex = lexicon();
    EXPECT_TRUE(graphemes_to_phonemes("", lex).empty());
    EXPECT_EQ(to_string(graphemes_to_phonemes("cat", lex)), "K AE T");
    // Letter rules: z z x(K S) q v
    EXPECT_EQ(to_string(graphemes_to_phonemes("zzxqv", lex)), "Z Z K S K V");
    EXPECT_EQ(graphemes_to_phonemes("zzxqv", lex), graphemes_to_phonemes("zzxqv", lex));
    EXPECT_EQ(graphemes_to_phonemes("3 cars", lex), graphemes_to_phonemes("three cars", lex));
    EXPECT_EQ(graphemes_to_phonemes("21", lex), graphemes_to_phonemes("twenty one", lex));
}

TEST(GraphemesToPhonemes, TotalOverRandomText) {
    const auto& lex = lexicon();
    std::mt19937 gen(5);
    const std::string letters = "abcdefghijklmnopqrstuvwxyz0123456789";
    for (int i = 0; i < 300; ++i) {
        std::string word;
        for (int j = 0, n = 1 + int(gen() % 9); j < n; ++j) word += letters[gen() % letters.size()];
        EXPECT_FALSE(graphemes_to_phonemes(word, lex).empty()) << word;
    }
}

TEST(LetterRules, LongestMatchFirst) {
    const auto& r = LetterRules::builtin();
    EXPECT_EQ(to_string(r.apply("church")), "CH AH R CH");
    EXPECT_EQ(to_string(r.apply("thing")), "TH IH NG");
    auto custom = LetterRules::parse("a EY\nab AE B\n");
    EXPECT_EQ(to_string(custom.apply("aba")), "AE B EY");
}

TEST(LetterRules, ShippedFileMatchesBuiltin) {
    const auto shipped = LetterRules::load(voicerelay::testing::data_path("letter_rules.txt"));
    for (const char* w : {"church", "thing", "zzxqv", "phonetic", "quickly", "xylophone"})
        EXPECT_EQ(shipped.apply(w), LetterRules::builtin().apply(w)) << w;
    EXPECT_THROW(LetterRules::load("/nonexistent"), PhoneticsError);
}
