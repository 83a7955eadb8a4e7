#include <gtest/gtest.h>

#include <cctype>
#include <random>

#include "voicerelay/text.hpp"

using namespace voicerelay;

TEST(NormalizeText, PunctuationAndNumbers) {
    EXPECT_EQ(normalize_text("There are three cars!"), "there are 3 cars");
    EXPECT_EQ(normalize_text("There are 3 cars."), "there are 3 cars");
    EXPECT_EQ(normalize_text("twenty one pilots"), "21 pilots");
}

TEST(NormalizeText, NumberGrammar) {
    EXPECT_EQ(normalize_text("one hundred and five"), "105");
    EXPECT_EQ(normalize_text("nine hundred ninety nine thousand nine hundred ninety nine"), "999999");
    EXPECT_EQ(normalize_text("two thousand twenty one"), "2021");
    EXPECT_EQ(normalize_text("one two three"), "1 2 3");
    EXPECT_EQ(normalize_text("twenty twenty"), "20 20");
    EXPECT_EQ(normalize_text("a hundred people"), "a 100 people");
    EXPECT_EQ(normalize_text("one and two"), "1 and 2");
    EXPECT_EQ(normalize_text("Twenty-one"), "21");
    EXPECT_EQ(normalize_text("zero"), "0");
}

TEST(NormalizeText, ApostrophesJoin) {
    EXPECT_EQ(normalize_text("I don't know, what's up?"), "i dont know whats up");
    EXPECT_EQ(normalize_text("it\xE2\x80\x99s fine"), "its fine");
}

TEST(NormalizeText, WhitespaceCollapsed) {
    EXPECT_EQ(normalize_text("  Hello,\t\tworld  "), "hello world");
    EXPECT_EQ(normalize_text(""), "");
    EXPECT_EQ(normalize_text("?!..."), "");
}

TEST(NormalizeText, IdempotentAndClean) {
    const std::string alphabet = "abcXYZ  ,.!?'-09 one two twenty hundred thousand and";
    std::mt19937 gen(42);
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        const int len = static_cast<int>(gen() % 60);
        // Mix raw characters and whole number words.
        for (int i = 0; i < len; ++i) {
            if (gen() % 4 == 0) {
                static const char* words[] = {" one ", " twenty ", " hundred ", " thousand ", " and ", " nine "};
                s += words[gen() % 6];
            } else {
                s += alphabet[gen() % alphabet.size()];
            }
        }
        const auto once = normalize_text(s);
        ASSERT_EQ(normalize_text(once), once) << "input: " << s;
        for (char c : once) {
            ASSERT_FALSE(std::isupper(static_cast<unsigned char>(c))) << once;
            ASSERT_FALSE(std::ispunct(static_cast<unsigned char>(c))) << once;
        }
    }
}

TEST(NumberToWords, RoundTripsThroughNormalize) {
    for (std::uint64_t n : {0ull, 7ull, 13ull, 20ull, 21ull, 100ull, 101ull, 999ull, 1000ull, 1001ull, 12345ull, 999999ull}) {
        EXPECT_EQ(normalize_text(number_to_words(n)), std::to_string(n)) << n;
    }
    EXPECT_EQ(number_to_words(21), "twenty one");
    EXPECT_EQ(number_to_words(1000000), "one zero zero zero zero zero zero");
}
