#pragma once

// Text normalization shared by the corpus pipeline and the live transcript
// path: case folding, punctuation stripping and number words -> digits.

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace voicerelay {

namespace detail {

inline constexpr std::array<std::string_view, 20> kSmallNumbers = {
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};

inline constexpr std::array<std::string_view, 10> kTens = {
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};

inline std::optional<int> small_value(std::string_view w) {
    for (std::size_t i = 0; i < kSmallNumbers.size(); ++i)
        if (kSmallNumbers[i] == w) return static_cast<int>(i);
    return std::nullopt;
}

inline std::optional<int> tens_value(std::string_view w) {
    for (std::size_t i = 2; i < kTens.size(); ++i)
        if (kTens[i] == w) return static_cast<int>(i * 10);
    return std::nullopt;
}

struct Parsed {
    int value = 0;
    std::size_t used = 0;
};

// below100 := small | tens small(1..9)?
inline std::optional<Parsed> parse_below_100(const std::vector<std::string>& w, std::size_t i) {
    if (i >= w.size()) return std::nullopt;
    if (auto v = small_value(w[i])) return Parsed{*v, 1};
    if (auto t = tens_value(w[i])) {
        if (i + 1 < w.size()) {
            if (auto u = small_value(w[i + 1]); u && *u >= 1 && *u <= 9) return Parsed{*t + *u, 2};
        }
        return Parsed{*t, 1};
    }
    return std::nullopt;
}

// below1000 := (small(1..9) | "") "hundred" ("and"? below100(>0))? | below100
inline std::optional<Parsed> parse_below_1000(const std::vector<std::string>& w, std::size_t i) {
    auto head = parse_below_100(w, i);
    std::size_t j = i;
    int hundreds = 0;
    if (head && head->used == 1 && head->value >= 1 && head->value <= 9 && i + 1 < w.size() &&
        w[i + 1] == "hundred") {
        hundreds = head->value;
        j = i + 2;
    } else if (i < w.size() && w[i] == "hundred") {
        hundreds = 1;
        j = i + 1;
    } else {
        return head;
    }
    Parsed out{hundreds * 100, j - i};
    std::size_t k = j;
    if (k < w.size() && w[k] == "and") ++k;
    if (auto tail = parse_below_100(w, k); tail && tail->value > 0) {
        out.value += tail->value;
        out.used = k + tail->used - i;
    }
    return out;
}

// number := below1000? "thousand" below1000? | below1000
inline std::optional<Parsed> parse_number(const std::vector<std::string>& w, std::size_t i) {
    auto head = parse_below_1000(w, i);
    std::size_t j = head ? i + head->used : i;
    if (j < w.size() && w[j] == "thousand" && (!head || head->value > 0)) {
        Parsed out{(head ? head->value : 1) * 1000, j + 1 - i};
        std::size_t k = j + 1;
        if (k < w.size() && w[k] == "and") ++k;
        if (auto tail = parse_below_1000(w, k); tail && tail->value > 0) {
            out.value += tail->value;
            out.used = k + tail->used - i;
        }
        return out;
    }
    return head;
}

inline bool is_punct_byte(unsigned char c) { return c < 0x80 && std::ispunct(c); }

}  // namespace detail

/// Spells out 0..999,999 in lowercase English ("21" -> "twenty one").
/// Larger values fall back to digit-by-digit reading.
inline std::string number_to_words(std::uint64_t n) {
    using detail::kSmallNumbers;
    using detail::kTens;
    auto below_1000 = [](unsigned v) {
        std::string s;
        auto append = [&s](std::string_view w) {
            if (!s.empty()) s += ' ';
            s += w;
        };
        if (v >= 100) {
            append(kSmallNumbers[v / 100]);
            append("hundred");
            v %= 100;
            if (v == 0) return s;
        }
        if (v < 20) {
            append(kSmallNumbers[v]);
        } else {
            append(kTens[v / 10]);
            if (v % 10) append(kSmallNumbers[v % 10]);
        }
        return s;
    };
    if (n < 1000) return below_1000(static_cast<unsigned>(n));
    if (n < 1'000'000) {
        std::string s = below_1000(static_cast<unsigned>(n / 1000)) + " thousand";
        if (n % 1000) s += " " + below_1000(static_cast<unsigned>(n % 1000));
        return s;
    }
    std::string s;
    for (char c : std::to_string(n)) {
        if (!s.empty()) s += ' ';
        s += kSmallNumbers[static_cast<std::size_t>(c - '0')];
    }
    return s;
}

/// Splits on ASCII whitespace.
inline std::vector<std::string> split_words(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

/// Lowercases, strips punctuation (apostrophes join, everything else splits),
/// rewrites runs of number words below one million as digits and collapses
/// whitespace. Idempotent.
inline std::string normalize_text(std::string_view s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto c = static_cast<unsigned char>(s[i]);
        // U+2018 / U+2019 typographic apostrophes
        if (c == 0xE2 && i + 2 < s.size() && static_cast<unsigned char>(s[i + 1]) == 0x80 &&
            (static_cast<unsigned char>(s[i + 2]) == 0x98 || static_cast<unsigned char>(s[i + 2]) == 0x99)) {
            i += 2;
            continue;
        }
        if (c == '\'') continue;
        if (detail::is_punct_byte(c)) {
            cleaned += ' ';
        } else if (c < 0x80) {
            cleaned += static_cast<char>(std::tolower(c));
        } else {
            cleaned += static_cast<char>(c);
        }
    }

    const auto words = split_words(cleaned);
    std::string out;
    for (std::size_t i = 0; i < words.size();) {
        std::string token;
        if (auto num = detail::parse_number(words, i)) {
            token = std::to_string(num->value);
            i += num->used;
        } else {
            token = words[i];
            ++i;
        }
        if (!out.empty()) out += ' ';
        out += token;
    }
    return out;
}

}  // namespace voicerelay
