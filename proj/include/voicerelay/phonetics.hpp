#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "voicerelay/text.hpp"

namespace voicerelay {

class PhoneticsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ARPAbet without stress markers, in symbol order. Phoneme ids index this table.
inline constexpr std::array<std::string_view, 39> kArpabet = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",
    "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY",
    "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};

struct Phoneme {
    std::uint8_t id = 0;

    std::string_view symbol() const { return kArpabet[id]; }
    auto operator<=>(const Phoneme&) const = default;
};

using PhonemeSeq = std::vector<Phoneme>;

/// Parses "AE1" / "ae" / "AE" into a phoneme; stress digits are dropped.
inline std::optional<Phoneme> parse_phoneme(std::string_view sym) {
    std::string up;
    for (char c : sym) {
        if (std::isdigit(static_cast<unsigned char>(c))) continue;
        up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    auto it = std::lower_bound(kArpabet.begin(), kArpabet.end(), std::string_view(up));
    if (it == kArpabet.end() || *it != up) return std::nullopt;
    return Phoneme{static_cast<std::uint8_t>(it - kArpabet.begin())};
}

inline PhonemeSeq parse_phonemes(std::string_view text) {
    PhonemeSeq out;
    for (const auto& tok : split_words(text)) {
        auto p = parse_phoneme(tok);
        if (!p) throw PhoneticsError("unknown phoneme '" + tok + "'");
        out.push_back(*p);
    }
    return out;
}

inline std::string to_string(std::span<const Phoneme> seq) {
    std::string s;
    for (auto p : seq) {
        if (!s.empty()) s += ' ';
        s += p.symbol();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Edit distance

/// Levenshtein distance with unit costs. Two-row DP, O(|a|*|b|) time.
template <typename T>
std::size_t levenshtein(std::span<const T> a, std::span<const T> b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// Levenshtein distance divided by the longer length; 0 when both are empty.
template <typename T>
double normalized_levenshtein(std::span<const T> a, std::span<const T> b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 0.0;
    return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

inline double normalized_levenshtein(const PhonemeSeq& a, const PhonemeSeq& b) {
    return normalized_levenshtein(std::span<const Phoneme>(a), std::span<const Phoneme>(b));
}

// ---------------------------------------------------------------------------
// Inventory and similarity

/// Articulatory feature rows. Columns:
///   vowel consonant voiced nasal stop fricative affricate approximant
///   labial dental alveolar postalveolar velar glottal height backness round diphthong
inline constexpr std::string_view kDefaultFeatureTable = R"(# phoneme vowel cons voiced nasal stop fric affr approx labial dental alveolar postalv velar glottal height back round diph
AA 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0 1 0 0
AE 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0
AH 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0.5 0.5 0 0
AO 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0.5 1 1 0
AW 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0.5 0 1
AY 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0 0.25 0 1
B 0 1 1 0 1 0 0 0 1 0 0 0 0 0 0 0 0 0
CH 0 1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 0 0
D 0 1 1 0 1 0 0 0 0 0 1 0 0 0 0 0 0 0
DH 0 1 1 0 0 1 0 0 0 1 0 0 0 0 0 0 0 0
EH 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0.5 0 0 0
ER 1 0 1 0 0 0 0 1 0 0 0 0 0 0 0.5 0.5 0 0
EY 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0.5 0 0 1
F 0 1 0 0 0 1 0 0 1 0 0 0 0 0 0 0 0 0
G 0 1 1 0 1 0 0 0 0 0 0 0 1 0 0 0 0 0
HH 0 1 0 0 0 1 0 0 0 0 0 0 0 1 0 0 0 0
IH 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0.75 0 0 0
IY 1 0 1 0 0 0 0 0 0 0 0 0 0 0 1 0 0 0
JH 0 1 1 0 0 0 1 0 0 0 0 1 0 0 0 0 0 0
K 0 1 0 0 1 0 0 0 0 0 0 0 1 0 0 0 0 0
L 0 1 1 0 0 0 0 1 0 0 1 0 0 0 0 0 0 0
M 0 1 1 1 0 0 0 0 1 0 0 0 0 0 0 0 0 0
N 0 1 1 1 0 0 0 0 0 0 1 0 0 0 0 0 0 0
NG 0 1 1 1 0 0 0 0 0 0 0 0 1 0 0 0 0 0
OW 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0.5 1 1 1
OY 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0.5 0.75 1 1
P 0 1 0 0 1 0 0 0 1 0 0 0 0 0 0 0 0 0
R 0 1 1 0 0 0 0 1 0 0 0 1 0 0 0 0 0 0
S 0 1 0 0 0 1 0 0 0 0 1 0 0 0 0 0 0 0
SH 0 1 0 0 0 1 0 0 0 0 0 1 0 0 0 0 0 0
T 0 1 0 0 1 0 0 0 0 0 1 0 0 0 0 0 0 0
TH 0 1 0 0 0 1 0 0 0 1 0 0 0 0 0 0 0 0
UH 1 0 1 0 0 0 0 0 0 0 0 0 0 0 0.75 1 1 0
UW 1 0 1 0 0 0 0 0 0 0 0 0 0 0 1 1 1 0
V 0 1 1 0 0 1 0 0 1 0 0 0 0 0 0 0 0 0
W 0 1 1 0 0 0 0 1 1 0 0 0 1 0 0 0 0 0
Y 0 1 1 0 0 0 0 1 0 0 0 1 0 0 0 0 0 0
Z 0 1 1 0 0 1 0 0 0 0 1 0 0 0 0 0 0 0
ZH 0 1 1 0 0 1 0 0 0 0 0 1 0 0 0 0 0 0
)";

/// Feature vectors for a set of phonemes. Used for cosine similarity and the
/// "most similar phoneme" substitution in augmentation.
class PhonemeInventory {
public:
    /// Parses `PHONEME f1 f2 ... fk` lines; `#` starts a comment line.
    static PhonemeInventory parse(std::string_view table) {
        PhonemeInventory inv;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= table.size()) {
            const auto eol = table.find('\n', pos);
            const auto line = table.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
            pos = eol == std::string_view::npos ? table.size() + 1 : eol + 1;
            ++line_no;
            const auto toks = split_words(line);
            if (toks.empty() || toks[0][0] == '#') continue;
            auto p = parse_phoneme(toks[0]);
            if (!p) throw PhoneticsError("feature table line " + std::to_string(line_no) + ": unknown phoneme '" + toks[0] + "'");
            std::vector<double> row;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                try {
                    std::size_t used = 0;
                    row.push_back(std::stod(toks[i], &used));
                    if (used != toks[i].size()) throw std::invalid_argument(toks[i]);
                } catch (const std::exception&) {
                    throw PhoneticsError("feature table line " + std::to_string(line_no) + ": bad value '" + toks[i] + "'");
                }
            }
            if (row.empty()) throw PhoneticsError("feature table line " + std::to_string(line_no) + ": no features");
            if (inv.dim_ != 0 && row.size() != inv.dim_)
                throw PhoneticsError("feature table line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(inv.dim_) + " features");
            inv.dim_ = row.size();
            if (inv.features_[p->id]) throw PhoneticsError("feature table: duplicate phoneme " + toks[0]);
            inv.features_[p->id] = std::move(row);
        }
        if (inv.dim_ == 0) throw PhoneticsError("feature table is empty");
        inv.compute_nearest();
        return inv;
    }

    static PhonemeInventory load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw PhoneticsError("cannot open feature table: " + path);
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return parse(data);
    }

    static const PhonemeInventory& builtin() {
        static const PhonemeInventory inv = parse(kDefaultFeatureTable);
        return inv;
    }

    bool contains(Phoneme p) const { return features_[p.id].has_value(); }
    std::size_t dimension() const { return dim_; }

    std::vector<Phoneme> phonemes() const {
        std::vector<Phoneme> out;
        for (std::size_t i = 0; i < features_.size(); ++i)
            if (features_[i]) out.push_back(Phoneme{static_cast<std::uint8_t>(i)});
        return out;
    }

    const std::vector<double>& features(Phoneme p) const {
        if (!features_[p.id]) throw PhoneticsError("phoneme not in inventory: " + std::string(p.symbol()));
        return *features_[p.id];
    }

    /// Cosine similarity of feature vectors clamped to [0, 1].
    double similarity(Phoneme p, Phoneme q) const {
        if (p == q) {
            features(p);
            return 1.0;
        }
        const auto& a = features(p);
        const auto& b = features(q);
        double dot = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        if (na == 0 || nb == 0) return 0.0;
        return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
    }

    /// Highest-similarity other phoneme; ties go to the earlier symbol.
    Phoneme most_similar(Phoneme p) const {
        if (!nearest_[p.id]) throw PhoneticsError("phoneme not in inventory: " + std::string(p.symbol()));
        return *nearest_[p.id];
    }

private:
    void compute_nearest() {
        const auto all = phonemes();
        for (auto p : all) {
            std::optional<Phoneme> best;
            double best_sim = -1.0;
            for (auto q : all) {
                if (q == p) continue;
                const double s = similarity(p, q);
                if (s > best_sim) {
                    best_sim = s;
                    best = q;
                }
            }
            nearest_[p.id] = best.value_or(p);
        }
    }

    std::array<std::optional<std::vector<double>>, kArpabet.size()> features_{};
    std::array<std::optional<Phoneme>, kArpabet.size()> nearest_{};
    std::size_t dim_ = 0;
};

inline double phoneme_similarity(Phoneme p, Phoneme q, const PhonemeInventory& inv) { return inv.similarity(p, q); }

// ---------------------------------------------------------------------------
// Letter-to-sound fallback

/// Greedy longest-match grapheme rules used for out-of-vocabulary words.
/// Format: one rule per line, `graphemes PH1 PH2 ...`; `#` comments.
inline constexpr std::string_view kDefaultLetterRules = R"(# multi-letter rules first
tch CH
sch S K
ch CH
sh SH
th TH
ph F
wh W
ng NG
ck K
qu K W
gh G
kn N
ee IY
ea IY
oo UW
ai EY
ay EY
oa OW
ou AW
ow OW
oi OY
oy OY
au AO
aw AO
ie IY
a AE
b B
c K
d D
e EH
f F
g G
h HH
i IH
j JH
k K
l L
m M
n N
o AA
p P
q K
r R
s S
t T
u AH
v V
w W
x K S
y Y
z Z
)";

class LetterRules {
public:
    static LetterRules parse(std::string_view table) {
        LetterRules r;
        for (std::size_t pos = 0; pos < table.size();) {
            auto eol = table.find('\n', pos);
            if (eol == std::string_view::npos) eol = table.size();
            const auto toks = split_words(table.substr(pos, eol - pos));
            pos = eol + 1;
            if (toks.empty() || toks[0][0] == '#') continue;
            PhonemeSeq seq;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                auto p = parse_phoneme(toks[i]);
                if (!p) throw PhoneticsError("letter rule '" + toks[0] + "': unknown phoneme " + toks[i]);
                seq.push_back(*p);
            }
            r.max_len_ = std::max(r.max_len_, toks[0].size());
            r.rules_[toks[0]] = std::move(seq);
        }
        return r;
    }

    static LetterRules load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw PhoneticsError("cannot open letter rules: " + path);
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return parse(data);
    }

    static const LetterRules& builtin() {
        static const LetterRules r = parse(kDefaultLetterRules);
        return r;
    }

    PhonemeSeq apply(std::string_view word) const {
        PhonemeSeq out;
        std::size_t i = 0;
        while (i < word.size()) {
            bool matched = false;
            for (std::size_t len = std::min(max_len_, word.size() - i); len > 0; --len) {
                auto it = rules_.find(std::string(word.substr(i, len)));
                if (it != rules_.end()) {
                    out.insert(out.end(), it->second.begin(), it->second.end());
                    i += len;
                    matched = true;
                    break;
                }
            }
            if (!matched) ++i;  // no rule for this byte
        }
        return out;
    }

private:
    std::unordered_map<std::string, PhonemeSeq> rules_;
    std::size_t max_len_ = 0;
};

// ---------------------------------------------------------------------------
// Lexicon

/// Word -> pronunciations, loaded from CMUdict-format text. Keys are
/// lowercased with apostrophes removed, so they line up with normalize_text.
class Lexicon {
public:
    struct Entry {
        std::string word;  // key form
        std::vector<PhonemeSeq> pronunciations;
    };

    Lexicon() = default;
    explicit Lexicon(LetterRules rules) : rules_(std::move(rules)) {}

    static Lexicon parse(std::istream& in, LetterRules rules = LetterRules::builtin()) {
        Lexicon lex(std::move(rules));
        std::unordered_map<std::string, std::string> source_of;  // key -> spelling that created it
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.rfind(";;;", 0) == 0) continue;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            auto toks = split_words(line);
            if (toks.empty()) continue;
            std::string spelling = toks[0];
            if (auto paren = spelling.find('('); paren != std::string::npos && spelling.back() == ')')
                spelling.erase(paren);
            for (auto& c : spelling) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            std::string key;
            for (char c : spelling)
                if (c != '\'') key += c;
            if (key.empty() || toks.size() < 2) continue;

            PhonemeSeq pron;
            for (std::size_t i = 1; i < toks.size(); ++i) {
                auto p = parse_phoneme(toks[i]);
                if (!p) throw PhoneticsError("lexicon line " + std::to_string(line_no) + ": unknown phoneme '" + toks[i] + "'");
                pron.push_back(*p);
            }

            auto it = lex.index_.find(key);
            if (it == lex.index_.end()) {
                lex.index_.emplace(key, lex.entries_.size());
                lex.entries_.push_back(Entry{key, {std::move(pron)}});
                source_of.emplace(key, spelling);
            } else if (source_of[key] == spelling) {
                lex.entries_[it->second].pronunciations.push_back(std::move(pron));
            }
        }
        return lex;
    }

    static Lexicon load(const std::string& path, LetterRules rules = LetterRules::builtin()) {
        std::ifstream in(path);
        if (!in) throw PhoneticsError("cannot open lexicon: " + path);
        return parse(in, std::move(rules));
    }

    void add(std::string word, PhonemeSeq pron) {
        auto it = index_.find(word);
        if (it == index_.end()) {
            index_.emplace(word, entries_.size());
            entries_.push_back(Entry{std::move(word), {std::move(pron)}});
        } else {
            entries_[it->second].pronunciations.push_back(std::move(pron));
        }
    }

    const PhonemeSeq* primary(std::string_view word) const {
        auto it = index_.find(std::string(word));
        return it == index_.end() ? nullptr : &entries_[it->second].pronunciations.front();
    }

    bool contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    const LetterRules& letter_rules() const { return rules_; }

    /// Pronunciation of a single normalized token, never empty for a token
    /// containing at least one letter or digit.
    PhonemeSeq pronounce(std::string_view word) const {
        if (!word.empty() && std::all_of(word.begin(), word.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            if (word.size() <= 6) {
                PhonemeSeq out;
                for (const auto& w : split_words(number_to_words(std::stoull(std::string(word))))) {
                    auto p = pronounce(w);
                    out.insert(out.end(), p.begin(), p.end());
                }
                return out;
            }
            PhonemeSeq out;
            for (char c : word) {
                auto p = pronounce(number_to_words(static_cast<std::uint64_t>(c - '0')));
                out.insert(out.end(), p.begin(), p.end());
            }
            return out;
        }
        if (const auto* p = primary(word)) return *p;
        return rules_.apply(word);
    }

private:
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    LetterRules rules_ = LetterRules::builtin();
};

/// Concatenated primary pronunciations of every word in already-normalized text.
inline PhonemeSeq graphemes_to_phonemes(std::string_view normalized, const Lexicon& lex) {
    PhonemeSeq out;
    for (const auto& w : split_words(normalized)) {
        auto p = lex.pronounce(w);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

}  // namespace voicerelay
