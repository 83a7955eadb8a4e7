#pragma once

// Smart-speaker stand-in: scripted speech with pause/window cut-offs and a
// word-level ASR noise model.

#include <algorithm>
#include <fstream>
#include <istream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "voicerelay/domain.hpp"
#include "voicerelay/phonetics.hpp"
#include "voicerelay/repair.hpp"
#include "voicerelay/rng.hpp"
#include "voicerelay/text.hpp"
#include "voicerelay/time.hpp"

namespace voicerelay {

class ScriptError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ScriptWord {
    std::string word;
    Duration pre_pause{0};

    bool operator==(const ScriptWord&) const = default;
};

using ScriptTurn = std::vector<ScriptWord>;

struct Script {
    std::string persona;
    std::vector<ScriptTurn> turns;
};

/// Lines are `pre_pause_seconds word`; a blank line ends a turn; `#` starts a
/// comment, and `# persona: name` sets the persona label.
inline Script parse_script(std::istream& in, const std::string& origin = "<script>") {
    Script script;
    ScriptTurn cur;
    std::string line;
    std::size_t line_no = 0;
    auto flush = [&] {
        if (!cur.empty()) script.turns.push_back(std::move(cur));
        cur.clear();
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) {
            flush();
            continue;
        }
        if (line[first] == '#') {
            const auto body = line.substr(first + 1);
            if (auto p = body.find("persona:"); p != std::string::npos) {
                auto name = body.substr(p + 8);
                name.erase(0, name.find_first_not_of(" \t"));
                script.persona = name;
            }
            continue;
        }
        const auto toks = split_words(line);
        if (toks.size() != 2)
            throw ScriptError(origin + ":" + std::to_string(line_no) + ": expected 'pre_pause_seconds word'");
        double pause = 0;
        try {
            std::size_t used = 0;
            pause = std::stod(toks[0], &used);
            if (used != toks[0].size()) throw std::invalid_argument(toks[0]);
        } catch (const std::exception&) {
            throw ScriptError(origin + ":" + std::to_string(line_no) + ": bad pause '" + toks[0] + "'");
        }
        if (pause < 0) throw ScriptError(origin + ":" + std::to_string(line_no) + ": negative pause");
        cur.push_back({toks[1], seconds(pause)});
    }
    flush();
    return script;
}

inline Script load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScriptError("cannot open script: " + path);
    return parse_script(in, path);
}

inline std::string join_words(const ScriptTurn& words) {
    std::string s;
    for (const auto& w : words) {
        if (!s.empty()) s += ' ';
        s += w.word;
    }
    return s;
}

struct CutoffModel {
    Duration max_pause{1500};
    Duration listening_window{10'000};
    Duration word_duration{300};  // speaking time of one word
    bool no_speech_close = true;
};

inline const CutoffModel& validate_cutoff(const CutoffModel& c) {
    if (c.max_pause < Duration::zero() || c.word_duration <= Duration::zero() || c.listening_window <= Duration::zero())
        throw ConfigError("cutoff durations must be positive");
    if (c.max_pause >= c.listening_window) throw ConfigError("max_pause must be < listening_window");
    return c;
}

struct SpokenTurn {
    enum class Cut { none, pause, window };

    ScriptTurn spoken;
    ScriptTurn remainder;
    Cut cut = Cut::none;
    Duration listen_time{0};  // from listening start until the device stops listening
    bool skill_closed = false;

    std::string utterance() const { return join_words(spoken); }
};

/// Emits words until a pause longer than max_pause or the listening window
/// runs out. Word i starts after its pre_pause and lasts word_duration.
inline SpokenTurn speak_turn(const ScriptTurn& words, const CutoffModel& cutoff) {
    validate_cutoff(cutoff);
    SpokenTurn out;
    Duration t{0};
    std::size_t i = 0;
    for (; i < words.size(); ++i) {
        const auto& w = words[i];
        if (i > 0 && w.pre_pause > cutoff.max_pause) {
            out.cut = SpokenTurn::Cut::pause;
            out.listen_time = std::min(t + cutoff.max_pause, cutoff.listening_window);
            break;
        }
        const Duration end = t + w.pre_pause + cutoff.word_duration;
        if (end > cutoff.listening_window) {
            out.cut = SpokenTurn::Cut::window;
            out.listen_time = cutoff.listening_window;
            break;
        }
        out.spoken.push_back(w);
        t = end;
    }
    out.remainder.assign(words.begin() + static_cast<std::ptrdiff_t>(i), words.end());
    if (out.cut == SpokenTurn::Cut::none) out.listen_time = std::min(t + cutoff.max_pause, cutoff.listening_window);
    if (out.spoken.empty() && cutoff.no_speech_close) out.skill_closed = true;
    return out;
}

/// Word-level ASR noise: each word is dropped with p_delete or otherwise
/// replaced by its nearest-sounding lexicon word with p_substitute.
class AsrSimulator {
public:
    explicit AsrSimulator(const Lexicon& lex) : lex_(lex) {}

    std::string transcribe(std::string_view utterance, const NoiseParams& noise) {
        check_noise(noise);
        Rng rng(noise.rng_seed);
        std::string out;
        for (const auto& w : split_words(normalize_text(utterance))) {
            std::string word = w;
            if (rng.uniform() < noise.p_delete) continue;
            if (rng.uniform() < noise.p_substitute) word = nearest_word(w);
            if (!out.empty()) out += ' ';
            out += word;
        }
        return out;
    }

    /// Lexicon word (other than `word`) with the smallest normalized phoneme
    /// distance; ties resolve to lexicon file order.
    std::string nearest_word(const std::string& word) {
        {
            std::lock_guard lock(mu_);
            if (auto it = cache_.find(word); it != cache_.end()) return it->second;
        }
        const auto target = lex_.pronounce(word);
        const std::string* best = nullptr;
        double best_d = 2.0;
        for (const auto& e : lex_.entries()) {
            if (e.word == word) continue;
            const auto& pron = e.pronunciations.front();
            const auto longest = std::max(pron.size(), target.size());
            if (longest == 0) continue;
            const auto len_gap = pron.size() > target.size() ? pron.size() - target.size() : target.size() - pron.size();
            if (static_cast<double>(len_gap) / static_cast<double>(longest) >= best_d) continue;
            const double d = normalized_levenshtein(target, pron);
            if (d < best_d) {
                best_d = d;
                best = &e.word;
            }
        }
        std::string result = best ? *best : word;
        std::lock_guard lock(mu_);
        cache_.emplace(word, result);
        return result;
    }

private:
    const Lexicon& lex_;
    std::mutex mu_;
    std::unordered_map<std::string, std::string> cache_;
};

inline std::string simulate_asr(std::string_view utterance, const NoiseParams& noise, const Lexicon& lex) {
    AsrSimulator asr(lex);
    return asr.transcribe(utterance, noise);
}

/// Device read-out time for a spoken response.
inline Duration readout_time(std::string_view text) {
    return Duration{60 * static_cast<std::int64_t>(text.size())};
}

}  // namespace voicerelay
