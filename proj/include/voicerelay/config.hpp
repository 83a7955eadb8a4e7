#pragma once

// Flat key = value run configuration. Command-line flags are applied on top
// of the file, so flags win.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "voicerelay/device_sim.hpp"
#include "voicerelay/domain.hpp"
#include "voicerelay/repair.hpp"

namespace voicerelay {

#ifndef VOICERELAY_DATA_DIR
#define VOICERELAY_DATA_DIR "data"
#endif

struct RunConfig {
    std::string lexicon = VOICERELAY_DATA_DIR "/cmudict.dict";
    std::string corpus = VOICERELAY_DATA_DIR "/corpus.txt";
    std::string dialogue_pairs = VOICERELAY_DATA_DIR "/dialogue_pairs.tsv";
    std::string features;      // empty: built-in articulatory table
    std::string letter_rules;  // empty: built-in rules
    std::string script;
    std::string static_dir;
    std::string out = "out";
    std::string listen = "127.0.0.1:8080";
    std::string line_listen;  // empty: no line-delimited TCP endpoint
    std::string token;
    std::string suggester = "corpus";  // corpus | none | http://host:port/path
    std::string skill_name = "echopal";
    std::string wake_word = "alexa";
    std::string worker_model = "typist";
    std::uint64_t seed = 0;
    DeadlineConfig deadlines;
    CutoffModel cutoff;
    NoiseParams noise{0.1, 0.1, 0};  // repair-eval and augment
    NoiseParams asr{0.0, 0.0, 0};    // simulated device ASR
    std::size_t k = 3;
    std::size_t sample = 1000;
    std::size_t times = 5;
};

using ConfigMap = std::map<std::string, std::string>;

/// `key = value` lines; `#` starts a comment; later keys override earlier ones.
inline ConfigMap parse_config(std::istream& in, const std::string& origin = "<config>") {
    ConfigMap out;
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

inline ConfigMap load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    return parse_config(in, path);
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used == v.size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + v + "'");
}

inline std::uint64_t to_count(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        if (!v.empty() && v[0] != '-') {
            const auto n = std::stoull(v, &used);
            if (used == v.size()) return n;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
}

inline Duration to_duration(const std::string& key, const std::string& v) {
    return Duration{static_cast<std::int64_t>(std::llround(to_double(key, v) * 1000.0))};
}

inline double to_probability(const std::string& key, const std::string& v) {
    const double p = to_double(key, v);
    if (p < 0.0 || p > 1.0) throw ConfigError(key + ": must be in [0, 1]");
    return p;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace detail

/// Applies every entry to cfg. Durations are in seconds. Unknown keys throw.
inline void apply_config(const ConfigMap& values, RunConfig& cfg) {
    using namespace detail;
    const std::map<std::string, std::string*> strings = {
        {"lexicon", &cfg.lexicon},         {"corpus", &cfg.corpus},         {"dialogue_pairs", &cfg.dialogue_pairs},
        {"features", &cfg.features},       {"letter_rules", &cfg.letter_rules}, {"script", &cfg.script},
        {"static_dir", &cfg.static_dir},   {"out", &cfg.out},               {"listen", &cfg.listen},
        {"line_listen", &cfg.line_listen}, {"token", &cfg.token},           {"suggester", &cfg.suggester},
        {"skill_name", &cfg.skill_name},   {"wake_word", &cfg.wake_word},   {"worker_model", &cfg.worker_model},
    };
    for (const auto& [key, v] : values) {
        if (auto it = strings.find(key); it != strings.end()) {
            *it->second = v;
        } else if (key == "seed") {
            cfg.seed = to_count(key, v);
        } else if (key == "worker_budget") {
            cfg.deadlines.worker_budget = to_duration(key, v);
        } else if (key == "suggestion_lock") {
            cfg.deadlines.suggestion_lock = to_duration(key, v);
        } else if (key == "warning_at_remaining") {
            cfg.deadlines.warning_at_remaining = to_duration(key, v);
        } else if (key == "listening_window") {
            cfg.deadlines.listening_window = cfg.cutoff.listening_window = to_duration(key, v);
        } else if (key == "suggester_min_interval") {
            cfg.deadlines.suggester_min_interval = to_duration(key, v);
        } else if (key == "per_variant_quota") {
            cfg.deadlines.per_variant_quota = static_cast<int>(to_count(key, v));
        } else if (key == "alternatives_count") {
            cfg.deadlines.alternatives_count = static_cast<int>(to_count(key, v));
        } else if (key == "max_pause") {
            cfg.cutoff.max_pause = to_duration(key, v);
        } else if (key == "word_duration") {
            cfg.cutoff.word_duration = to_duration(key, v);
        } else if (key == "no_speech_close") {
            cfg.cutoff.no_speech_close = to_bool(key, v);
        } else if (key == "noise_del") {
            cfg.noise.p_delete = to_probability(key, v);
        } else if (key == "noise_sub") {
            cfg.noise.p_substitute = to_probability(key, v);
        } else if (key == "asr_del") {
            cfg.asr.p_delete = to_probability(key, v);
        } else if (key == "asr_sub") {
            cfg.asr.p_substitute = to_probability(key, v);
        } else if (key == "k") {
            cfg.k = to_count(key, v);
        } else if (key == "sample") {
            cfg.sample = to_count(key, v);
        } else if (key == "times") {
            cfg.times = to_count(key, v);
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    validate_config(cfg.deadlines);
    validate_cutoff(cfg.cutoff);
}

/// Throws ConfigError for the first referenced file that does not exist.
inline void require_files(const std::vector<std::pair<std::string, std::string>>& named_paths) {
    for (const auto& [name, path] : named_paths) {
        if (path.empty()) continue;
        std::error_code ec;
        if (!std::filesystem::exists(path, ec)) throw ConfigError(name + " not found: " + path);
    }
}

}  // namespace voicerelay
