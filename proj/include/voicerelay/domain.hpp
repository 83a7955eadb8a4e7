#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "voicerelay/time.hpp"

namespace voicerelay {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Per-turn timing budget and suggestion quotas.
struct DeadlineConfig {
    Duration worker_budget{25'000};
    Duration suggestion_lock{5'000};
    Duration warning_at_remaining{10'000};
    Duration listening_window{10'000};
    Duration suggester_min_interval{1'000};
    int per_variant_quota = 5;
    int alternatives_count = 3;
};

/// Returns cfg unchanged, or throws ConfigError naming the first violated rule.
inline DeadlineConfig validate_config(const DeadlineConfig& cfg) {
    auto positive = [](Duration d, const char* name) {
        if (d <= Duration::zero()) throw ConfigError(std::string(name) + " must be > 0");
    };
    positive(cfg.worker_budget, "worker_budget");
    positive(cfg.suggestion_lock, "suggestion_lock");
    positive(cfg.warning_at_remaining, "warning_at_remaining");
    positive(cfg.listening_window, "listening_window");
    positive(cfg.suggester_min_interval, "suggester_min_interval");
    if (cfg.suggestion_lock >= cfg.worker_budget)
        throw ConfigError("suggestion_lock must be < worker_budget");
    if (cfg.warning_at_remaining >= cfg.worker_budget)
        throw ConfigError("warning_at_remaining must be < worker_budget");
    if (cfg.alternatives_count < 0) throw ConfigError("alternatives_count must be >= 0");
    if (cfg.per_variant_quota < 1) throw ConfigError("per_variant_quota must be >= 1");
    return cfg;
}

enum class ResponseKind { typed, default_button, suggested, timeout_random, timeout_draft, timeout_default };

enum class Resolution {
    worker_sent,
    draft_flushed_on_timeout,
    random_suggestion_on_timeout,
    default_fallback_on_timeout,
};

enum class SessionState { idle, open, closed };

enum class TurnPhase { awaiting_worker, resolved, abandoned };

inline constexpr std::string_view to_string(ResponseKind k) {
    switch (k) {
        case ResponseKind::typed: return "typed";
        case ResponseKind::default_button: return "default_button";
        case ResponseKind::suggested: return "suggested";
        case ResponseKind::timeout_random: return "timeout_random";
        case ResponseKind::timeout_draft: return "timeout_draft";
        case ResponseKind::timeout_default: return "timeout_default";
    }
    return "?";
}

inline std::optional<ResponseKind> parse_response_kind(std::string_view s) {
    for (auto k : {ResponseKind::typed, ResponseKind::default_button, ResponseKind::suggested,
                   ResponseKind::timeout_random, ResponseKind::timeout_draft, ResponseKind::timeout_default}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

inline constexpr std::string_view to_string(Resolution r) {
    switch (r) {
        case Resolution::worker_sent: return "worker_sent";
        case Resolution::draft_flushed_on_timeout: return "draft_flushed_on_timeout";
        case Resolution::random_suggestion_on_timeout: return "random_suggestion_on_timeout";
        case Resolution::default_fallback_on_timeout: return "default_fallback_on_timeout";
    }
    return "?";
}

inline constexpr std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::idle: return "idle";
        case SessionState::open: return "open";
        case SessionState::closed: return "closed";
    }
    return "?";
}

struct Alternative {
    std::string text;
    double distance = 0.0;  // normalized phoneme edit distance, [0, 1]

    bool operator==(const Alternative&) const = default;
};

/// Original transcript plus repaired alternatives. Index 0 is the original,
/// index i >= 1 is alternatives[i - 1].
struct TranscriptBundle {
    std::string original;
    std::vector<Alternative> alternatives;
    std::optional<std::size_t> selected_index;

    std::size_t variant_count() const { return alternatives.size() + 1; }

    const std::string& variant_text(std::size_t i) const {
        return i == 0 ? original : alternatives.at(i - 1).text;
    }

    const std::string& selected_text() const { return variant_text(selected_index.value_or(0)); }
};

struct Suggestion {
    std::string text;
    int variant_index = 0;
    TimePoint received_at{};
    std::string source;
};

struct WorkerAction {
    enum class Kind { type_draft, send_draft, press_default, select_suggestion, select_transcript };

    Kind kind = Kind::type_draft;
    std::size_t index = 0;  // press_default / select_suggestion / select_transcript
    std::string text;       // type_draft; optional for send_draft
    TimePoint at{};

    static WorkerAction type_draft(std::string t, TimePoint at = {}) { return {Kind::type_draft, 0, std::move(t), at}; }
    static WorkerAction send_draft(TimePoint at = {}) { return {Kind::send_draft, 0, {}, at}; }
    static WorkerAction press_default(std::size_t i, TimePoint at = {}) { return {Kind::press_default, i, {}, at}; }
    static WorkerAction select_suggestion(std::size_t i, TimePoint at = {}) {
        return {Kind::select_suggestion, i, {}, at};
    }
    static WorkerAction select_transcript(std::size_t i, TimePoint at = {}) {
        return {Kind::select_transcript, i, {}, at};
    }
};

inline constexpr std::string_view to_string(WorkerAction::Kind k) {
    switch (k) {
        case WorkerAction::Kind::type_draft: return "type_draft";
        case WorkerAction::Kind::send_draft: return "send_draft";
        case WorkerAction::Kind::press_default: return "press_default";
        case WorkerAction::Kind::select_suggestion: return "select_suggestion";
        case WorkerAction::Kind::select_transcript: return "select_transcript";
    }
    return "?";
}

inline std::optional<WorkerAction::Kind> parse_action_kind(std::string_view s) {
    using K = WorkerAction::Kind;
    for (auto k : {K::type_draft, K::send_draft, K::press_default, K::select_suggestion, K::select_transcript}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

struct LatencyRecord {
    std::string turn_id;
    Duration latency{};
    ResponseKind response_kind = ResponseKind::typed;
};

struct Turn {
    std::string turn_id;
    std::size_t index = 0;
    TimePoint user_message_received_at{};  // latency origin
    TimePoint opened_at{};                 // worker budget origin
    TimePoint deadline{};
    TurnPhase phase = TurnPhase::awaiting_worker;
    TranscriptBundle bundle;
    std::vector<Suggestion> suggestions;
    std::string draft;
    std::optional<Resolution> resolution;
    std::optional<ResponseKind> response_kind;
    std::string response_text;
    std::optional<TimePoint> response_recorded_at;

    bool in_flight() const { return phase == TurnPhase::awaiting_worker; }
};

struct Session {
    std::string session_id;
    SessionState state = SessionState::idle;
    std::vector<Turn> turns;
    std::optional<TimePoint> opened_at;
    std::optional<TimePoint> closed_at;

    Turn* active_turn() {
        if (turns.empty() || !turns.back().in_flight()) return nullptr;
        return &turns.back();
    }
    const Turn* active_turn() const {
        if (turns.empty() || !turns.back().in_flight()) return nullptr;
        return &turns.back();
    }
};

}  // namespace voicerelay
