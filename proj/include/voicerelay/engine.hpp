#pragma once

// Per-session turn state machine: worker budget, suggestion lock, cue timing
// and the timeout fallback policy. Pure logic over explicit timestamps; the
// relay drives it from its scheduler.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "voicerelay/domain.hpp"
#include "voicerelay/rng.hpp"
#include "voicerelay/suggestions.hpp"

namespace voicerelay {

/// Upper bound on how late a deadline may be observed by a polling driver.
inline constexpr Duration kTickGranularity{100};

class EngineError : public std::logic_error {
public:
    enum class Code { session_not_open, session_closed, turn_in_flight, no_active_turn, already_resolved };

    EngineError(Code code, const std::string& what) : std::logic_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

enum class CueKind { new_message_ding, ten_seconds_dong, suggestions_unlocked };

inline constexpr std::string_view to_string(CueKind k) {
    switch (k) {
        case CueKind::new_message_ding: return "new_message_ding";
        case CueKind::ten_seconds_dong: return "ten_seconds_dong";
        case CueKind::suggestions_unlocked: return "suggestions_unlocked";
    }
    return "?";
}

struct CueEvent {
    CueKind kind;
    std::string turn_id;
    TimePoint at;
};

struct ActionOutcome {
    enum class Status { accepted, resolved, rejected };
    enum class Reason { none, suggestion_locked, stale_action, index_out_of_range, empty_draft, unknown_turn };

    Status status = Status::accepted;
    Reason reason = Reason::none;
    std::string message;
    Duration lock_remaining{0};
    std::optional<LatencyRecord> record;

    bool rejected() const { return status == Status::rejected; }
    bool resolved() const { return status == Status::resolved; }

    static ActionOutcome reject(Reason r, std::string msg, Duration remaining = Duration{0}) {
        return {Status::rejected, r, std::move(msg), remaining, std::nullopt};
    }
};

inline constexpr std::string_view to_string(ActionOutcome::Reason r) {
    using R = ActionOutcome::Reason;
    switch (r) {
        case R::none: return "none";
        case R::suggestion_locked: return "suggestion_locked";
        case R::stale_action: return "stale_action";
        case R::index_out_of_range: return "index_out_of_range";
        case R::empty_draft: return "empty_draft";
        case R::unknown_turn: return "unknown_turn";
    }
    return "?";
}

struct TickResult {
    std::vector<CueEvent> cues;
    std::optional<LatencyRecord> record;
};

class SessionEngine {
public:
    SessionEngine(std::string session_id, DeadlineConfig cfg, std::uint64_t seed)
        : cfg_(validate_config(cfg)), seed_(seed) {
        session_.session_id = std::move(session_id);
    }

    const Session& session() const { return session_; }
    const DeadlineConfig& config() const { return cfg_; }
    const Turn* active_turn() const { return session_.active_turn(); }

    void open(TimePoint now) {
        if (session_.state != SessionState::idle)
            throw EngineError(EngineError::Code::session_not_open, "session already " + std::string(to_string(session_.state)));
        session_.state = SessionState::open;
        session_.opened_at = now;
    }

    /// Closes the session. An in-flight turn is abandoned, not resolved.
    std::optional<Turn> close(TimePoint now) {
        if (session_.state == SessionState::closed)
            throw EngineError(EngineError::Code::session_closed, "session closed");
        std::optional<Turn> abandoned;
        if (auto* t = session_.active_turn()) {
            t->phase = TurnPhase::abandoned;
            abandoned = *t;
        }
        session_.state = SessionState::closed;
        session_.closed_at = now;
        return abandoned;
    }

    /// Delivers a bundle to the worker and starts the budget clock at `now`.
    CueEvent open_turn(std::string turn_id, TimePoint received_at, TranscriptBundle bundle, TimePoint now) {
        require_open();
        if (session_.active_turn())
            throw EngineError(EngineError::Code::turn_in_flight, "turn in flight");
        Turn t;
        t.turn_id = std::move(turn_id);
        t.index = session_.turns.size();
        t.user_message_received_at = received_at;
        t.opened_at = now;
        t.deadline = now + cfg_.worker_budget;
        t.bundle = std::move(bundle);
        session_.turns.push_back(std::move(t));
        cues_ = {};
        cues_.ding = true;
        return CueEvent{CueKind::new_message_ding, session_.turns.back().turn_id, now};
    }

    /// Accepts a suggestion for the active turn. False once the turn resolved.
    bool add_suggestion(const std::string& turn_id, Suggestion s) {
        auto* t = session_.active_turn();
        if (!t || t->turn_id != turn_id || s.text.empty()) return false;
        t->suggestions.push_back(std::move(s));
        return true;
    }

    ActionOutcome apply(const std::string& turn_id, const WorkerAction& action, TimePoint now) {
        using R = ActionOutcome::Reason;
        if (session_.state == SessionState::closed) return ActionOutcome::reject(R::stale_action, "session closed");
        Turn* t = find_turn(turn_id);
        if (!t) return ActionOutcome::reject(R::unknown_turn, "unknown turn " + turn_id);
        if (!t->in_flight()) return ActionOutcome::reject(R::stale_action, "turn " + turn_id + " already resolved");

        switch (action.kind) {
            case WorkerAction::Kind::type_draft:
                t->draft = action.text;
                return {};
            case WorkerAction::Kind::select_transcript:
                if (action.index >= t->bundle.variant_count())
                    return ActionOutcome::reject(R::index_out_of_range, "transcript index out of range");
                t->bundle.selected_index = action.index;
                return {};
            case WorkerAction::Kind::send_draft: {
                if (!action.text.empty()) t->draft = action.text;
                if (t->draft.empty()) return ActionOutcome::reject(R::empty_draft, "draft is empty");
                const std::string text = t->draft;
                return resolved(resolve(text, ResponseKind::typed, Resolution::worker_sent, now));
            }
            case WorkerAction::Kind::press_default:
                if (action.index >= kDefaultResponses.size())
                    return ActionOutcome::reject(R::index_out_of_range, "default response index out of range");
                return resolved(resolve(std::string(kDefaultResponses[action.index]), ResponseKind::default_button,
                                        Resolution::worker_sent, now));
            case WorkerAction::Kind::select_suggestion: {
                const Duration elapsed = now - t->opened_at;
                if (elapsed < cfg_.suggestion_lock)
                    return ActionOutcome::reject(R::suggestion_locked, "suggestions are locked",
                                                 cfg_.suggestion_lock - elapsed);
                if (action.index >= t->suggestions.size())
                    return ActionOutcome::reject(R::index_out_of_range, "suggestion index out of range");
                const std::string text = t->suggestions[action.index].text;
                return resolved(resolve(text, ResponseKind::suggested, Resolution::worker_sent, now));
            }
        }
        return {};
    }

    /// Emits due cues and applies the timeout fallback once the deadline passed.
    TickResult tick(TimePoint now) {
        TickResult out;
        Turn* t = session_.active_turn();
        if (!t) return out;
        if (!cues_.unlocked && now >= t->opened_at + cfg_.suggestion_lock) {
            cues_.unlocked = true;
            out.cues.push_back({CueKind::suggestions_unlocked, t->turn_id, now});
        }
        if (!cues_.dong && now >= t->deadline - cfg_.warning_at_remaining && now < t->deadline) {
            cues_.dong = true;
            out.cues.push_back({CueKind::ten_seconds_dong, t->turn_id, now});
        }
        if (now >= t->deadline) out.record = resolve_timeout(*t, now);
        return out;
    }

    /// Resolves the active turn. Throws on a second resolution.
    LatencyRecord resolve(std::string text, ResponseKind kind, Resolution how, TimePoint now) {
        Turn* t = session_.active_turn();
        if (!t) throw EngineError(EngineError::Code::already_resolved, "no turn awaiting a response");
        t->phase = TurnPhase::resolved;
        t->resolution = how;
        t->response_kind = kind;
        t->response_text = std::move(text);
        t->response_recorded_at = now;
        if (!t->bundle.selected_index) t->bundle.selected_index = 0;
        return LatencyRecord{t->turn_id, now - t->user_message_received_at, kind};
    }

    /// Seed for the timeout draw of turn `index`.
    std::uint64_t turn_seed(std::size_t index) const { return mix_seed(seed_, index); }

private:
    struct CueFlags {
        bool ding = false;
        bool dong = false;
        bool unlocked = false;
    };

    void require_open() const {
        if (session_.state == SessionState::closed) throw EngineError(EngineError::Code::session_closed, "session closed");
        if (session_.state != SessionState::open) throw EngineError(EngineError::Code::session_not_open, "session not open");
    }

    Turn* find_turn(const std::string& id) {
        for (auto it = session_.turns.rbegin(); it != session_.turns.rend(); ++it)
            if (it->turn_id == id) return &*it;
        return nullptr;
    }

    static ActionOutcome resolved(LatencyRecord rec) {
        ActionOutcome o;
        o.status = ActionOutcome::Status::resolved;
        o.record = std::move(rec);
        return o;
    }

    LatencyRecord resolve_timeout(Turn& t, TimePoint now) {
        if (!t.draft.empty()) {
            const std::string text = t.draft;
            return resolve(text, ResponseKind::timeout_draft, Resolution::draft_flushed_on_timeout, now);
        }
        Rng rng(turn_seed(t.index));
        if (!t.suggestions.empty()) {
            const std::string text = t.suggestions[rng.below(t.suggestions.size())].text;
            return resolve(text, ResponseKind::timeout_random, Resolution::random_suggestion_on_timeout, now);
        }
        const auto pick = rng.below(kDefaultResponses.size());
        return resolve(std::string(kDefaultResponses[pick]), ResponseKind::timeout_default,
                       Resolution::default_fallback_on_timeout, now);
    }

    DeadlineConfig cfg_;
    std::uint64_t seed_;
    Session session_;
    CueFlags cues_;
};

}  // namespace voicerelay
