#pragma once

// Transport-independent gateway: owns sessions, routes device and console
// messages to the per-session engine, paces suggestions and dispatches
// responses. Every entry point must be called on the scheduler's thread.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "voicerelay/engine.hpp"
#include "voicerelay/metrics.hpp"
#include "voicerelay/protocol.hpp"
#include "voicerelay/repair.hpp"
#include "voicerelay/rng.hpp"
#include "voicerelay/scheduler.hpp"
#include "voicerelay/suggestions.hpp"

namespace voicerelay {

enum class Role { device, console };

inline constexpr std::string_view to_string(Role r) { return r == Role::device ? "device" : "console"; }

using ConnectionId = std::uint64_t;

/// One entry of the append-only event log.
struct LogEntry {
    enum class Direction { in, out };
    Direction dir;
    std::string connection;  // e.g. "device#1"
    WireMessage message;
};

inline std::string canonical_line(const LogEntry& e) {
    json j{{"dir", e.dir == LogEntry::Direction::in ? "in" : "out"}, {"conn", e.connection}, {"msg", to_json(e.message)}};
    return j.dump();
}

struct RelayOptions {
    DeadlineConfig deadlines;
    std::string token;  // empty: no authentication
    std::string skill_name = "echopal";
    std::string wake_word = "alexa";
    std::uint64_t seed = 0;
    bool retain_log = true;  // keep the event log in memory
};

class Relay {
public:
    using Send = std::function<void(const std::string&)>;
    using RecordHook = std::function<void(const Turn&, const LatencyRecord&)>;

    Relay(RelayOptions opts, Scheduler& sched, const RepairModel* repair, Suggester* suggester, MetricsStore& metrics)
        : opts_(std::move(opts)),
          sched_(sched),
          repair_(repair),
          suggester_(suggester),
          limiter_(opts_.deadlines.suggester_min_interval),
          metrics_(metrics) {
        validate_config(opts_.deadlines);
    }

    Relay(const Relay&) = delete;
    Relay& operator=(const Relay&) = delete;

    ~Relay() {
        for (auto& [id, s] : sessions_) stop_turn_activity(*s);
    }

    bool authorize(std::string_view token) const { return opts_.token.empty() || token == opts_.token; }

    ConnectionId connect(Role role, Send send) {
        const ConnectionId id = ++next_conn_;
        const auto n = ++role_counter_[role];
        connections_[id] = Connection{role, std::string(to_string(role)) + "#" + std::to_string(n), std::move(send), 0, {}};
        return id;
    }

    void disconnect(ConnectionId id) {
        auto it = connections_.find(id);
        if (it == connections_.end()) return;
        if (it->second.role == Role::device && !it->second.session_id.empty()) {
            if (auto* s = find_session(it->second.session_id); s && s->engine.session().state == SessionState::open)
                close_session(*s, "device_disconnected");
        }
        connections_.erase(it);
    }

    /// Entry point for one inbound text frame / line.
    void on_message(ConnectionId id, std::string_view raw) {
        auto it = connections_.find(id);
        if (it == connections_.end()) return;
        WireMessage msg;
        try {
            msg = decode(raw);
        } catch (const ProtocolError& e) {
            send_error(id, "", "", "bad_message", e.what());
            return;
        }
        msg.at = sched_.now();
        append_log({LogEntry::Direction::in, it->second.label, msg});
        if (it->second.role == Role::device) {
            on_device(id, msg);
        } else {
            on_console(id, msg);
        }
    }

    const std::vector<LogEntry>& event_log() const { return log_; }
    const RelayOptions& options() const { return opts_; }
    RateLimiter& limiter() { return limiter_; }

    /// In creation order.
    std::vector<const Session*> sessions() const {
        std::vector<const Session*> out;
        for (const auto& id : session_order_) out.push_back(&sessions_.at(id)->engine.session());
        return out;
    }

    const Session* session(const std::string& id) const {
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : &it->second->engine.session();
    }

    std::size_t abandoned_turns() const { return abandoned_; }

    /// Receives every log entry as it is appended.
    void on_log(std::function<void(const LogEntry&)> sink) { log_sink_ = std::move(sink); }

    /// Called after each resolution with the final turn state.
    void on_record(RecordHook hook) { record_hook_ = std::move(hook); }

private:
    struct Connection {
        Role role;
        std::string label;
        Send send;
        std::uint64_t seq;
        std::string session_id;  // devices only
    };

    struct SessionCtx {
        SessionCtx(std::string id, const DeadlineConfig& cfg, std::uint64_t seed) : engine(std::move(id), cfg, seed) {}
        SessionEngine engine;
        ConnectionId device = 0;
        std::shared_ptr<SuggestionSchedule> schedule;
        std::vector<TimerId> timers;
        std::size_t turn_counter = 0;
    };

    // -- inbound -----------------------------------------------------------

    void on_device(ConnectionId id, const WireMessage& msg) {
        auto& conn = connections_.at(id);
        SessionCtx* s = conn.session_id.empty() ? nullptr : find_session(conn.session_id);
        const bool open = s && s->engine.session().state == SessionState::open;

        if (msg.type == MessageType::skill_close) {
            if (open) close_session(*s, "device");
            return;
        }
        if (msg.type != MessageType::user_utterance) {
            send_error(id, conn.session_id, "", "unexpected_type", "devices send user_utterance or skill_close");
            return;
        }
        const auto text_it = msg.payload.find("text");
        if (text_it == msg.payload.end() || !text_it->is_string()) {
            send_error(id, conn.session_id, "", "bad_message", "user_utterance needs payload.text");
            return;
        }
        const std::string text = text_it->get<std::string>();

        switch (classify_device_line(text, opts_.skill_name, opts_.wake_word)) {
            case DeviceIntent::skill_open: {
                if (open) {
                    send_error(id, conn.session_id, "", "already_open", "skill already open");
                    return;
                }
                auto& ctx = create_session(id);
                ctx.engine.open(sched_.now());
                const auto& sid = ctx.engine.session().session_id;
                send(id, MessageType::skill_open, sid, "", json::object());
                broadcast_consoles(MessageType::skill_open, sid, "", json::object());
                return;
            }
            case DeviceIntent::skill_close:
                if (!open) {
                    send_error(id, conn.session_id, "", "skill_not_open", "skill not open");
                    return;
                }
                close_session(*s, "user");
                return;
            case DeviceIntent::user_utterance:
                if (!open) {
                    send_error(id, conn.session_id, "", "skill_not_open", "skill not open");
                    return;
                }
                start_turn(*s, text);
                return;
        }
    }

    void on_console(ConnectionId id, const WireMessage& msg) {
        if (msg.type != MessageType::worker_action) {
            send_error(id, msg.session_id, msg.turn_id, "unexpected_type", "consoles send worker_action");
            return;
        }
        SessionCtx* s = find_session(msg.session_id);
        if (!s) {
            send_error(id, msg.session_id, msg.turn_id, "unknown_session", "unknown session " + msg.session_id);
            return;
        }
        WorkerAction action;
        try {
            action = parse_action(msg.payload, msg.at);
        } catch (const ProtocolError& e) {
            send_error(id, msg.session_id, msg.turn_id, "bad_message", e.what());
            return;
        }
        const auto outcome = s->engine.apply(msg.turn_id, action, sched_.now());
        if (outcome.rejected()) {
            json extra;
            if (outcome.reason == ActionOutcome::Reason::suggestion_locked)
                extra["lock_remaining_ms"] = outcome.lock_remaining.count();
            send_error(id, msg.session_id, msg.turn_id, std::string(to_string(outcome.reason)), outcome.message,
                       std::move(extra));
            return;
        }
        if (outcome.resolved()) finish_turn(*s, *outcome.record);
    }

    // -- turn lifecycle ----------------------------------------------------

    void start_turn(SessionCtx& s, const std::string& text) {
        const TimePoint received = sched_.now();
        if (s.engine.active_turn()) {
            send_error(s.device, s.engine.session().session_id, s.engine.active_turn()->turn_id, "turn_in_flight",
                       "turn in flight");
            return;
        }
        auto bundle = make_bundle(text, repair_, opts_.deadlines.alternatives_count);
        const auto& sid = s.engine.session().session_id;
        std::string turn_id = sid + "-t" + std::to_string(++s.turn_counter);
        const TimePoint opened = sched_.now();
        const auto ding = s.engine.open_turn(turn_id, received, bundle, opened);
        const Turn& t = *s.engine.active_turn();

        json p = bundle_payload(bundle);
        p["received_at"] = to_millis(received);
        p["deadline_at"] = to_millis(t.deadline);
        p["lock_until"] = to_millis(t.opened_at + opts_.deadlines.suggestion_lock);
        broadcast_consoles(MessageType::transcript_bundle, sid, turn_id, p);
        broadcast_consoles(MessageType::cue, sid, turn_id, {{"kind", std::string(to_string(ding.kind))}});

        const auto& cfg = opts_.deadlines;
        for (TimePoint when : {t.opened_at + cfg.suggestion_lock, t.deadline - cfg.warning_at_remaining, t.deadline}) {
            s.timers.push_back(sched_.at(when, [this, sid] { on_tick(sid); }));
        }

        if (suggester_) {
            s.schedule = SuggestionSchedule::start(
                plan_requests(bundle, cfg), bundle, turn_id, *suggester_, limiter_, t.deadline, sched_,
                [this, sid, turn_id](const Suggestion& sug) { on_suggestion(sid, turn_id, sug); });
        }
    }

    void on_suggestion(const std::string& sid, const std::string& turn_id, const Suggestion& sug) {
        SessionCtx* s = find_session(sid);
        if (!s || !s->engine.add_suggestion(turn_id, sug)) return;
        const auto index = s->engine.active_turn()->suggestions.size() - 1;
        broadcast_consoles(MessageType::suggestion, sid, turn_id,
                           {{"index", index}, {"text", sug.text}, {"variant_index", sug.variant_index}, {"source", sug.source}});
    }

    void on_tick(const std::string& sid) {
        SessionCtx* s = find_session(sid);
        if (!s || !s->engine.active_turn()) return;
        const std::string turn_id = s->engine.active_turn()->turn_id;
        auto r = s->engine.tick(sched_.now());
        for (const auto& cue : r.cues)
            broadcast_consoles(MessageType::cue, sid, turn_id, {{"kind", std::string(to_string(cue.kind))}});
        if (r.record) finish_turn(*s, *r.record);
    }

    void finish_turn(SessionCtx& s, const LatencyRecord& rec) {
        stop_turn_activity(s);
        metrics_.record(rec);
        const Turn& t = s.engine.session().turns.back();
        if (record_hook_) record_hook_(t, rec);
        dispatch_response(s, t, rec);
    }

    /// One system_response per resolved turn, to the device and every console.
    void dispatch_response(SessionCtx& s, const Turn& t, const LatencyRecord& rec) {
        const auto& sid = s.engine.session().session_id;
        json p{{"text", t.response_text},
               {"kind", std::string(to_string(rec.response_kind))},
               {"latency_ms", rec.latency.count()},
               {"selected_index", t.bundle.selected_index.value_or(0)},
               {"selected_text", t.bundle.selected_text()}};
        if (s.device) send(s.device, MessageType::system_response, sid, t.turn_id, p);
        broadcast_consoles(MessageType::system_response, sid, t.turn_id, p);
    }

    void close_session(SessionCtx& s, const std::string& reason) {
        stop_turn_activity(s);
        auto abandoned = s.engine.close(sched_.now());
        const auto& sid = s.engine.session().session_id;
        json p{{"reason", reason}};
        if (abandoned) {
            ++abandoned_;
            p["abandoned_turn_id"] = abandoned->turn_id;
        }
        if (s.device && connections_.count(s.device)) {
            send(s.device, MessageType::skill_close, sid, "", p);
            connections_.at(s.device).session_id.clear();
        }
        broadcast_consoles(MessageType::skill_close, sid, "", p);
    }

    void stop_turn_activity(SessionCtx& s) {
        if (s.schedule) s.schedule->cancel();
        s.schedule.reset();
        for (auto id : s.timers) sched_.cancel(id);
        s.timers.clear();
    }

    // -- helpers -----------------------------------------------------------

    SessionCtx& create_session(ConnectionId device) {
        const std::string sid = "s" + std::to_string(++session_counter_);
        auto ctx = std::make_unique<SessionCtx>(sid, opts_.deadlines, mix_seed(opts_.seed, session_counter_));
        ctx->device = device;
        connections_.at(device).session_id = sid;
        auto& ref = *ctx;
        sessions_.emplace(sid, std::move(ctx));
        session_order_.push_back(sid);
        return ref;
    }

    void append_log(LogEntry e) {
        if (log_sink_) log_sink_(e);
        if (opts_.retain_log) log_.push_back(std::move(e));
    }

    SessionCtx* find_session(const std::string& id) {
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second.get();
    }

    void send(ConnectionId id, MessageType type, const std::string& sid, const std::string& turn_id, json payload) {
        auto it = connections_.find(id);
        if (it == connections_.end()) return;
        WireMessage m{type, ++it->second.seq, sid, turn_id, sched_.now(), std::move(payload)};
        append_log({LogEntry::Direction::out, it->second.label, m});
        try {
            it->second.send(encode(m));
        } catch (const std::exception& e) {
            spdlog::warn("send to {} failed: {}", it->second.label, e.what());
        }
    }

    void broadcast_consoles(MessageType type, const std::string& sid, const std::string& turn_id, const json& payload) {
        for (auto& [id, c] : connections_)
            if (c.role == Role::console) send(id, type, sid, turn_id, payload);
    }

    void send_error(ConnectionId id, const std::string& sid, const std::string& turn_id, const std::string& code,
                    const std::string& message, json extra = json::object()) {
        json p = extra.is_object() ? std::move(extra) : json::object();
        p["code"] = code;
        p["message"] = message;
        send(id, MessageType::error, sid, turn_id, std::move(p));
    }

    RelayOptions opts_;
    Scheduler& sched_;
    const RepairModel* repair_;
    Suggester* suggester_;
    RateLimiter limiter_;
    MetricsStore& metrics_;
    RecordHook record_hook_;
    std::function<void(const LogEntry&)> log_sink_;

    std::map<ConnectionId, Connection> connections_;
    std::map<Role, std::uint64_t> role_counter_;
    std::map<std::string, std::unique_ptr<SessionCtx>> sessions_;
    std::vector<std::string> session_order_;
    std::vector<LogEntry> log_;
    ConnectionId next_conn_ = 0;
    std::uint64_t session_counter_ = 0;
    std::size_t abandoned_ = 0;
};

}  // namespace voicerelay
