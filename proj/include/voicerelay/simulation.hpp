#pragma once

// End-to-end simulation: a scripted device and a synthetic worker talk to an
// in-process Relay over the JSON wire format, all on a virtual clock.

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "voicerelay/device_sim.hpp"
#include "voicerelay/relay.hpp"

namespace voicerelay {

enum class WorkerModel { button, typist, absent };

inline std::optional<WorkerModel> parse_worker_model(std::string_view s) {
    if (s == "button") return WorkerModel::button;
    if (s == "typist") return WorkerModel::typist;
    if (s == "absent") return WorkerModel::absent;
    return std::nullopt;
}

inline constexpr std::string_view to_string(WorkerModel m) {
    switch (m) {
        case WorkerModel::button: return "button";
        case WorkerModel::typist: return "typist";
        case WorkerModel::absent: return "absent";
    }
    return "?";
}

/// Replies the `typist` model types: 35 to 46 characters, mean 39.25.
inline constexpr std::array<std::string_view, 8> kTypistReplies = {
    "I think that sounds really fun to me.",           // 37
    "Oh nice, where did you go with them?",            // 36
    "I have never tried that, was it hard to learn?",  // 46
    "That is a good question, let me check.",          // 38
    "I like that one too, it is a classic.",           // 37
    "Really? I did not know that, tell me more!",      // 42
    "It depends on the weather, I guess.",             // 35
    "Sure, I can look that up for you right now.",     // 43
};

struct WorkerParams {
    WorkerModel model = WorkerModel::absent;
    Duration button_min{2000};
    Duration button_max{4000};
    Duration reaction_min{1000};
    Duration reaction_max{2000};
    Duration per_char{250};
};

/// Synthetic console client.
class SimulatedWorker {
public:
    SimulatedWorker(Relay& relay, Scheduler& sched, WorkerParams params, std::uint64_t seed)
        : relay_(relay), sched_(sched), params_(params), rng_(seed) {
        conn_ = relay_.connect(Role::console, [this](const std::string& raw) {
            sched_.post([this, raw] { on_message(decode(raw)); });
        });
    }

    SimulatedWorker(const SimulatedWorker&) = delete;
    SimulatedWorker& operator=(const SimulatedWorker&) = delete;

    std::size_t rejections() const { return rejections_; }

private:
    void on_message(const WireMessage& m) {
        switch (m.type) {
            case MessageType::transcript_bundle: plan_turn(m.session_id, m.turn_id); break;
            case MessageType::system_response: cancel_turn(m.turn_id); break;
            case MessageType::skill_close:
                if (auto it = m.payload.find("abandoned_turn_id"); it != m.payload.end())
                    cancel_turn(it->get<std::string>());
                break;
            case MessageType::error: ++rejections_; break;
            default: break;
        }
    }

    Duration draw(Duration lo, Duration hi) {
        return lo + Duration{static_cast<std::int64_t>(rng_.below(static_cast<std::uint64_t>((hi - lo).count()) + 1))};
    }

    void plan_turn(const std::string& sid, const std::string& tid) {
        auto& timers = timers_[tid];
        switch (params_.model) {
            case WorkerModel::absent: return;
            case WorkerModel::button: {
                const auto delay = draw(params_.button_min, params_.button_max);
                const auto which = rng_.below(kDefaultResponses.size());
                timers.push_back(sched_.after(delay, [=, this] { act(sid, tid, WorkerAction::press_default(which)); }));
                return;
            }
            case WorkerModel::typist: {
                const std::string reply(kTypistReplies[rng_.below(kTypistReplies.size())]);
                Duration t = draw(params_.reaction_min, params_.reaction_max);
                // A draft update at every word boundary, then send.
                for (std::size_t i = 1; i <= reply.size(); ++i) {
                    t += params_.per_char;
                    if (i == reply.size() || reply[i] == ' ') {
                        timers.push_back(sched_.after(
                            t, [=, this] { act(sid, tid, WorkerAction::type_draft(reply.substr(0, i))); }));
                    }
                }
                timers.push_back(sched_.after(t, [=, this] { act(sid, tid, WorkerAction::send_draft()); }));
                return;
            }
        }
    }

    void cancel_turn(const std::string& tid) {
        auto it = timers_.find(tid);
        if (it == timers_.end()) return;
        for (auto id : it->second) sched_.cancel(id);
        timers_.erase(it);
    }

    void act(const std::string& sid, const std::string& tid, const WorkerAction& a) {
        WireMessage m{MessageType::worker_action, ++seq_, sid, tid, sched_.now(), action_payload(a)};
        relay_.on_message(conn_, encode(m));
    }

    Relay& relay_;
    Scheduler& sched_;
    WorkerParams params_;
    Rng rng_;
    ConnectionId conn_ = 0;
    std::uint64_t seq_ = 0;
    std::size_t rejections_ = 0;
    std::map<std::string, std::vector<TimerId>> timers_;
};

/// Scripted device client.
class SimulatedDevice {
public:
    SimulatedDevice(Relay& relay, Scheduler& sched, Script script, CutoffModel cutoff, NoiseParams asr_noise,
                    const Lexicon& lex)
        : relay_(relay), sched_(sched), script_(std::move(script)), cutoff_(cutoff), noise_(asr_noise), asr_(lex) {
        conn_ = relay_.connect(Role::device, [this](const std::string& raw) {
            sched_.post([this, raw] { on_message(decode(raw)); });
        });
    }

    SimulatedDevice(const SimulatedDevice&) = delete;
    SimulatedDevice& operator=(const SimulatedDevice&) = delete;

    void start(std::string_view open_phrase) {
        const std::string phrase(open_phrase);
        sched_.post([this, phrase] { say(phrase); });
    }

    std::size_t utterances() const { return utterances_; }
    std::size_t responses() const { return responses_; }
    std::size_t cutoffs() const { return cutoffs_; }
    bool closed() const { return closed_; }

private:
    void on_message(const WireMessage& m) {
        switch (m.type) {
            case MessageType::skill_open: listen(); break;
            case MessageType::system_response: {
                ++responses_;
                const auto text = m.payload.value("text", std::string{});
                sched_.after(readout_time(text), [this] { listen(); });
                break;
            }
            case MessageType::skill_close: closed_ = true; break;
            default: break;
        }
    }

    void listen() {
        if (closed_) return;
        ScriptTurn words = std::move(remainder_);
        remainder_.clear();
        if (next_turn_ < script_.turns.size()) {
            const auto& next = script_.turns[next_turn_++];
            words.insert(words.end(), next.begin(), next.end());
        }
        if (words.empty()) {
            say("stop");
            return;
        }
        auto spoken = speak_turn(words, cutoff_);
        remainder_ = std::move(spoken.remainder);
        if (spoken.cut != SpokenTurn::Cut::none) ++cutoffs_;
        if (spoken.skill_closed) {
            sched_.after(spoken.listen_time, [this] { send(MessageType::skill_close, json::object()); });
            return;
        }
        NoiseParams n = noise_;
        n.rng_seed = mix_seed(noise_.rng_seed, utterances_);
        std::string transcript = asr_.transcribe(spoken.utterance(), n);
        if (transcript.empty()) transcript = normalize_text(spoken.utterance());
        sched_.after(spoken.listen_time, [this, transcript] { say(transcript); });
    }

    void say(const std::string& text) {
        ++utterances_;
        send(MessageType::user_utterance, {{"text", text}});
    }

    void send(MessageType type, json payload) {
        WireMessage m{type, ++seq_, {}, {}, sched_.now(), std::move(payload)};
        relay_.on_message(conn_, encode(m));
    }

    Relay& relay_;
    Scheduler& sched_;
    Script script_;
    CutoffModel cutoff_;
    NoiseParams noise_;
    AsrSimulator asr_;
    ConnectionId conn_ = 0;
    std::uint64_t seq_ = 0;
    std::size_t next_turn_ = 0;
    ScriptTurn remainder_;
    std::size_t utterances_ = 0;
    std::size_t responses_ = 0;
    std::size_t cutoffs_ = 0;
    bool closed_ = false;
};

struct SimulationSetup {
    RelayOptions relay;
    Script script;
    CutoffModel cutoff;
    NoiseParams asr_noise{0.0, 0.0, 0};
    WorkerParams worker;
    std::uint64_t seed = 0;
    TimePoint start{};
};

struct SimulationResult {
    std::vector<LatencyRecord> records;
    std::vector<std::string> event_log;  // canonical lines
    std::vector<Turn> turns;             // resolved and abandoned, in order
    std::size_t responses = 0;
    std::size_t abandoned = 0;
    std::size_t cutoffs = 0;
    TimePoint finished_at{};
};

/// Runs one scripted session to completion on a fresh virtual clock.
inline SimulationResult run_simulation(const SimulationSetup& setup, const Lexicon& lex, const RepairModel* repair,
                                       Suggester* suggester) {
    SimulatedScheduler sched(setup.start);
    MetricsStore metrics;
    RelayOptions opts = setup.relay;
    opts.seed = mix_seed(setup.seed, 1);
    Relay relay(opts, sched, repair, suggester, metrics);

    SimulatedWorker worker(relay, sched, setup.worker, mix_seed(setup.seed, 2));
    NoiseParams noise = setup.asr_noise;
    noise.rng_seed = mix_seed(setup.seed, 3);
    SimulatedDevice device(relay, sched, setup.script, setup.cutoff, noise, lex);
    device.start(opts.wake_word + ", open " + opts.skill_name);
    sched.run();

    SimulationResult out;
    out.records = metrics.snapshot();
    for (const auto& e : relay.event_log()) out.event_log.push_back(canonical_line(e));
    for (const auto* s : relay.sessions())
        for (const auto& t : s->turns) out.turns.push_back(t);
    out.responses = device.responses();
    out.abandoned = relay.abandoned_turns();
    out.cutoffs = device.cutoffs();
    out.finished_at = sched.now();
    return out;
}

}  // namespace voicerelay
