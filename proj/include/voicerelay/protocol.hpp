#pragma once

// JSON wire messages exchanged with device and console connections. See
// docs/protocol.md for the payload of each message type.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "voicerelay/domain.hpp"
#include "voicerelay/text.hpp"

namespace voicerelay {

using json = nlohmann::json;

class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MessageType {
    skill_open,
    user_utterance,
    transcript_bundle,
    suggestion,
    cue,
    worker_action,
    system_response,
    skill_close,
    error,
};

inline constexpr std::string_view to_string(MessageType t) {
    switch (t) {
        case MessageType::skill_open: return "skill_open";
        case MessageType::user_utterance: return "user_utterance";
        case MessageType::transcript_bundle: return "transcript_bundle";
        case MessageType::suggestion: return "suggestion";
        case MessageType::cue: return "cue";
        case MessageType::worker_action: return "worker_action";
        case MessageType::system_response: return "system_response";
        case MessageType::skill_close: return "skill_close";
        case MessageType::error: return "error";
    }
    return "?";
}

inline std::optional<MessageType> parse_message_type(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(MessageType::error); ++i) {
        auto t = static_cast<MessageType>(i);
        if (to_string(t) == s) return t;
    }
    return std::nullopt;
}

struct WireMessage {
    MessageType type = MessageType::error;
    std::uint64_t seq = 0;
    std::string session_id;
    std::string turn_id;
    TimePoint at{};
    json payload = json::object();
};

/// nlohmann::json keeps object keys sorted, so dump() is already canonical.
inline json to_json(const WireMessage& m) {
    json j;
    j["type"] = std::string(to_string(m.type));
    j["seq"] = m.seq;
    j["session_id"] = m.session_id.empty() ? json(nullptr) : json(m.session_id);
    j["turn_id"] = m.turn_id.empty() ? json(nullptr) : json(m.turn_id);
    j["at"] = to_millis(m.at);
    j["payload"] = m.payload.is_null() ? json::object() : m.payload;
    return j;
}

inline std::string encode(const WireMessage& m) { return to_json(m).dump(); }

inline WireMessage from_json(const json& j) {
    if (!j.is_object()) throw ProtocolError("message must be a JSON object");
    WireMessage m;
    const auto type_it = j.find("type");
    if (type_it == j.end() || !type_it->is_string()) throw ProtocolError("missing 'type'");
    auto type = parse_message_type(type_it->get<std::string>());
    if (!type) throw ProtocolError("unknown message type '" + type_it->get<std::string>() + "'");
    m.type = *type;
    if (auto it = j.find("seq"); it != j.end() && it->is_number_unsigned()) m.seq = it->get<std::uint64_t>();
    if (auto it = j.find("session_id"); it != j.end() && it->is_string()) m.session_id = it->get<std::string>();
    if (auto it = j.find("turn_id"); it != j.end() && it->is_string()) m.turn_id = it->get<std::string>();
    if (auto it = j.find("at"); it != j.end() && it->is_number_integer()) m.at = from_millis(it->get<std::int64_t>());
    if (auto it = j.find("payload"); it != j.end()) {
        if (!it->is_object()) throw ProtocolError("'payload' must be an object");
        m.payload = *it;
    }
    return m;
}

inline WireMessage decode(std::string_view raw) {
    json j;
    try {
        j = json::parse(raw);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    return from_json(j);
}

// ---------------------------------------------------------------------------
// Device utterance routing

enum class DeviceIntent { skill_open, skill_close, user_utterance };

/// Classifies a transcribed device utterance. A leading wake word is
/// ignored; "open <skill>" opens, a bare "cancel" or "stop" closes.
inline DeviceIntent classify_device_line(std::string_view text, std::string_view skill_name = "echopal",
                                         std::string_view wake_word = "alexa") {
    auto words = split_words(normalize_text(text));
    if (!words.empty() && words.front() == wake_word) words.erase(words.begin());
    if (words.size() == 2 && words[0] == "open" && words[1] == normalize_text(skill_name)) return DeviceIntent::skill_open;
    if (words.size() == 1 && (words[0] == "cancel" || words[0] == "stop")) return DeviceIntent::skill_close;
    return DeviceIntent::user_utterance;
}

// ---------------------------------------------------------------------------
// Payload helpers

inline json bundle_payload(const TranscriptBundle& b) {
    json alts = json::array();
    for (const auto& a : b.alternatives) alts.push_back({{"text", a.text}, {"distance", a.distance}});
    return {{"original", b.original}, {"alternatives", alts}};
}

inline json action_payload(const WorkerAction& a) {
    json p{{"kind", std::string(to_string(a.kind))}};
    switch (a.kind) {
        case WorkerAction::Kind::type_draft: p["text"] = a.text; break;
        case WorkerAction::Kind::send_draft:
            if (!a.text.empty()) p["text"] = a.text;
            break;
        default: p["index"] = a.index; break;
    }
    return p;
}

inline WorkerAction parse_action(const json& p, TimePoint at) {
    const auto kind_it = p.find("kind");
    if (kind_it == p.end() || !kind_it->is_string()) throw ProtocolError("worker_action needs 'kind'");
    auto kind = parse_action_kind(kind_it->get<std::string>());
    if (!kind) throw ProtocolError("unknown action kind '" + kind_it->get<std::string>() + "'");
    WorkerAction a;
    a.kind = *kind;
    a.at = at;
    if (auto it = p.find("text"); it != p.end()) {
        if (!it->is_string()) throw ProtocolError("'text' must be a string");
        a.text = it->get<std::string>();
    }
    const bool indexed = a.kind == WorkerAction::Kind::press_default || a.kind == WorkerAction::Kind::select_suggestion ||
                         a.kind == WorkerAction::Kind::select_transcript;
    if (indexed) {
        auto it = p.find("index");
        if (it == p.end() || !it->is_number_unsigned()) throw ProtocolError("'index' must be a non-negative integer");
        a.index = it->get<std::size_t>();
    }
    return a;
}

}  // namespace voicerelay
