#include <gtest/gtest.h>

#include "voicerelay/protocol.hpp"

using namespace voicerelay;
using namespace std::chrono_literals;

TEST(WireMessage, EncodeIsCanonical) {
    WireMessage m{MessageType::cue, 3, "s1", "s1-t2", TimePoint{} + 1500ms, {{"kind", "new_message_ding"}}};
    EXPECT_EQ(encode(m),
              R"({"at":1500,"payload":{"kind":"new_message_ding"},"seq":3,"session_id":"s1","turn_id":"s1-t2","type":"cue"})");
    WireMessage bare{MessageType::skill_open, 1, {}, {}, TimePoint{}, json::object()};
    EXPECT_EQ(encode(bare), R"({"at":0,"payload":{},"seq":1,"session_id":null,"turn_id":null,"type":"skill_open"})");
}

TEST(WireMessage, RoundTripAllTypes) {
    for (int i = 0; i <= static_cast<int>(MessageType::error); ++i) {
        WireMessage m{static_cast<MessageType>(i), 7, "s9", "s9-t1", TimePoint{} + 42ms, {{"x", 1}}};
        auto back = decode(encode(m));
        EXPECT_EQ(back.type, m.type);
        EXPECT_EQ(back.seq, 7u);
        EXPECT_EQ(back.session_id, "s9");
        EXPECT_EQ(back.turn_id, "s9-t1");
        EXPECT_EQ(back.at, m.at);
        EXPECT_EQ(back.payload, m.payload);
        EXPECT_EQ(parse_message_type(to_string(m.type)), m.type);
    }
}

TEST(WireMessage, DecodeErrors) {
    EXPECT_THROW(decode("{not json"), ProtocolError);
    EXPECT_THROW(decode("[1,2]"), ProtocolError);
    EXPECT_THROW(decode(R"({"seq":1})"), ProtocolError);
    EXPECT_THROW(decode(R"({"type":"bogus"})"), ProtocolError);
    EXPECT_THROW(decode(R"({"type":"cue","payload":[]})"), ProtocolError);
    auto minimal = decode(R"({"type":"user_utterance"})");
    EXPECT_EQ(minimal.type, MessageType::user_utterance);
    EXPECT_TRUE(minimal.payload.is_object());
}

TEST(DeviceIntent, EnteringAndExiting) {
    EXPECT_EQ(classify_device_line("Alexa, open EchoPal"), DeviceIntent::skill_open);
    EXPECT_EQ(classify_device_line("open echopal"), DeviceIntent::skill_open);
    EXPECT_EQ(classify_device_line("stop"), DeviceIntent::skill_close);
    EXPECT_EQ(classify_device_line("Alexa, cancel."), DeviceIntent::skill_close);
    EXPECT_EQ(classify_device_line("please stop talking"), DeviceIntent::user_utterance);
    EXPECT_EQ(classify_device_line("open the door"), DeviceIntent::user_utterance);
    EXPECT_EQ(classify_device_line("computer open chatbuddy", "chatbuddy", "computer"), DeviceIntent::skill_open);
}

TEST(Payloads, BundleShape) {
    TranscriptBundle b{"hi there", {{"hi their", 0.25}}, std::nullopt};
    auto p = bundle_payload(b);
    EXPECT_EQ(p["original"], "hi there");
    ASSERT_EQ(p["alternatives"].size(), 1u);
    EXPECT_EQ(p["alternatives"][0]["text"], "hi their");
    EXPECT_EQ(p["alternatives"][0]["distance"], 0.25);
}

TEST(Payloads, ActionRoundTrip) {
    const std::vector<WorkerAction> actions = {
        WorkerAction::type_draft("hel"), WorkerAction::send_draft(), WorkerAction::press_default(3),
        WorkerAction::select_suggestion(2), WorkerAction::select_transcript(1)};
    for (const auto& a : actions) {
        auto back = parse_action(action_payload(a), TimePoint{} + 5s);
        EXPECT_EQ(back.kind, a.kind);
        EXPECT_EQ(back.index, a.index);
        EXPECT_EQ(back.text, a.text);
        EXPECT_EQ(back.at, TimePoint{} + 5s);
    }
}

TEST(Payloads, ActionErrors) {
    EXPECT_THROW(parse_action(json::object(), {}), ProtocolError);
    EXPECT_THROW(parse_action({{"kind", "dance"}}, {}), ProtocolError);
    EXPECT_THROW(parse_action({{"kind", "press_default"}}, {}), ProtocolError);
    EXPECT_THROW(parse_action({{"kind", "press_default"}, {"index", -1}}, {}), ProtocolError);
    EXPECT_THROW(parse_action({{"kind", "type_draft"}, {"text", 5}}, {}), ProtocolError);
    EXPECT_EQ(parse_action({{"kind", "send_draft"}, {"text", "ok"}}, {}).text, "ok");
}
