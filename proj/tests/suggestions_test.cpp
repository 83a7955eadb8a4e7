#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "test_data.hpp"
#include "voicerelay/suggestions.hpp"

using namespace voicerelay;
using namespace std::chrono_literals;

namespace {

std::vector<std::pair<int, int>> pairs_of(const std::vector<SuggestionRequest>& plan) {
    std::vector<std::pair<int, int>> out;
    for (const auto& r : plan) out.emplace_back(r.variant_index, r.slot);
    return out;
}

class EchoSuggester : public Suggester {
public:
    std::string name() const override { return "echo"; }
    std::optional<std::string> suggest(const SuggestionQuery& q) override {
        ++calls;
        if (fail_every && calls % fail_every == 0) return std::nullopt;
        return q.utterance + "#" + std::to_string(q.slot);
    }
    int calls = 0;
    int fail_every = 0;
};

class DownSuggester : public EchoSuggester {
public:
    bool available() const override { return false; }
};

TranscriptBundle bundle3() {
    return {"hello there", {{"hello their", 0.1}, {"yellow there", 0.2}, {"hollow there", 0.3}}, std::nullopt};
}

}  // namespace

TEST(PlanRequests, ThreeAlternativesQuotaFive) {
    const auto plan = plan_requests(3, 5);
    // Hand enumeration of the ordering rule.
    const std::vector<std::pair<int, int>> expected = {
        {0, 1}, {0, 2}, {0, 3},                  //
        {1, 1}, {2, 1}, {3, 1}, {0, 4},          //
        {1, 2}, {2, 2}, {3, 2}, {0, 5},          //
        {1, 3}, {2, 3}, {3, 3},                  //
        {1, 4}, {2, 4}, {3, 4},                  //
        {1, 5}, {2, 5}, {3, 5},
    };
    EXPECT_EQ(pairs_of(plan), expected);
    ASSERT_EQ(plan.size(), 20u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(plan[i].variant_index, 0);
    for (std::size_t i = 0; i < plan.size(); ++i) EXPECT_EQ(plan[i].scheduled_order, i);
}

TEST(PlanRequests, NoAlternatives) {
    const auto plan = plan_requests(0, 5);
    ASSERT_EQ(plan.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(plan[i].variant_index, 0);
        EXPECT_EQ(plan[i].slot, static_cast<int>(i) + 1);
    }
}

TEST(PlanRequests, QuotaBelowOriginalHead) {
    EXPECT_EQ(pairs_of(plan_requests(1, 1)), (std::vector<std::pair<int, int>>{{0, 1}, {1, 1}}));
    EXPECT_EQ(pairs_of(plan_requests(2, 2)),
              (std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 1}, {2, 1}, {1, 2}, {2, 2}}));
    EXPECT_TRUE(plan_requests(3, 0).empty());
}

TEST(PlanRequests, EachPairOnceProperty) {
    for (std::size_t alts = 0; alts <= 6; ++alts) {
        for (int quota = 1; quota <= 8; ++quota) {
            const auto plan = plan_requests(alts, quota);
            ASSERT_EQ(plan.size(), (alts + 1) * static_cast<std::size_t>(quota));
            std::set<std::pair<int, int>> seen;
            for (const auto& r : plan) {
                EXPECT_GE(r.slot, 1);
                EXPECT_LE(r.slot, quota);
                EXPECT_TRUE(seen.insert({r.variant_index, r.slot}).second);
            }
            // Slots of one variant are issued in increasing order.
            std::map<int, int> last;
            for (const auto& r : plan) {
                EXPECT_GT(r.slot, last[r.variant_index]);
                last[r.variant_index] = r.slot;
            }
        }
    }
}

TEST(PlanRequests, FromBundleAndConfig) {
    DeadlineConfig cfg;
    EXPECT_EQ(plan_requests(bundle3(), cfg).size(), 20u);
}

TEST(RateLimiter, SpacingAndDeadline) {
    RateLimiter lim(1000ms);
    const TimePoint t0{};
    EXPECT_EQ(lim.reserve(t0, t0 + 25s), t0);
    EXPECT_EQ(lim.reserve(t0, t0 + 25s), t0 + 1s);
    EXPECT_EQ(lim.reserve(t0 + 5s, t0 + 25s), t0 + 5s);
    EXPECT_EQ(lim.reserve(t0 + 5s, t0 + 6s), std::nullopt);  // slot 6 s is not before the deadline
    EXPECT_EQ(lim.reserve(t0 + 5s, t0 + 25s), t0 + 6s);
}

TEST(RateLimiter, ConcurrentReservationsStaySpaced) {
    RateLimiter lim(10ms);
    std::vector<TimePoint> got;
    std::mutex mu;
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 100; ++i) {
                auto s = lim.reserve(TimePoint{}, TimePoint{} + 1h);
                std::lock_guard lock(mu);
                got.push_back(*s);
            }
        });
    }
    for (auto& t : threads) t.join();
    std::sort(got.begin(), got.end());
    ASSERT_EQ(got.size(), 800u);
    for (std::size_t i = 1; i < got.size(); ++i) EXPECT_GE(got[i] - got[i - 1], 10ms);
}

TEST(SuggestionSchedule, TwentyRequestsPacedOverTwentySeconds) {
    SimulatedScheduler sched;
    RateLimiter lim(1000ms);
    EchoSuggester echo;
    std::vector<Suggestion> got;
    const auto b = bundle3();
    auto s = SuggestionSchedule::start(plan_requests(3, 5), b, "t1", echo, lim, sched.now() + 25s, sched,
                                       [&](const Suggestion& x) { got.push_back(x); });
    sched.run();
    const auto& issued = s->issue_times();
    ASSERT_EQ(issued.size(), 20u);
    for (std::size_t i = 1; i < issued.size(); ++i) EXPECT_GE(issued[i] - issued[i - 1], 1000ms);
    EXPECT_GE(issued.back() - issued.front(), 19s);
    ASSERT_EQ(got.size(), 20u);
    EXPECT_EQ(got[0].text, "hello there#1");
    EXPECT_EQ(got[3].text, "hello their#1");
    EXPECT_EQ(got[3].variant_index, 1);
    EXPECT_EQ(got[0].source, "echo");
    EXPECT_TRUE(s->done());
}

TEST(SuggestionSchedule, StopsAtDeadline) {
    SimulatedScheduler sched;
    RateLimiter lim(1000ms);
    EchoSuggester echo;
    std::size_t n = 0;
    auto s = SuggestionSchedule::start(plan_requests(3, 5), bundle3(), "t1", echo, lim, sched.now() + 7500ms, sched,
                                       [&](const Suggestion&) { ++n; });
    sched.run();
    EXPECT_EQ(s->issue_times().size(), 8u);  // 0..7 s
    EXPECT_EQ(n, 8u);
}

TEST(SuggestionSchedule, CancelDropsLateResults) {
    SimulatedScheduler sched;
    RateLimiter lim(1000ms);
    EchoSuggester echo;
    std::size_t n = 0;
    auto s = SuggestionSchedule::start(plan_requests(3, 5), bundle3(), "t1", echo, lim, sched.now() + 25s, sched,
                                       [&](const Suggestion&) { ++n; });
    sched.run_until(sched.now() + 2500ms);
    s->cancel();
    sched.run();
    EXPECT_EQ(s->issue_times().size(), 3u);
    EXPECT_EQ(n, 3u);
    EXPECT_TRUE(s->cancelled());
}

TEST(SuggestionSchedule, FailuresAreSkipped) {
    SimulatedScheduler sched;
    RateLimiter lim(1000ms);
    EchoSuggester echo;
    echo.fail_every = 4;
    std::size_t n = 0;
    auto s = SuggestionSchedule::start(plan_requests(3, 5), bundle3(), "t1", echo, lim, sched.now() + 25s, sched,
                                       [&](const Suggestion&) { ++n; });
    sched.run();
    EXPECT_EQ(s->issue_times().size(), 20u);
    EXPECT_EQ(s->failures(), 5u);
    EXPECT_EQ(n, 15u);
}

TEST(SuggestionSchedule, UnavailableSuggesterIssuesNothing) {
    SimulatedScheduler sched;
    RateLimiter lim(1000ms);
    DownSuggester down;
    auto s = SuggestionSchedule::start(plan_requests(3, 5), bundle3(), "t1", down, lim, sched.now() + 25s, sched,
                                       [](const Suggestion&) { FAIL(); });
    sched.run();
    EXPECT_TRUE(s->done());
    EXPECT_EQ(down.calls, 0);
}

TEST(SuggestionSchedule, SharedLimiterPacesAcrossTurns) {
    SimulatedScheduler sched;
    RateLimiter lim(1000ms);
    EchoSuggester echo;
    auto a = SuggestionSchedule::start(plan_requests(0, 5), bundle3(), "a", echo, lim, sched.now() + 25s, sched,
                                       [](const Suggestion&) {});
    auto b = SuggestionSchedule::start(plan_requests(0, 5), bundle3(), "b", echo, lim, sched.now() + 25s, sched,
                                       [](const Suggestion&) {});
    sched.run();
    std::vector<TimePoint> all = a->issue_times();
    all.insert(all.end(), b->issue_times().begin(), b->issue_times().end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), 10u);
    for (std::size_t i = 1; i < all.size(); ++i) EXPECT_GE(all[i] - all[i - 1], 1000ms);
}

TEST(CorpusReplySuggester, NearestPromptReply) {
    std::vector<DialoguePair> pairs = {
        {"what is your favorite movie", "I really like old comedies."},
        {"do you like music", "Yes, mostly jazz."},
        {"what is your favorite food", "Pizza, every time."},
    };
    const auto& lex = voicerelay::testing::lexicon();
    EXPECT_EQ(corpus_reply_suggester("do you like music", pairs, lex), "Yes, mostly jazz.");
    CorpusReplySuggester s(pairs, lex);
    EXPECT_EQ(s.suggest({"what is your favorite moovie", 0, 1, "t"}), "I really like old comedies.");
    EXPECT_EQ(s.suggest({"what is your favorite moovie", 0, 2, "t"}), "Pizza, every time.");
    EXPECT_EQ(s.suggest({"what is your favorite moovie", 0, 4, "t"}), std::nullopt);
}

TEST(CorpusReplySuggester, ShippedPairsLoad) {
    auto pairs = load_dialogue_pairs(voicerelay::testing::data_path("dialogue_pairs.tsv"));
    EXPECT_GE(pairs.size(), 100u);
    CorpusReplySuggester s(pairs, voicerelay::testing::lexicon());
    for (int slot = 1; slot <= 5; ++slot) {
        auto r = s.suggest({"do you have any pets", 0, slot, "t"});
        ASSERT_TRUE(r.has_value());
        EXPECT_FALSE(r->empty());
    }
}

TEST(DefaultResponses, FourFixedButtons) {
    ASSERT_EQ(default_responses().size(), 4u);
    EXPECT_EQ(default_responses()[0], "Yes, I agree.");
    EXPECT_EQ(default_responses()[3], "I am thinking about it. Could you provide more information?");
}
