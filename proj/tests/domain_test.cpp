#include <gtest/gtest.h>

#include "voicerelay/domain.hpp"

using namespace voicerelay;

TEST(ValidateConfig, DefaultsPass) {
    DeadlineConfig cfg;
    EXPECT_EQ(cfg.worker_budget, Duration{25'000});
    EXPECT_EQ(cfg.suggestion_lock, Duration{5'000});
    EXPECT_EQ(cfg.warning_at_remaining, Duration{10'000});
    EXPECT_EQ(cfg.listening_window, Duration{10'000});
    EXPECT_EQ(cfg.suggester_min_interval, Duration{1'000});
    EXPECT_EQ(cfg.per_variant_quota, 5);
    EXPECT_EQ(cfg.alternatives_count, 3);
    EXPECT_NO_THROW(validate_config(cfg));
}

TEST(ValidateConfig, LockEqualToBudgetRejected) {
    DeadlineConfig cfg;
    cfg.suggestion_lock = Duration{25'000};
    try {
        validate_config(cfg);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "suggestion_lock must be < worker_budget");
    }
}

TEST(ValidateConfig, ZeroBudgetRejected) {
    DeadlineConfig cfg;
    cfg.worker_budget = Duration{0};
    EXPECT_THROW(validate_config(cfg), ConfigError);
}

TEST(ValidateConfig, QuotaAndAlternatives) {
    DeadlineConfig cfg;
    cfg.per_variant_quota = 0;
    EXPECT_THROW(validate_config(cfg), ConfigError);
    cfg = {};
    cfg.alternatives_count = -1;
    EXPECT_THROW(validate_config(cfg), ConfigError);
    cfg = {};
    cfg.alternatives_count = 0;
    EXPECT_NO_THROW(validate_config(cfg));
    cfg = {};
    cfg.warning_at_remaining = cfg.worker_budget;
    EXPECT_THROW(validate_config(cfg), ConfigError);
}

TEST(TranscriptBundle, VariantIndexing) {
    TranscriptBundle b{"orig", {{"a", 0.1}, {"b", 0.2}}, std::nullopt};
    EXPECT_EQ(b.variant_count(), 3u);
    EXPECT_EQ(b.variant_text(0), "orig");
    EXPECT_EQ(b.variant_text(2), "b");
    EXPECT_EQ(b.selected_text(), "orig");
    b.selected_index = 1;
    EXPECT_EQ(b.selected_text(), "a");
}

TEST(ResponseKind, NamesRoundTrip) {
    for (auto k : {ResponseKind::typed, ResponseKind::default_button, ResponseKind::suggested,
                   ResponseKind::timeout_random, ResponseKind::timeout_draft, ResponseKind::timeout_default}) {
        EXPECT_EQ(parse_response_kind(to_string(k)), k);
    }
    EXPECT_FALSE(parse_response_kind("bogus"));
}
