#pragma once

#include <algorithm>
#include <array>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <spdlog/spdlog.h>

#include "voicerelay/domain.hpp"
#include "voicerelay/phonetics.hpp"
#include "voicerelay/scheduler.hpp"
#include "voicerelay/text.hpp"

namespace voicerelay {

inline constexpr std::array<std::string_view, 4> kDefaultResponses = {
    "Yes, I agree.",
    "No, I don't think so.",
    "Could you repeat that again?",
    "I am thinking about it. Could you provide more information?",
};

inline std::vector<std::string> default_responses() {
    return {kDefaultResponses.begin(), kDefaultResponses.end()};
}

struct SuggestionRequest {
    int variant_index = 0;  // 0 = original transcript
    int slot = 1;           // 1..per_variant_quota
    std::size_t scheduled_order = 0;

    bool operator==(const SuggestionRequest&) const = default;
};

/// Fetch order for (alternatives + 1) * quota suggestions. The original gets
/// its first three slots up front; alternatives then take one slot each per
/// round, and any remaining original slots follow each full round.
inline std::vector<SuggestionRequest> plan_requests(std::size_t alternatives, int quota) {
    std::vector<SuggestionRequest> plan;
    if (quota < 1) return plan;
    auto push = [&plan](int variant, int slot) { plan.push_back({variant, slot, plan.size()}); };
    constexpr int kOriginalHead = 3;
    int original_next = 1;
    for (; original_next <= std::min(kOriginalHead, quota); ++original_next) push(0, original_next);
    for (int round = 1; round <= quota; ++round) {
        if (alternatives == 0) break;
        for (std::size_t a = 1; a <= alternatives; ++a) push(static_cast<int>(a), round);
        if (original_next <= quota) push(0, original_next++);
    }
    for (; original_next <= quota; ++original_next) push(0, original_next);
    return plan;
}

inline std::vector<SuggestionRequest> plan_requests(const TranscriptBundle& bundle, const DeadlineConfig& cfg) {
    return plan_requests(bundle.alternatives.size(), cfg.per_variant_quota);
}

// ---------------------------------------------------------------------------
// Suggester plug-in contract

struct SuggestionQuery {
    std::string utterance;
    int variant_index = 0;
    int slot = 1;
    std::string turn_id;
};

class Suggester {
public:
    virtual ~Suggester() = default;
    virtual std::string name() const = 0;
    virtual bool available() const { return true; }
    /// nullopt on failure. Implementations must give up after timeout().
    virtual std::optional<std::string> suggest(const SuggestionQuery& query) = 0;
    virtual Duration timeout() const { return Duration{3000}; }
};

/// Minimum spacing between request issue times, shared by every turn that
/// uses the same suggester. Thread-safe.
class RateLimiter {
public:
    explicit RateLimiter(Duration min_interval) : min_interval_(min_interval) {}

    /// Reserves the earliest slot >= now that respects the spacing, provided
    /// it falls strictly before `deadline`.
    std::optional<TimePoint> reserve(TimePoint now, TimePoint deadline) {
        std::lock_guard lock(mu_);
        TimePoint slot = now;
        if (last_ && *last_ + min_interval_ > slot) slot = *last_ + min_interval_;
        if (slot >= deadline) return std::nullopt;
        last_ = slot;
        return slot;
    }

    Duration min_interval() const { return min_interval_; }

private:
    std::mutex mu_;
    Duration min_interval_;
    std::optional<TimePoint> last_;
};

/// One turn's paced walk through its request plan. Create with start().
class SuggestionSchedule : public std::enable_shared_from_this<SuggestionSchedule> {
public:
    using Sink = std::function<void(const Suggestion&)>;

    static std::shared_ptr<SuggestionSchedule> start(std::vector<SuggestionRequest> plan, TranscriptBundle bundle,
                                                     std::string turn_id, Suggester& suggester, RateLimiter& limiter,
                                                     TimePoint deadline, Scheduler& sched, Sink sink) {
        auto s = std::shared_ptr<SuggestionSchedule>(new SuggestionSchedule(
            std::move(plan), std::move(bundle), std::move(turn_id), suggester, limiter, deadline, sched, std::move(sink)));
        if (!suggester.available()) {
            spdlog::warn("suggester '{}' unavailable; turn {} proceeds without suggestions", suggester.name(),
                         s->turn_id_);
            s->done_ = true;
            return s;
        }
        s->advance();
        return s;
    }

    /// Stops issuing and drops any response that arrives later.
    void cancel() {
        if (cancelled_) return;
        cancelled_ = true;
        done_ = true;
        if (timer_) sched_.cancel(*timer_);
        timer_.reset();
    }

    bool done() const { return done_; }
    bool cancelled() const { return cancelled_; }
    const std::vector<TimePoint>& issue_times() const { return issued_; }
    std::size_t delivered() const { return delivered_; }
    std::size_t failures() const { return failures_; }

private:
    SuggestionSchedule(std::vector<SuggestionRequest> plan, TranscriptBundle bundle, std::string turn_id,
                       Suggester& suggester, RateLimiter& limiter, TimePoint deadline, Scheduler& sched, Sink sink)
        : plan_(std::move(plan)),
          bundle_(std::move(bundle)),
          turn_id_(std::move(turn_id)),
          suggester_(suggester),
          limiter_(limiter),
          deadline_(deadline),
          sched_(sched),
          sink_(std::move(sink)) {}

    void advance() {
        timer_.reset();
        if (cancelled_ || next_ >= plan_.size()) {
            done_ = true;
            return;
        }
        auto slot = limiter_.reserve(sched_.now(), deadline_);
        if (!slot) {
            done_ = true;
            return;
        }
        timer_ = sched_.at(*slot, [self = shared_from_this()] { self->issue(); });
    }

    void issue() {
        timer_.reset();
        if (cancelled_) return;
        const auto req = plan_[next_++];
        issued_.push_back(sched_.now());
        SuggestionQuery q{bundle_.variant_text(static_cast<std::size_t>(req.variant_index)), req.variant_index,
                          req.slot, turn_id_};
        sched_.offload([self = shared_from_this(), q = std::move(q)]() -> std::function<void()> {
            std::optional<std::string> text;
            try {
                text = self->suggester_.suggest(q);
            } catch (const std::exception& e) {
                spdlog::warn("suggester '{}' threw: {}", self->suggester_.name(), e.what());
            }
            return [self, text = std::move(text), variant = q.variant_index] { self->deliver(text, variant); };
        });
        advance();
    }

    void deliver(const std::optional<std::string>& text, int variant) {
        if (cancelled_) return;
        if (!text || text->empty()) {
            ++failures_;
            return;
        }
        ++delivered_;
        sink_(Suggestion{*text, variant, sched_.now(), suggester_.name()});
    }

    std::vector<SuggestionRequest> plan_;
    TranscriptBundle bundle_;
    std::string turn_id_;
    Suggester& suggester_;
    RateLimiter& limiter_;
    TimePoint deadline_;
    Scheduler& sched_;
    Sink sink_;

    std::size_t next_ = 0;
    std::optional<TimerId> timer_;
    std::vector<TimePoint> issued_;
    std::size_t delivered_ = 0;
    std::size_t failures_ = 0;
    bool cancelled_ = false;
    bool done_ = false;
};

// ---------------------------------------------------------------------------
// Built-in corpus suggester

struct DialoguePair {
    std::string prompt;
    std::string reply;
};

inline std::vector<DialoguePair> load_dialogue_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dialogue pairs: " + path);
    std::vector<DialoguePair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected prompt<TAB>reply");
        pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return pairs;
}

/// Answers with the replies of the prompts that sound closest to the
/// utterance. Slot n returns the n-th distinct reply in nearest-prompt order.
class CorpusReplySuggester final : public Suggester {
public:
    CorpusReplySuggester(std::vector<DialoguePair> pairs, const Lexicon& lex) : lex_(lex) {
        for (auto& p : pairs) {
            auto phon = graphemes_to_phonemes(normalize_text(p.prompt), lex);
            if (p.reply.empty()) continue;
            pairs_.push_back(std::move(p));
            prompts_.push_back(std::move(phon));
        }
        if (pairs_.empty()) throw std::invalid_argument("dialogue pair corpus is empty");
    }

    std::string name() const override { return "corpus"; }

    std::optional<std::string> suggest(const SuggestionQuery& q) override {
        const auto ranked = ranking(q.utterance);
        std::vector<const std::string*> distinct;
        for (auto i : *ranked) {
            const auto& reply = pairs_[i].reply;
            if (std::none_of(distinct.begin(), distinct.end(), [&](const std::string* r) { return *r == reply; }))
                distinct.push_back(&reply);
            if (static_cast<int>(distinct.size()) == q.slot) return reply;
        }
        return std::nullopt;
    }

    /// Reply of the single nearest prompt.
    std::string nearest_reply(std::string_view utterance) { return pairs_[ranking(utterance)->front()].reply; }

    const std::vector<DialoguePair>& pairs() const { return pairs_; }

private:
    std::shared_ptr<const std::vector<std::size_t>> ranking(std::string_view utterance) {
        const auto norm = normalize_text(utterance);
        {
            std::lock_guard lock(mu_);
            if (auto it = cache_.find(norm); it != cache_.end()) return it->second;
        }
        const auto q = graphemes_to_phonemes(norm, lex_);
        std::vector<double> dist(prompts_.size());
        for (std::size_t i = 0; i < prompts_.size(); ++i) dist[i] = normalized_levenshtein(q, prompts_[i]);
        auto order = std::make_shared<std::vector<std::size_t>>(prompts_.size());
        std::iota(order->begin(), order->end(), 0);
        std::stable_sort(order->begin(), order->end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
        std::lock_guard lock(mu_);
        if (cache_.size() >= kCacheLimit) cache_.clear();
        cache_.emplace(norm, order);
        return order;
    }

    static constexpr std::size_t kCacheLimit = 256;

    const Lexicon& lex_;
    std::vector<DialoguePair> pairs_;
    std::vector<PhonemeSeq> prompts_;
    std::mutex mu_;
    std::unordered_map<std::string, std::shared_ptr<const std::vector<std::size_t>>> cache_;
};

/// Reply of the prompt nearest to `utterance`; ties resolve to corpus order.
inline std::string corpus_reply_suggester(std::string_view utterance, const std::vector<DialoguePair>& pairs,
                                          const Lexicon& lex) {
    CorpusReplySuggester s(pairs, lex);
    return s.nearest_reply(utterance);
}

}  // namespace voicerelay
