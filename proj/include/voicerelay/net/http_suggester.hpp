#pragma once

// Suggester backed by an external HTTP service. POSTs
// {"utterance", "variant_index", "slot", "turn_id"} as JSON and expects
// {"text": "..."} back.

#include <optional>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "voicerelay/suggestions.hpp"

namespace voicerelay::net {

class HttpSuggester final : public Suggester {
public:
    explicit HttpSuggester(const std::string& url, Duration timeout = Duration{3000}) : timeout_(timeout) {
        const std::string scheme = "http://";
        if (url.rfind(scheme, 0) != 0) throw std::invalid_argument("suggester url must start with http://");
        const auto slash = url.find('/', scheme.size());
        origin_ = url.substr(0, slash);
        path_ = slash == std::string::npos ? "/" : url.substr(slash);
    }

    std::string name() const override { return origin_ + path_; }
    Duration timeout() const override { return timeout_; }

    std::optional<std::string> suggest(const SuggestionQuery& q) override {
        httplib::Client cli(origin_);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
        cli.set_connection_timeout(secs.count(), usecs.count());
        cli.set_read_timeout(secs.count(), usecs.count());
        const nlohmann::json body{
            {"utterance", q.utterance}, {"variant_index", q.variant_index}, {"slot", q.slot}, {"turn_id", q.turn_id}};
        auto res = cli.Post(path_.c_str(), body.dump(), "application/json");
        if (!res || res->status != 200) return std::nullopt;
        try {
            auto j = nlohmann::json::parse(res->body);
            if (auto it = j.find("text"); it != j.end() && it->is_string()) return it->get<std::string>();
        } catch (const nlohmann::json::exception&) {
        }
        return std::nullopt;
    }

private:
    std::string origin_;
    std::string path_;
    Duration timeout_;
};

}  // namespace voicerelay::net
