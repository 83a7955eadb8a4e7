#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "voicerelay/domain.hpp"

namespace voicerelay {

class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KindStats {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;
};

/// Statistics are in seconds. SD is the population SD. With count == 0 the
/// statistics are undefined and reported as nullopt.
struct LatencySummary {
    std::size_t count = 0;
    std::optional<double> mean;
    std::optional<double> sd;
    std::optional<double> p25;
    std::optional<double> p50;
    std::optional<double> p75;
    std::optional<double> p90;
    std::map<ResponseKind, KindStats> by_kind;
};

namespace detail {

// Linear interpolation between closest ranks on sorted data.
inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.size() == 1) return v.front();
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

inline KindStats stats_of(const std::vector<double>& v) {
    KindStats s;
    s.count = v.size();
    if (v.empty()) return s;
    double sum = 0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double sq = 0;
    for (double x : v) sq += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(sq / static_cast<double>(v.size()));
    return s;
}

}  // namespace detail

inline LatencySummary summarize(std::vector<LatencyRecord> records, std::optional<ResponseKind> filter = std::nullopt) {
    if (filter)
        std::erase_if(records, [&](const LatencyRecord& r) { return r.response_kind != *filter; });
    LatencySummary out;
    out.count = records.size();
    if (records.empty()) return out;

    std::vector<double> all;
    std::map<ResponseKind, std::vector<double>> per_kind;
    for (const auto& r : records) {
        const double s = to_seconds(r.latency);
        all.push_back(s);
        per_kind[r.response_kind].push_back(s);
    }
    // Sorting first makes the floating-point sums independent of record order.
    std::sort(all.begin(), all.end());
    const auto st = detail::stats_of(all);
    out.mean = st.mean;
    out.sd = st.sd;
    out.p25 = detail::quantile_sorted(all, 0.25);
    out.p50 = detail::quantile_sorted(all, 0.50);
    out.p75 = detail::quantile_sorted(all, 0.75);
    out.p90 = detail::quantile_sorted(all, 0.90);
    for (auto& [kind, v] : per_kind) {
        std::sort(v.begin(), v.end());
        out.by_kind[kind] = detail::stats_of(v);
    }
    return out;
}

struct HistogramBin {
    double start = 0.0;
    double end = 0.0;
    std::size_t count = 0;
};

/// 1 s bins over [0, upper). Values outside the range land in the edge bins.
inline std::vector<HistogramBin> histogram(const std::vector<LatencyRecord>& records, double upper_seconds) {
    const auto nbins = static_cast<std::size_t>(std::max(1.0, std::ceil(upper_seconds)));
    std::vector<HistogramBin> bins(nbins);
    for (std::size_t i = 0; i < nbins; ++i) bins[i] = {static_cast<double>(i), static_cast<double>(i + 1), 0};
    for (const auto& r : records) {
        const double s = to_seconds(r.latency);
        std::size_t i = s <= 0 ? 0 : static_cast<std::size_t>(std::floor(s));
        bins[std::min(i, nbins - 1)].count++;
    }
    return bins;
}

inline std::string format_seconds(double s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", s);
    return buf;
}

inline void write_csv(std::ostream& out, const std::vector<LatencyRecord>& records) {
    out << "turn_id,kind,latency_seconds\n";
    for (const auto& r : records)
        out << r.turn_id << ',' << to_string(r.response_kind) << ',' << format_seconds(to_seconds(r.latency)) << '\n';
}

inline void write_histogram(std::ostream& out, const std::vector<HistogramBin>& bins) {
    out << "bin_start,bin_end,count\n";
    for (const auto& b : bins) out << b.start << ',' << b.end << ',' << b.count << '\n';
}

inline std::vector<LatencyRecord> read_csv(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<LatencyRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line.rfind("turn_id,", 0) == 0)) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos) throw MetricsError(origin + ":" + std::to_string(line_no) + ": expected 3 fields");
        auto kind = parse_response_kind(line.substr(c1 + 1, c2 - c1 - 1));
        if (!kind) throw MetricsError(origin + ":" + std::to_string(line_no) + ": unknown kind");
        double secs = 0;
        try {
            secs = std::stod(line.substr(c2 + 1));
        } catch (const std::exception&) {
            throw MetricsError(origin + ":" + std::to_string(line_no) + ": bad latency");
        }
        if (secs < 0) throw MetricsError(origin + ":" + std::to_string(line_no) + ": negative latency");
        out.push_back({line.substr(0, c1), seconds(secs), *kind});
    }
    return out;
}

/// Thread-safe latency store shared by all sessions.
class MetricsStore {
public:
    void record(LatencyRecord rec) {
        if (rec.latency < Duration::zero()) throw MetricsError("negative latency for turn " + rec.turn_id);
        std::lock_guard lock(mu_);
        records_.push_back(std::move(rec));
    }

    std::vector<LatencyRecord> snapshot() const {
        std::lock_guard lock(mu_);
        return records_;
    }

    std::size_t size() const {
        std::lock_guard lock(mu_);
        return records_.size();
    }

    LatencySummary summarize(std::optional<ResponseKind> filter = std::nullopt) const {
        return voicerelay::summarize(snapshot(), filter);
    }

    void export_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw MetricsError("cannot write " + path);
        write_csv(out, snapshot());
        if (!out) throw MetricsError("write failed: " + path);
    }

    void export_histogram(const std::string& path, Duration worker_budget) const {
        std::ofstream out(path);
        if (!out) throw MetricsError("cannot write " + path);
        write_histogram(out, histogram(snapshot(), to_seconds(worker_budget) + 5.0));
        if (!out) throw MetricsError("write failed: " + path);
    }

private:
    mutable std::mutex mu_;
    std::vector<LatencyRecord> records_;
};

/// Human-readable summary block used by the CLI.
inline std::string render_summary(const LatencySummary& s) {
    std::ostringstream out;
    auto opt = [](const std::optional<double>& v) { return v ? format_seconds(*v) : std::string("n/a"); };
    out << "# latency summary (seconds; sd = population standard deviation)\n";
    out << "count " << s.count << '\n';
    out << "mean " << opt(s.mean) << '\n';
    out << "sd " << opt(s.sd) << '\n';
    out << "p25 " << opt(s.p25) << '\n';
    out << "p50 " << opt(s.p50) << '\n';
    out << "p75 " << opt(s.p75) << '\n';
    out << "p90 " << opt(s.p90) << '\n';
    for (const auto& [kind, st] : s.by_kind)
        out << "kind " << to_string(kind) << " count " << st.count << " mean " << format_seconds(st.mean) << " sd "
            << format_seconds(st.sd) << '\n';
    return out.str();
}

}  // namespace voicerelay
