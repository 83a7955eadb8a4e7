#pragma once

// Retrieval-based transcript repair and the phoneme-level data pipeline
// (normalization, noise augmentation, training-pair export).

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "voicerelay/domain.hpp"
#include "voicerelay/phonetics.hpp"
#include "voicerelay/rng.hpp"
#include "voicerelay/text.hpp"

namespace voicerelay {

class RepairError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear-scan retrieval costs O(N * m^2) per query, so corpora are capped.
inline constexpr std::size_t kMaxCorpusSentences = 50'000;

struct CorpusSentence {
    std::string text;  // normalized
    PhonemeSeq phonemes;
};

struct CorpusIndex {
    std::vector<CorpusSentence> sentences;
    std::string source_path;

    std::size_t size() const { return sentences.size(); }
};

struct NoiseParams {
    double p_delete = 0.1;
    double p_substitute = 0.1;
    std::uint64_t rng_seed = 0;
};

inline void check_noise(const NoiseParams& p) {
    if (!(p.p_delete >= 0.0 && p.p_delete <= 1.0)) throw RepairError("p_delete must be in [0,1]");
    if (!(p.p_substitute >= 0.0 && p.p_substitute <= 1.0)) throw RepairError("p_substitute must be in [0,1]");
}

/// Normalizes, deduplicates and converts every sentence. Sentences that end
/// up empty (or without any pronounceable letter) are skipped.
inline CorpusIndex build_corpus_index(const std::vector<std::string>& sentences, const Lexicon& lex,
                                      std::string source_path = {}) {
    if (sentences.empty()) throw RepairError("corpus is empty");
    CorpusIndex index;
    index.source_path = std::move(source_path);
    std::unordered_set<std::string> seen;
    for (const auto& raw : sentences) {
        auto text = normalize_text(raw);
        if (text.empty() || seen.count(text)) continue;
        auto phon = graphemes_to_phonemes(text, lex);
        if (phon.empty()) continue;
        seen.insert(text);
        index.sentences.push_back({std::move(text), std::move(phon)});
    }
    if (index.sentences.empty()) throw RepairError("corpus has no usable sentences");
    if (index.sentences.size() > kMaxCorpusSentences)
        throw RepairError("corpus exceeds " + std::to_string(kMaxCorpusSentences) + " sentences");
    return index;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RepairError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(std::move(line));
    }
    return lines;
}

inline CorpusIndex load_corpus_index(const std::string& path, const Lexicon& lex) {
    return build_corpus_index(read_lines(path), lex, path);
}

/// k nearest corpus sentences to a phoneme sequence, ascending by distance,
/// ties in corpus order. An exact match is not excluded.
inline std::vector<Alternative> retrieve_by_phonemes(const PhonemeSeq& query, const CorpusIndex& index,
                                                     std::size_t k) {
    if (query.empty() || k == 0) return {};
    const std::size_t n = index.size();
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = normalized_levenshtein(query, index.sentences[i].phonemes);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(k, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; });
    std::vector<Alternative> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back({index.sentences[order[i]].text, dist[order[i]]});
    return out;
}

inline std::vector<Alternative> retrieve_alternatives(std::string_view transcript, const CorpusIndex& index,
                                                      const Lexicon& lex, std::size_t k) {
    if (k < 1) throw RepairError("k must be >= 1");
    const auto text = normalize_text(transcript);
    if (text.empty()) return {};
    return retrieve_by_phonemes(graphemes_to_phonemes(text, lex), index, k);
}

/// Per position: drop with p_delete, otherwise replace with the most similar
/// inventory phoneme with p_substitute.
inline PhonemeSeq augment_phonemes(const PhonemeSeq& seq, const NoiseParams& params, const PhonemeInventory& inv) {
    check_noise(params);
    Rng rng(params.rng_seed);
    PhonemeSeq out;
    out.reserve(seq.size());
    for (auto p : seq) {
        if (rng.uniform() < params.p_delete) continue;
        if (rng.uniform() < params.p_substitute) {
            out.push_back(inv.most_similar(p));
        } else {
            out.push_back(p);
        }
    }
    return out;
}

struct TrainingPair {
    PhonemeSeq noisy;
    std::string clean;
};

/// Streams 1 clean + `times` augmented pairs per corpus sentence, in corpus order.
/// Augmentation j of sentence i uses a seed derived from (rng_seed, i, j).
inline void for_each_training_pair(const CorpusIndex& index, std::size_t times, const NoiseParams& params,
                                   const PhonemeInventory& inv, const std::function<void(const TrainingPair&)>& sink) {
    check_noise(params);
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto& s = index.sentences[i];
        sink(TrainingPair{s.phonemes, s.text});
        for (std::size_t j = 0; j < times; ++j) {
            NoiseParams p = params;
            p.rng_seed = mix_seed(params.rng_seed, i * (times + 1) + j + 1);
            sink(TrainingPair{augment_phonemes(s.phonemes, p, inv), s.text});
        }
    }
}

inline std::vector<TrainingPair> generate_training_pairs(const CorpusIndex& index, std::size_t times,
                                                         const NoiseParams& params, const PhonemeInventory& inv) {
    std::vector<TrainingPair> out;
    out.reserve(index.size() * (times + 1));
    for_each_training_pair(index, times, params, inv, [&](const TrainingPair& p) { out.push_back(p); });
    return out;
}

/// Writes `PH1 PH2 ...<TAB>clean text` lines. Returns the number of pairs written.
inline std::size_t write_training_pairs(std::ostream& out, const CorpusIndex& index, std::size_t times,
                                        const NoiseParams& params, const PhonemeInventory& inv) {
    std::size_t n = 0;
    for_each_training_pair(index, times, params, inv, [&](const TrainingPair& p) {
        out << to_string(p.noisy) << '\t' << p.clean << '\n';
        ++n;
    });
    return n;
}

/// First `sample` entries of a seeded Fisher-Yates shuffle of [0, n).
inline std::vector<std::size_t> select_sample(std::size_t n, std::size_t sample, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    sample = std::min(sample, n);
    for (std::size_t i = 0; i < sample; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(sample);
    return idx;
}

/// The noisy query used for sample slot `slot` whose source is sentence `sentence`.
inline PhonemeSeq noisy_query(const CorpusIndex& index, std::size_t sentence, const NoiseParams& params,
                              const PhonemeInventory& inv) {
    NoiseParams p = params;
    p.rng_seed = mix_seed(params.rng_seed, sentence);
    return augment_phonemes(index.sentences[sentence].phonemes, p, inv);
}

struct RecoveryReport {
    std::size_t sample = 0;
    std::size_t k = 0;
    std::size_t top1_hits = 0;
    std::size_t topk_hits = 0;
    double top1_rate = 0.0;
    double topk_rate = 0.0;
    double mean_distance = 0.0;  // mean rank-1 retrieval distance
};

/// Corrupts `sample` corpus sentences at the phoneme level and measures how
/// often retrieval brings the exact source sentence back at rank 1 and within k.
inline RecoveryReport evaluate_repair(const CorpusIndex& index, const NoiseParams& params, std::size_t k,
                                      std::size_t sample, const PhonemeInventory& inv) {
    if (sample > index.size()) throw RepairError("sample exceeds corpus size");
    if (k < 1) throw RepairError("k must be >= 1");
    RecoveryReport r;
    r.sample = sample;
    r.k = k;
    double dist_sum = 0.0;
    for (auto sentence : select_sample(index.size(), sample, params.rng_seed)) {
        const auto query = noisy_query(index, sentence, params, inv);
        const auto hits = retrieve_by_phonemes(query, index, k);
        const auto& truth = index.sentences[sentence].text;
        if (!hits.empty()) {
            dist_sum += hits.front().distance;
            if (hits.front().text == truth) ++r.top1_hits;
        } else {
            dist_sum += 1.0;
        }
        if (std::any_of(hits.begin(), hits.end(), [&](const Alternative& a) { return a.text == truth; }))
            ++r.topk_hits;
    }
    if (sample > 0) {
        r.top1_rate = static_cast<double>(r.top1_hits) / static_cast<double>(sample);
        r.topk_rate = static_cast<double>(r.topk_hits) / static_cast<double>(sample);
        r.mean_distance = dist_sum / static_cast<double>(sample);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Plug-point for repair models

class RepairModel {
public:
    virtual ~RepairModel() = default;
    virtual std::string name() const = 0;
    /// Ranked candidate texts for a normalized transcript.
    virtual std::vector<Alternative> repair(std::string_view normalized, std::size_t k) const = 0;
};

class RetrievalRepairModel final : public RepairModel {
public:
    RetrievalRepairModel(const CorpusIndex& index, const Lexicon& lex) : index_(index), lex_(lex) {}

    std::string name() const override { return "retrieval"; }

    std::vector<Alternative> repair(std::string_view normalized, std::size_t k) const override {
        if (k == 0) return {};
        return retrieve_alternatives(normalized, index_, lex_, k);
    }

private:
    const CorpusIndex& index_;
    const Lexicon& lex_;
};

/// Bundle for the worker console: the raw transcript plus up to
/// `alternatives` repaired variants that differ from it after normalization.
inline TranscriptBundle make_bundle(std::string_view transcript, const RepairModel* model, int alternatives) {
    TranscriptBundle b;
    b.original = std::string(transcript);
    if (!model || alternatives <= 0) return b;
    const auto norm = normalize_text(transcript);
    for (auto& alt : model->repair(norm, static_cast<std::size_t>(alternatives) + 1)) {
        if (alt.text == norm) continue;
        if (b.alternatives.size() == static_cast<std::size_t>(alternatives)) break;
        b.alternatives.push_back(std::move(alt));
    }
    return b;
}

}  // namespace voicerelay
