#pragma once

// Span corruption: mask contiguous noise spans, replace each by a sentinel in
// the input, and ask the target to emit every sentinel followed by the tokens
// it hides.
//
//   ids    = a b c d e      spans = {(1, 2)}
//   input  = a S0 d e
//   target = S0 b c EOS

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/parallel.hpp"
#include "forge/rng.hpp"
#include "forge/vocab.hpp"

namespace forge {

struct CorruptionParams {
    double mask_rate = 0.15;
    double mean_span_len = 3.0;
    std::size_t seq_len = 1024;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(mask_rate > 0.0 && mask_rate < 1.0)) throw Error("mask rate must be in (0,1)");
        if (!(mean_span_len >= 1.0)) throw Error("mean span length must be >= 1");
        if (seq_len < 2) throw Error("sequence length must be >= 2");
    }
};

struct Span {
    std::size_t start = 0;
    std::size_t length = 0;

    bool operator==(const Span &) const = default;
};

struct SpanPlan {
    std::vector<Span> spans;
    std::size_t num_noise = 0;
    bool reduced = false; // the requested noise or span count did not fit in n
};

struct CorruptionExample {
    std::vector<TokenId> input_ids;
    std::vector<TokenId> target_ids;
    std::size_t num_spans = 0;
    std::size_t num_noise = 0;

    bool operator==(const CorruptionExample &) const = default;
};

// Rounds half away from zero.
inline std::size_t round_count(double x) { return static_cast<std::size_t>(std::round(x)); }

// num_noise = max(1, round(n * rate)), num_spans = max(1, round(num_noise /
// mean)). Span lengths are a uniformly random composition of num_noise into
// num_spans positive parts; spans occupy distinct gaps between the kept
// tokens, so they never touch and at least one token is always kept.
inline SpanPlan plan_spans(std::size_t n, const CorruptionParams &params, rng::Engine &eng) {
    params.validate();
    if (n < 2) throw Error("sequence of length " + std::to_string(n) + " is too short to corrupt");
    SpanPlan plan;
    std::size_t num_noise = std::max<std::size_t>(1, round_count(static_cast<double>(n) * params.mask_rate));
    if (num_noise >= n) {
        num_noise = n - 1;
        plan.reduced = true;
    }
    std::size_t num_spans =
        std::max<std::size_t>(1, round_count(static_cast<double>(num_noise) / params.mean_span_len));
    const std::size_t num_keep = n - num_noise;
    if (num_spans > num_keep + 1) {
        num_spans = num_keep + 1;
        plan.reduced = true;
    }
    plan.num_noise = num_noise;

    const auto cuts = rng::sample_sorted(eng, num_noise - 1, num_spans - 1);
    const auto slots = rng::sample_sorted(eng, num_keep + 1, num_spans);
    std::size_t prev_cut = 0;
    std::size_t noise_before = 0;
    plan.spans.reserve(num_spans);
    for (std::size_t k = 0; k < num_spans; ++k) {
        const std::size_t cut = k + 1 < num_spans ? static_cast<std::size_t>(cuts[k]) + 1 : num_noise;
        const std::size_t len = cut - prev_cut;
        prev_cut = cut;
        plan.spans.push_back({static_cast<std::size_t>(slots[k]) + noise_before, len});
        noise_before += len;
    }
    return plan;
}

inline CorruptionExample build_example(const std::vector<TokenId> &ids, const std::vector<Span> &spans,
                                       const Vocabulary &vocab) {
    if (spans.size() > vocab.sentinel_count()) {
        throw Error(std::to_string(spans.size()) + " spans exceed the " + std::to_string(vocab.sentinel_count()) +
                    " available sentinels");
    }
    CorruptionExample ex;
    ex.num_spans = spans.size();
    std::size_t pos = 0;
    for (std::size_t k = 0; k < spans.size(); ++k) {
        const Span &s = spans[k];
        if (s.length == 0) throw Error("zero-length span at index " + std::to_string(k));
        if (s.start < pos) throw Error("spans overlap or are unsorted at index " + std::to_string(k));
        if (s.start + s.length > ids.size()) throw Error("span " + std::to_string(k) + " runs past the sequence");
        const TokenId sentinel = vocab.sentinel_id(k);
        ex.input_ids.insert(ex.input_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(pos),
                            ids.begin() + static_cast<std::ptrdiff_t>(s.start));
        ex.input_ids.push_back(sentinel);
        ex.target_ids.push_back(sentinel);
        ex.target_ids.insert(ex.target_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(s.start),
                             ids.begin() + static_cast<std::ptrdiff_t>(s.start + s.length));
        ex.num_noise += s.length;
        pos = s.start + s.length;
    }
    ex.input_ids.insert(ex.input_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(pos), ids.end());
    ex.target_ids.push_back(vocab.eos_id());
    return ex;
}

// Corrupts the index-th sequence of a stream; the randomness depends only on
// (params.seed, index), never on processing order.
inline CorruptionExample corrupt_ids(std::vector<TokenId> ids, const Vocabulary &vocab,
                                     const CorruptionParams &params, std::uint64_t index) {
    if (ids.size() > params.seq_len) ids.resize(params.seq_len);
    auto eng = rng::make_engine(params.seed, "corruption", index);
    const SpanPlan plan = plan_spans(ids.size(), params, eng);
    return build_example(ids, plan.spans, vocab);
}

struct CorruptionStreamStats {
    std::size_t examples = 0;
    std::size_t skipped_short = 0; // texts that encode to fewer than 2 tokens
    std::size_t truncated = 0;
};

// Encodes, truncates to seq_len and corrupts every text. Output slot i holds
// the example for texts[i], or nullopt if the text was too short.
inline std::vector<std::optional<CorruptionExample>>
corrupt_stream(const std::vector<std::string> &texts, const Vocabulary &vocab, const CorruptionParams &params,
               std::size_t threads = 1, CorruptionStreamStats *stats = nullptr, std::uint64_t first_index = 0) {
    params.validate();
    std::vector<std::optional<CorruptionExample>> out(texts.size());
    std::vector<char> truncated(texts.size(), 0);
    parallel_for(texts.size(), threads, [&](std::size_t i) {
        std::vector<TokenId> ids = vocab.encode(texts[i]);
        if (ids.size() < 2) return;
        truncated[i] = ids.size() > params.seq_len;
        out[i] = corrupt_ids(std::move(ids), vocab, params, first_index + i);
    });
    if (stats != nullptr) {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (out[i]) {
                ++stats->examples;
            } else {
                ++stats->skipped_short;
            }
            stats->truncated += truncated[i] != 0;
        }
    }
    return out;
}

inline std::string to_jsonl(const CorruptionExample &ex, std::uint64_t index) {
    nlohmann::ordered_json j;
    j["index"] = index;
    j["input_ids"] = ex.input_ids;
    j["target_ids"] = ex.target_ids;
    j["num_spans"] = ex.num_spans;
    j["num_noise"] = ex.num_noise;
    return j.dump();
}

} // namespace forge
