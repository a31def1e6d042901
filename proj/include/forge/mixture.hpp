#pragma once

// Exponent-smoothed language sampling.
//
// Each language L is drawn with probability |L|^alpha / sum_M |M|^alpha,
// where |L| counts examples (pages). alpha = 1 samples proportionally to data
// size; smaller alpha flattens the distribution toward uniform and boosts
// low-resource languages.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge {

inline constexpr double kDefaultAlpha = 0.3;

struct MixtureSpec {
    double alpha = kDefaultAlpha;
    std::map<std::string, std::uint64_t> counts;
    std::map<std::string, double> probs;
};

inline MixtureSpec compute_sampling_probs(const std::map<std::string, std::uint64_t> &counts, double alpha) {
    if (!(alpha > 0.0)) throw Error("alpha must be > 0");
    MixtureSpec spec;
    spec.alpha = alpha;
    spec.counts = counts;
    // log-space: alpha * log|L|, shifted by the maximum before exponentiating.
    double top = -std::numeric_limits<double>::infinity();
    for (const auto &[lang, c] : counts) {
        if (c > 0) top = std::max(top, alpha * std::log(static_cast<double>(c)));
    }
    if (!std::isfinite(top)) throw Error("all language counts are zero");
    double z = 0.0;
    for (const auto &[lang, c] : counts) {
        const double w = c > 0 ? std::exp(alpha * std::log(static_cast<double>(c)) - top) : 0.0;
        spec.probs[lang] = w;
        z += w;
    }
    for (auto &[lang, p] : spec.probs) p /= z;
    return spec;
}

namespace mixture_detail {

// Cumulative distribution over languages with p > 0, in code order.
struct Cdf {
    std::vector<std::string> langs;
    std::vector<double> cum;

    explicit Cdf(const MixtureSpec &spec) {
        double acc = 0.0;
        for (const auto &[lang, p] : spec.probs) {
            if (p <= 0.0) continue;
            acc += p;
            langs.push_back(lang);
            cum.push_back(acc);
        }
        if (langs.empty()) throw Error("mixture has no language with positive probability");
        cum.back() = std::numeric_limits<double>::infinity();
    }

    std::size_t draw(rng::Engine &eng) const {
        const double u = rng::uniform01(eng);
        std::size_t lo = 0;
        while (u >= cum[lo]) ++lo;
        return lo;
    }
};

// Walks a store in a shuffled order, reshuffling at every epoch boundary.
class CyclicShuffler {
public:
    CyclicShuffler(std::size_t size, rng::Engine eng) : order_(size), eng_(std::move(eng)) {
        for (std::size_t i = 0; i < size; ++i) order_[i] = i;
        rng::shuffle(order_, eng_);
    }
    std::size_t next() {
        if (pos_ == order_.size()) {
            rng::shuffle(order_, eng_);
            pos_ = 0;
            ++epoch_;
        }
        return order_[pos_++];
    }
    std::uint64_t epoch() const noexcept { return epoch_; }

private:
    std::vector<std::size_t> order_;
    rng::Engine eng_;
    std::size_t pos_ = 0;
    std::uint64_t epoch_ = 0;
};

} // namespace mixture_detail

// Deterministic sampler: languages are drawn i.i.d. from spec.probs; within a
// language, examples come from its store cyclically with a reshuffle per
// epoch, so small stores repeat. `Stores` maps language code to a
// random-access container of examples.
template <class Stores>
class MixtureSampler {
public:
    using Example = typename Stores::mapped_type::value_type;

    MixtureSampler(const MixtureSpec &spec, const Stores &stores, std::uint64_t seed)
        : cdf_(spec), stores_(stores), lang_eng_(rng::make_engine(seed, "mixture.language")) {
        for (std::size_t i = 0; i < cdf_.langs.size(); ++i) {
            const auto &lang = cdf_.langs[i];
            auto it = stores_.find(lang);
            if (it == stores_.end() || it->second.empty())
                throw Error("no examples for language '" + lang + "' which has positive sampling probability");
            walkers_.emplace_back(it->second.size(), rng::make_engine(seed, "mixture.store." + lang));
            store_ptrs_.push_back(&it->second);
        }
    }

    // Next (language, example) pair.
    std::pair<const std::string &, const Example &> next() {
        const std::size_t l = cdf_.draw(lang_eng_);
        const std::size_t idx = walkers_[l].next();
        return {cdf_.langs[l], (*store_ptrs_[l])[idx]};
    }

private:
    mixture_detail::Cdf cdf_;
    const Stores &stores_;
    rng::Engine lang_eng_;
    std::vector<mixture_detail::CyclicShuffler> walkers_;
    std::vector<const typename Stores::mapped_type *> store_ptrs_;
};

template <class Stores>
std::vector<std::pair<std::string, typename Stores::mapped_type::value_type>>
sample_mixture(const MixtureSpec &spec, const Stores &stores, std::size_t n, std::uint64_t seed) {
    MixtureSampler<Stores> sampler(spec, stores, seed);
    std::vector<std::pair<std::string, typename Stores::mapped_type::value_type>> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [lang, ex] = sampler.next();
        out.emplace_back(lang, ex);
    }
    return out;
}

// Writes about n_chars characters of text, one line per row, whose
// per-language character shares track spec.probs. Lines are taken from the
// stores (split on '\n') cyclically with reshuffling; at each step the
// language furthest below its target share emits its next line. Returns the
// number of characters (code points, excluding newlines) written.
template <class Stores>
std::uint64_t export_tokenizer_sample(const MixtureSpec &spec, const Stores &stores, std::uint64_t n_chars,
                                      std::uint64_t seed, std::ostream &out,
                                      std::map<std::string, std::uint64_t> *chars_by_lang = nullptr) {
    mixture_detail::Cdf cdf(spec);
    std::vector<std::vector<std::string>> lines(cdf.langs.size());
    std::vector<double> target(cdf.langs.size());
    std::vector<mixture_detail::CyclicShuffler> walkers;
    for (std::size_t l = 0; l < cdf.langs.size(); ++l) {
        const auto &lang = cdf.langs[l];
        target[l] = spec.probs.at(lang);
        auto it = stores.find(lang);
        if (it == stores.end() || it->second.empty())
            throw Error("no examples for language '" + lang + "' which has positive sampling probability");
        for (const auto &ex : it->second) {
            std::size_t start = 0;
            const std::string_view text(ex);
            while (start <= text.size()) {
                std::size_t end = text.find('\n', start);
                if (end == std::string_view::npos) end = text.size();
                const auto line = text.substr(start, end - start);
                if (!line.empty()) lines[l].emplace_back(line);
                start = end + 1;
            }
        }
        if (lines[l].empty()) throw Error("no text lines for language '" + lang + "'");
        walkers.emplace_back(lines[l].size(), rng::make_engine(seed, "tokenizer_sample." + lang));
    }
    std::vector<std::uint64_t> emitted(cdf.langs.size(), 0);
    std::uint64_t total = 0;
    while (total < n_chars) {
        std::size_t pick = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < emitted.size(); ++l) {
            const double deficit = target[l] * static_cast<double>(total + 1) - static_cast<double>(emitted[l]);
            if (deficit > best) {
                best = deficit;
                pick = l;
            }
        }
        const std::string &line = lines[pick][walkers[pick].next()];
        std::uint64_t len = 0;
        for (unsigned char c : line) len += (c & 0xC0) != 0x80;
        out << line << '\n';
        emitted[pick] += len;
        total += len;
    }
    if (chars_by_lang != nullptr) {
        for (std::size_t l = 0; l < emitted.size(); ++l) (*chars_by_lang)[cdf.langs[l]] = emitted[l];
    }
    return total;
}

} // namespace forge
