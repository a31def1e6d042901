#pragma once

// Language identification.
//
// LanguageIdentifier is the seam the cleaning cascade depends on; any
// detector returning a (language, confidence) posterior can be plugged in.
// NgramLanguageModel is the bundled baseline: a per-language multinomial over
// lowercased character n-grams with add-k smoothing, where the confidence is
// the softmax of the per-language log-likelihoods (a posterior under a
// uniform prior).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/io.hpp"
#include "forge/utf8.hpp"

namespace forge {

struct LangPrediction {
    std::string language;
    double confidence = 0.0;
};

class LanguageIdentifier {
public:
    virtual ~LanguageIdentifier() = default;
    virtual LangPrediction classify(std::string_view text) const = 0;
};

struct LabeledText {
    std::string language;
    std::string text;
};

namespace langid_detail {

// Lowercased code points, whitespace runs collapsed to one space, padded with
// a space on each side and on the right up to n.
inline std::u32string prepare(std::string_view text, int n) {
    std::u32string out;
    out.push_back(U' ');
    for (char32_t c : utf8::decode(text)) {
        if (utf8::is_space(c)) {
            if (out.back() != U' ') out.push_back(U' ');
        } else {
            out.push_back(utf8::to_lower(c));
        }
    }
    if (out.back() != U' ') out.push_back(U' ');
    while (out.size() < static_cast<std::size_t>(n)) out.push_back(U' ');
    return out;
}

template <class Fn>
void for_each_ngram(std::string_view text, int n, Fn &&fn) {
    const std::u32string cps = prepare(text, n);
    for (std::size_t i = 0; i + n <= cps.size(); ++i) {
        fn(utf8::encode(std::u32string_view(cps).substr(i, n)));
    }
}

} // namespace langid_detail

// Trained character n-gram profile. Immutable after construction, so
// classify() may be called concurrently.
class NgramLanguageModel final : public LanguageIdentifier {
public:
    struct Table {
        std::map<std::string, std::uint64_t> counts;
        std::uint64_t total = 0;
    };

    NgramLanguageModel(int n, double smoothing, std::map<std::string, Table> tables)
        : n_(n), smoothing_(smoothing), tables_(std::move(tables)) {
        validate_params(n_, smoothing_);
        if (tables_.empty()) throw Error("language profile has no languages");
        build_();
    }

    static void validate_params(int n, double smoothing) {
        if (n < 1 || n > 5) throw Error("n-gram order must be in [1,5], got " + std::to_string(n));
        if (!(smoothing > 0.0)) throw Error("smoothing mass must be > 0");
    }

    template <class Range>
    static NgramLanguageModel train(const Range &corpus, int n = 3, double smoothing = 0.5) {
        validate_params(n, smoothing);
        std::map<std::string, Table> tables;
        for (const LabeledText &item : corpus) {
            if (utf8::trim(item.text).empty()) continue;
            if (item.language.empty()) throw Error("training example without a language code");
            Table &t = tables[item.language];
            langid_detail::for_each_ngram(item.text, n, [&](std::string gram) {
                ++t.counts[std::move(gram)];
                ++t.total;
            });
        }
        if (tables.empty()) throw Error("empty training corpus");
        return NgramLanguageModel(n, smoothing, std::move(tables));
    }

    // Per-language posterior, in language-code order. Sums to 1.
    std::vector<std::pair<std::string, double>> posterior(std::string_view text) const {
        if (utf8::trim(text).empty()) throw Error("empty input");
        std::vector<double> score(langs_.size(), 0.0);
        langid_detail::for_each_ngram(text, n_, [&](const std::string &gram) {
            auto it = logprob_.find(gram);
            for (std::size_t l = 0; l < langs_.size(); ++l) {
                score[l] += (it == logprob_.end()) ? unseen_[l] : it->second[l];
            }
        });
        const double top = *std::max_element(score.begin(), score.end());
        double z = 0.0;
        for (double &s : score) {
            s = std::exp(s - top);
            z += s;
        }
        std::vector<std::pair<std::string, double>> out;
        out.reserve(langs_.size());
        for (std::size_t l = 0; l < langs_.size(); ++l) out.emplace_back(langs_[l], score[l] / z);
        return out;
    }

    LangPrediction classify(std::string_view text) const override {
        const auto post = posterior(text);
        // Strict '>' over code order keeps the lexicographically smallest on ties.
        std::size_t best = 0;
        for (std::size_t l = 1; l < post.size(); ++l) {
            if (post[l].second > post[best].second) best = l;
        }
        return {post[best].first, post[best].second};
    }

    int order() const noexcept { return n_; }
    double smoothing() const noexcept { return smoothing_; }
    const std::vector<std::string> &languages() const noexcept { return langs_; }
    const std::map<std::string, Table> &tables() const noexcept { return tables_; }

    // Versioned JSON form; keys are sorted, so equal profiles serialize to
    // identical bytes.
    std::string serialize() const {
        nlohmann::json j;
        j["format"] = "forge-langid";
        j["version"] = 1;
        j["n"] = n_;
        j["smoothing"] = smoothing_;
        nlohmann::json langs = nlohmann::json::object();
        for (const auto &[code, t] : tables_) {
            langs[code] = {{"total", t.total}, {"ngrams", t.counts}};
        }
        j["languages"] = std::move(langs);
        return j.dump() + "\n";
    }

    static NgramLanguageModel deserialize(std::string_view data) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(data);
        } catch (const nlohmann::json::exception &e) {
            throw Error(std::string("malformed language profile: ") + e.what());
        }
        if (j.value("format", "") != "forge-langid") throw Error("not a forge-langid profile");
        if (j.value("version", 0) != 1) throw Error("unsupported language profile version");
        try {
            std::map<std::string, Table> tables;
            for (const auto &[code, entry] : j.at("languages").items()) {
                Table t;
                t.counts = entry.at("ngrams").get<std::map<std::string, std::uint64_t>>();
                t.total = entry.at("total").get<std::uint64_t>();
                std::uint64_t sum = 0;
                for (const auto &kv : t.counts) sum += kv.second;
                if (sum != t.total) throw Error("profile total mismatch for " + code);
                tables.emplace(code, std::move(t));
            }
            return NgramLanguageModel(j.at("n").get<int>(), j.at("smoothing").get<double>(), std::move(tables));
        } catch (const nlohmann::json::exception &e) {
            throw Error(std::string("malformed language profile: ") + e.what());
        }
    }

    void save(const std::filesystem::path &path) const { io::write_file(path, serialize()); }
    static NgramLanguageModel load(const std::filesystem::path &path) { return deserialize(io::read_file(path)); }

private:
    void build_() {
        std::map<std::string, std::vector<double>> merged;
        for (const auto &[code, t] : tables_) langs_.push_back(code);
        // Shared event space: every n-gram seen in any language plus one
        // bucket for unseen ones.
        for (const auto &[code, t] : tables_) {
            for (const auto &kv : t.counts) merged.try_emplace(kv.first);
        }
        const double events = static_cast<double>(merged.size() + 1);
        std::vector<double> denom(langs_.size());
        std::size_t l = 0;
        for (const auto &[code, t] : tables_) {
            denom[l] = std::log(static_cast<double>(t.total) + smoothing_ * events);
            unseen_.push_back(std::log(smoothing_) - denom[l]);
            ++l;
        }
        logprob_.reserve(merged.size());
        for (auto &[gram, unused] : merged) {
            std::vector<double> lp(unseen_);
            l = 0;
            for (const auto &[code, t] : tables_) {
                auto it = t.counts.find(gram);
                if (it != t.counts.end())
                    lp[l] = std::log(static_cast<double>(it->second) + smoothing_) - denom[l];
                ++l;
            }
            logprob_.emplace(gram, std::move(lp));
        }
    }

    int n_;
    double smoothing_;
    std::map<std::string, Table> tables_;
    std::vector<std::string> langs_;
    std::vector<double> unseen_;
    std::unordered_map<std::string, std::vector<double>> logprob_;
};

} // namespace forge
