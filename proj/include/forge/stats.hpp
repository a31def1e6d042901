#pragma once

// Per-language corpus statistics. LanguageStats is a commutative monoid
// under merge(), so shards can be accumulated independently.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/ingest.hpp"
#include "forge/io.hpp"
#include "forge/mixture.hpp"
#include "forge/utf8.hpp"

namespace forge {

inline constexpr std::uint64_t kDefaultMinPages = 10000;

struct LanguageCounts {
    std::uint64_t pages = 0;
    std::uint64_t tokens = 0; // whitespace-delimited runs, not subword pieces
    std::uint64_t bytes = 0;  // UTF-8 bytes of the retained lines, separators excluded

    LanguageCounts &operator+=(const LanguageCounts &o) {
        pages += o.pages;
        tokens += o.tokens;
        bytes += o.bytes;
        return *this;
    }
    bool operator==(const LanguageCounts &) const = default;
};

struct LanguageStats {
    std::map<std::string, LanguageCounts> languages;

    LanguageCounts totals() const {
        LanguageCounts t;
        for (const auto &kv : languages) t += kv.second;
        return t;
    }

    void add(const CleanPage &page) {
        if (page.language.empty()) throw Error("page without language: " + page.url);
        LanguageCounts &c = languages[page.language];
        ++c.pages;
        for (const auto &line : page.lines) {
            c.bytes += line.size();
            c.tokens += count_whitespace_tokens(line);
        }
    }

    LanguageStats &merge(const LanguageStats &o) {
        for (const auto &[lang, c] : o.languages) languages[lang] += c;
        return *this;
    }

    std::map<std::string, std::uint64_t> page_counts() const {
        std::map<std::string, std::uint64_t> out;
        for (const auto &[lang, c] : languages) out[lang] = c.pages;
        return out;
    }

    bool operator==(const LanguageStats &) const = default;

    static std::uint64_t count_whitespace_tokens(std::string_view line) {
        std::uint64_t n = 0;
        bool in_token = false;
        std::size_t pos = 0;
        while (pos < line.size()) {
            char32_t cp = 0;
            std::size_t len = utf8::decode_one(line, pos, cp);
            if (len == 0) {
                len = 1;
                cp = utf8::kReplacement;
            }
            const bool space = utf8::is_space(cp);
            if (!space && !in_token) ++n;
            in_token = !space;
            pos += len;
        }
        return n;
    }
};

template <class Range>
LanguageStats accumulate(const Range &pages) {
    LanguageStats s;
    for (const CleanPage &p : pages) s.add(p);
    return s;
}

inline std::set<std::string> apply_inclusion_threshold(const LanguageStats &stats,
                                                       std::uint64_t min_pages = kDefaultMinPages) {
    std::set<std::string> out;
    for (const auto &[lang, c] : stats.languages) {
        if (c.pages >= min_pages) out.insert(lang);
    }
    return out;
}

struct HistogramRow {
    std::string language;
    std::uint64_t pages = 0;
    std::vector<double> percent; // one per alpha
};

// Rows sorted by descending page count (ties by code), with the sampling
// percentage of each language at every requested alpha.
inline std::vector<HistogramRow> export_histogram(const LanguageStats &stats, const std::vector<double> &alphas) {
    if (stats.languages.empty()) throw Error("cannot build a histogram from empty statistics");
    for (double a : alphas) {
        if (!(a > 0.0)) throw Error("alpha must be > 0");
    }
    const auto counts = stats.page_counts();
    std::vector<MixtureSpec> specs;
    for (double a : alphas) specs.push_back(compute_sampling_probs(counts, a));
    std::vector<HistogramRow> rows;
    for (const auto &[lang, c] : stats.languages) {
        HistogramRow r{lang, c.pages, {}};
        for (const auto &s : specs) r.percent.push_back(100.0 * s.probs.at(lang));
        rows.push_back(std::move(r));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const HistogramRow &a, const HistogramRow &b) { return a.pages > b.pages; });
    return rows;
}

inline std::string format_alpha(double a) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", a);
    return buf;
}

inline std::string histogram_tsv(const std::vector<HistogramRow> &rows, const std::vector<double> &alphas) {
    std::string out = "language\tpages";
    for (double a : alphas) out += "\tpct_alpha_" + format_alpha(a);
    out += '\n';
    char buf[64];
    for (const auto &r : rows) {
        out += r.language;
        out += '\t';
        out += std::to_string(r.pages);
        for (double p : r.percent) {
            std::snprintf(buf, sizeof buf, "\t%.6f", p);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline nlohmann::ordered_json to_json(const LanguageStats &stats, const std::set<std::string> *included = nullptr) {
    nlohmann::ordered_json j;
    j["format"] = "forge-stats";
    j["version"] = 1;
    auto langs = nlohmann::ordered_json::object();
    for (const auto &[lang, c] : stats.languages) {
        langs[lang] = {{"pages", c.pages}, {"tokens", c.tokens}, {"bytes", c.bytes}};
    }
    j["languages"] = std::move(langs);
    const auto t = stats.totals();
    j["totals"] = {{"pages", t.pages}, {"tokens", t.tokens}, {"bytes", t.bytes}};
    if (included != nullptr) j["included"] = *included;
    return j;
}

struct StatsFile {
    LanguageStats stats;
    std::set<std::string> included; // empty if the file did not record one
    bool has_included = false;
};

inline StatsFile read_stats(const std::filesystem::path &path) {
    StatsFile out;
    try {
        const auto j = nlohmann::json::parse(io::read_file(path));
        if (j.value("format", "") != "forge-stats") throw Error("not a forge-stats file: " + path.string());
        for (const auto &[lang, e] : j.at("languages").items()) {
            out.stats.languages[lang] = {e.at("pages").get<std::uint64_t>(), e.at("tokens").get<std::uint64_t>(),
                                         e.at("bytes").get<std::uint64_t>()};
        }
        if (j.contains("included")) {
            out.included = j.at("included").get<std::set<std::string>>();
            out.has_included = true;
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error("malformed stats file " + path.string() + ": " + e.what());
    }
    return out;
}

} // namespace forge
