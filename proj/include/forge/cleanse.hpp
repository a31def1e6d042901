#pragma once

// The page-cleaning cascade: line-length filter, cross-document line
// deduplication, bad-words filter and the language-confidence gate, plus the
// terminal-punctuation line filter used when reproducing English-only C4.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/ingest.hpp"
#include "forge/io.hpp"
#include "forge/langid.hpp"
#include "forge/parallel.hpp"
#include "forge/utf8.hpp"

namespace forge {

struct FilterConfig {
    bool enable_line_length = true;
    int min_long_lines = 3;
    int min_line_chars = 200;
    bool enable_dedup = true;
    bool enable_badwords = true;
    std::filesystem::path badwords_dir;
    bool c4_mode = false;
    double english_prob_threshold = 0.99;
    double confidence_threshold = 0.70;
    std::uint64_t seed = 0;

    void validate() const {
        if (min_long_lines < 1) throw Error("min_long_lines must be >= 1");
        if (min_line_chars < 1) throw Error("min_line_chars must be >= 1");
        if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0))
            throw Error("confidence_threshold must be in (0,1]");
        if (!(english_prob_threshold >= 0.0 && english_prob_threshold <= 1.0))
            throw Error("english_prob_threshold must be in [0,1]");
    }
};

// ---------------------------------------------------------------------------
// Per-page predicates

inline bool line_length_filter(const CleanPage &page, int min_long_lines, int min_line_chars) {
    int long_lines = 0;
    for (const auto &line : page.lines) {
        if (utf8::length(line) >= static_cast<std::size_t>(min_line_chars)) ++long_lines;
    }
    return long_lines >= min_long_lines;
}

inline const std::u32string &default_terminal_punctuation() {
    static const std::u32string set = U".!?\"";
    return set;
}

// Keeps only lines whose last non-space character is in `punctuation`.
inline CleanPage terminal_punct_filter(CleanPage page,
                                       std::u32string_view punctuation = default_terminal_punctuation()) {
    std::vector<std::string> kept;
    for (auto &line : page.lines) {
        const std::u32string cps = utf8::decode(utf8::trim(line));
        if (!cps.empty() && punctuation.find(cps.back()) != std::u32string_view::npos) kept.push_back(std::move(line));
    }
    page.lines = std::move(kept);
    return page;
}

// True (pass) iff prediction.confidence >= threshold; on pass the page takes
// the predicted language and confidence.
inline bool confidence_gate(CleanPage &page, const LangPrediction &prediction, double threshold) {
    if (prediction.confidence < threshold) return false;
    page.language = prediction.language;
    page.confidence = prediction.confidence;
    return true;
}

inline std::string page_text(const CleanPage &page) {
    std::string text;
    for (std::size_t i = 0; i < page.lines.size(); ++i) {
        if (i) text += '\n';
        text += page.lines[i];
    }
    return text;
}

// ---------------------------------------------------------------------------
// Bad words

// One language's list. Alphabetic-script lists match whole words (or whole
// multi-word phrases) case-insensitively; unsegmented-script lists match any
// substring.
struct WordList {
    std::unordered_set<std::u32string> words;
    std::vector<std::u32string> phrases;
    bool unsegmented = false;
};

enum class BadWordsVerdict { pass, drop, no_wordlist };

// Languages whose text has no spaces between words; their lists use
// substring matching unless the file says otherwise.
inline bool is_unsegmented_script(std::string_view lang) {
    static const std::set<std::string, std::less<>> langs{"ja", "zh", "th", "lo", "km", "my", "bo"};
    return langs.count(lang) > 0;
}

class WordLists {
public:
    WordLists() = default;

    // Adds a list from its file content: one entry per line, UTF-8. Blank
    // lines are ignored; "#unsegmented" or "#segmented" on a line of its own
    // overrides the script default.
    void add(const std::string &lang, std::string_view content, std::string_view origin = "") {
        if (auto bad = utf8::first_invalid(content)) {
            throw Error("malformed word list " + std::string(origin.empty() ? lang : origin) +
                        ": invalid UTF-8 at byte offset " + std::to_string(*bad));
        }
        WordList list;
        list.unsegmented = is_unsegmented_script(lang);
        std::size_t start = 0;
        std::size_t line_no = 0;
        while (start < content.size()) {
            std::size_t end = content.find('\n', start);
            if (end == std::string_view::npos) end = content.size();
            ++line_no;
            std::string_view entry = utf8::trim(content.substr(start, end - start));
            start = end + 1;
            if (entry.empty()) continue;
            if (entry == "#unsegmented") {
                list.unsegmented = true;
                continue;
            }
            if (entry == "#segmented") {
                list.unsegmented = false;
                continue;
            }
            if (entry.find('\0') != std::string_view::npos) {
                throw Error("malformed word list " + std::string(origin.empty() ? lang : origin) +
                            ": NUL byte on line " + std::to_string(line_no));
            }
            std::u32string word = utf8::decode(utf8::to_lower(entry));
            const bool simple = std::all_of(word.begin(), word.end(), [](char32_t c) { return utf8::is_word_char(c); });
            if (simple) {
                list.words.insert(word);
            }
            list.phrases.push_back(std::move(word));
        }
        lists_[lang] = std::move(list);
    }

    // Every regular file in `dir` is a list named by its language code.
    static WordLists load_dir(const std::filesystem::path &dir) {
        WordLists out;
        if (dir.empty()) return out;
        if (!std::filesystem::is_directory(dir)) throw Error("bad-words directory not found: " + dir.string());
        std::vector<std::filesystem::path> files;
        for (const auto &entry : std::filesystem::directory_iterator(dir)) {
            if (entry.is_regular_file()) files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto &f : files) {
            out.add(f.stem().string(), io::read_file(f), f.string());
        }
        return out;
    }

    const WordList *find(std::string_view lang) const {
        auto it = lists_.find(std::string(lang));
        return it == lists_.end() ? nullptr : &it->second;
    }

    std::size_t size() const noexcept { return lists_.size(); }

private:
    std::map<std::string, WordList> lists_;
};

inline bool contains_bad_word(const WordList &list, const CleanPage &page) {
    const std::u32string text = utf8::decode(utf8::to_lower(page_text(page)));
    if (list.unsegmented) {
        for (const auto &w : list.phrases) {
            if (text.find(w) != std::u32string::npos) return true;
        }
        return false;
    }
    // Single-word entries: token lookup.
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !utf8::is_word_char(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && utf8::is_word_char(text[j])) ++j;
        if (j > i && list.words.count(text.substr(i, j - i))) return true;
        i = j;
    }
    // Phrases and entries containing non-word characters: bounded substring.
    for (const auto &w : list.phrases) {
        if (list.words.count(w)) continue;
        std::size_t pos = text.find(w);
        while (pos != std::u32string::npos) {
            const bool left = pos == 0 || !utf8::is_word_char(text[pos - 1]) || !utf8::is_word_char(w.front());
            const std::size_t end = pos + w.size();
            const bool right = end == text.size() || !utf8::is_word_char(text[end]) || !utf8::is_word_char(w.back());
            if (left && right) return true;
            pos = text.find(w, pos + 1);
        }
    }
    return false;
}

inline BadWordsVerdict bad_words_filter(const CleanPage &page, const WordLists &lists, std::string_view language) {
    const WordList *list = lists.find(language);
    if (list == nullptr) return BadWordsVerdict::no_wordlist;
    return contains_bad_word(*list, page) ? BadWordsVerdict::drop : BadWordsVerdict::pass;
}

// ---------------------------------------------------------------------------
// Deduplication

// First-occurrence line deduplication across a page stream. Lines compare by
// exact content after trimming surrounding whitespace. Pages must be fed in
// the canonical document order.
class LineDeduplicator {
public:
    // Removes previously seen lines from `page`; returns false if the page is
    // left with no lines.
    bool apply(CleanPage &page) {
        std::vector<std::string> kept;
        kept.reserve(page.lines.size());
        for (auto &line : page.lines) {
            if (seen_.emplace(utf8::trim(line)).second) {
                kept.push_back(std::move(line));
            } else {
                ++lines_dropped_;
            }
        }
        page.lines = std::move(kept);
        return !page.lines.empty();
    }

    std::uint64_t lines_dropped() const noexcept { return lines_dropped_; }
    std::size_t distinct_lines() const noexcept { return seen_.size(); }

private:
    std::unordered_set<std::string> seen_;
    std::uint64_t lines_dropped_ = 0;
};

template <class Range>
std::vector<CleanPage> dedup_lines(const Range &pages) {
    LineDeduplicator dedup;
    std::vector<CleanPage> out;
    for (CleanPage page : pages) {
        if (dedup.apply(page)) out.push_back(std::move(page));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report

struct StageCounts {
    std::string name;
    std::uint64_t pages_in = 0;
    std::uint64_t pages_out = 0;
    std::uint64_t pages_dropped = 0;
    std::uint64_t lines_dropped = 0;
    std::map<std::string, std::uint64_t> reasons;

    bool operator==(const StageCounts &) const = default;
};

struct FilterReport {
    std::vector<StageCounts> stages;

    StageCounts &stage(std::string_view name) {
        for (auto &s : stages) {
            if (s.name == name) return s;
        }
        StageCounts s;
        s.name = std::string(name);
        stages.push_back(std::move(s));
        return stages.back();
    }
    const StageCounts *find(std::string_view name) const {
        for (const auto &s : stages) {
            if (s.name == name) return &s;
        }
        return nullptr;
    }

    std::uint64_t pages_in() const { return stages.empty() ? 0 : stages.front().pages_in; }
    std::uint64_t pages_out() const { return stages.empty() ? 0 : stages.back().pages_out; }

    bool operator==(const FilterReport &) const = default;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["pages_in"] = pages_in();
        j["pages_out"] = pages_out();
        auto arr = nlohmann::ordered_json::array();
        for (const auto &s : stages) {
            nlohmann::ordered_json e;
            e["stage"] = s.name;
            e["pages_in"] = s.pages_in;
            e["pages_out"] = s.pages_out;
            e["pages_dropped"] = s.pages_dropped;
            e["lines_dropped"] = s.lines_dropped;
            e["reasons"] = s.reasons;
            arr.push_back(std::move(e));
        }
        j["stages"] = std::move(arr);
        return j;
    }
};

// ---------------------------------------------------------------------------
// Cascade

// Stateful cascade over a document stream: call process() on consecutive
// batches in canonical order, then read report(). Per-page stages run on
// `threads` workers; dedup runs single-writer in document order, so results
// do not depend on the thread count.
class Cascade {
public:
    Cascade(FilterConfig config, const LanguageIdentifier &identifier, WordLists wordlists = {},
            std::size_t threads = 1)
        : config_(std::move(config)), identifier_(identifier), wordlists_(std::move(wordlists)),
          threads_(threads) {
        config_.validate();
        report_.stage("split");
        if (config_.c4_mode) report_.stage("terminal_punct");
        if (config_.enable_line_length) report_.stage("line_length");
        if (config_.enable_dedup) report_.stage("dedup");
        if (config_.enable_badwords) report_.stage("bad_words");
        report_.stage("lang_gate");
    }

    std::vector<CleanPage> process(const std::vector<RawDocument> &docs) {
        const std::size_t n = docs.size();
        std::vector<CleanPage> pages(n);
        std::vector<std::string> dropped_at(n);
        std::vector<std::string> reason(n);

        parallel_for(n, threads_, [&](std::size_t i) {
            pages[i] = to_page(docs[i]);
            if (pages[i].lines.empty()) {
                dropped_at[i] = "split";
                reason[i] = "empty";
                return;
            }
            if (config_.c4_mode) {
                pages[i] = terminal_punct_filter(std::move(pages[i]));
                if (pages[i].lines.empty()) {
                    dropped_at[i] = "terminal_punct";
                    reason[i] = "no_terminal_punct";
                    return;
                }
            }
            if (config_.enable_line_length &&
                !line_length_filter(pages[i], config_.min_long_lines, config_.min_line_chars)) {
                dropped_at[i] = "line_length";
                reason[i] = "too_few_long_lines";
            }
        });

        std::vector<std::uint64_t> dedup_lines_dropped(n, 0);
        if (config_.enable_dedup) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!dropped_at[i].empty()) continue;
                const std::uint64_t before = dedup_.lines_dropped();
                if (!dedup_.apply(pages[i])) {
                    dropped_at[i] = "dedup";
                    reason[i] = "all_lines_seen";
                }
                dedup_lines_dropped[i] = dedup_.lines_dropped() - before;
            }
        }

        std::vector<char> no_wordlist(n, 0);
        parallel_for(n, threads_, [&](std::size_t i) {
            if (!dropped_at[i].empty()) return;
            const LangPrediction pred = identifier_.classify(page_text(pages[i]));
            if (config_.enable_badwords) {
                switch (bad_words_filter(pages[i], wordlists_, pred.language)) {
                case BadWordsVerdict::drop:
                    dropped_at[i] = "bad_words";
                    reason[i] = "bad_word";
                    return;
                case BadWordsVerdict::no_wordlist:
                    no_wordlist[i] = 1;
                    break;
                case BadWordsVerdict::pass:
                    break;
                }
            }
            bool ok = false;
            if (config_.c4_mode) {
                ok = pred.language == "en" && confidence_gate(pages[i], pred, config_.english_prob_threshold);
            } else {
                ok = confidence_gate(pages[i], pred, config_.confidence_threshold);
            }
            if (!ok) {
                dropped_at[i] = "lang_gate";
                reason[i] = config_.c4_mode && pred.language != "en" ? "not_english" : "low_confidence";
            }
        });

        std::vector<CleanPage> survivors;
        for (std::size_t i = 0; i < n; ++i) {
            account_(dropped_at[i], dedup_lines_dropped[i], reason[i], no_wordlist[i] != 0);
            if (dropped_at[i].empty()) {
                pages[i].source_filters = applied_filters_();
                survivors.push_back(std::move(pages[i]));
            }
        }
        return survivors;
    }

    const FilterReport &report() const noexcept { return report_; }
    const FilterConfig &config() const noexcept { return config_; }

private:
    void account_(const std::string &dropped_at, std::uint64_t dedup_lines, const std::string &reason,
                  bool no_wordlist) {
        for (auto &s : report_.stages) {
            ++s.pages_in;
            if (s.name == "dedup") s.lines_dropped += dedup_lines;
            if (s.name == "bad_words" && no_wordlist) ++s.reasons["no_wordlist"];
            if (s.name == dropped_at) {
                ++s.pages_dropped;
                ++s.reasons[reason.empty() ? s.name : reason];
                return;
            }
            ++s.pages_out;
        }
    }

    std::vector<std::string> applied_filters_() const {
        std::vector<std::string> out;
        for (const auto &s : report_.stages) {
            if (s.name != "split") out.push_back(s.name);
        }
        return out;
    }

    FilterConfig config_;
    const LanguageIdentifier &identifier_;
    WordLists wordlists_;
    std::size_t threads_;
    LineDeduplicator dedup_;
    FilterReport report_;
};

struct CascadeResult {
    std::vector<CleanPage> pages;
    FilterReport report;
};

inline CascadeResult run_cascade(const FilterConfig &config, const std::vector<RawDocument> &docs,
                                 const LanguageIdentifier &identifier, WordLists wordlists = {},
                                 std::size_t threads = 1) {
    Cascade cascade(config, identifier, std::move(wordlists), threads);
    CascadeResult out;
    out.pages = cascade.process(docs);
    out.report = cascade.report();
    return out;
}

} // namespace forge
