#pragma once

// Key-value pipeline settings.
//
//   # comment
//   seed = 17
//   clean.in = corpus/*.jsonl      # relative paths resolve against the file
//
// Keys are dotted names from known_keys(). Later set() calls override earlier
// ones, which is how command-line flags take precedence over the file.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forge/error.hpp"
#include "forge/io.hpp"
#include "forge/utf8.hpp"

namespace forge {

inline const std::vector<std::string> &known_keys() {
    static const std::vector<std::string> keys{
        "seed", "threads", "out", "stages",
        "langid.profile", "langid.train", "langid.n", "langid.smoothing",
        "clean.in", "clean.out", "clean.report", "clean.wordlists", "clean.line_length", "clean.min_long_lines",
        "clean.min_line_chars", "clean.dedup", "clean.badwords", "clean.c4_mode", "clean.english_threshold",
        "clean.confidence_threshold",
        "stats.in", "stats.out", "stats.histogram", "stats.alphas", "stats.min_pages",
        "mix.stats", "mix.in", "mix.out", "mix.alpha", "mix.n", "mix.tokenizer_sample", "mix.sample_chars",
        "corrupt.vocab", "corrupt.in", "corrupt.out", "corrupt.report", "corrupt.rate", "corrupt.mean_span",
        "corrupt.seq_len",
        "cast.task", "cast.in", "cast.out",
        "eval.task", "eval.pred", "eval.gold", "eval.out",
        "plan.out", "plan.warmup_steps", "plan.total_steps", "plan.batch_size", "plan.seq_len",
        "plan.finetune_lr", "plan.finetune_dropout",
    };
    return keys;
}

class Settings {
public:
    struct Entry {
        std::string value;
        std::filesystem::path base; // directory that relative paths resolve against
        std::string origin;         // "file:line" or "flag"
    };

    void set(const std::string &key, std::string value, std::filesystem::path base = {},
             std::string origin = "flag") {
        const auto &keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw Error("unknown setting '" + key + "'" + (origin.empty() ? "" : " (" + origin + ")"));
        }
        entries_[key] = Entry{std::move(value), std::move(base), std::move(origin)};
    }

    void merge(const Settings &over) {
        for (const auto &[k, e] : over.entries_) entries_[k] = e;
    }

    static Settings parse(std::string_view text, const std::filesystem::path &base, const std::string &name) {
        Settings s;
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start < text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            std::string_view line = text.substr(start, end - start);
            start = end + 1;
            ++line_no;
            const std::string where = name + ":" + std::to_string(line_no);
            // A '#' starts a comment at the beginning of a line or after blanks.
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
                    line = line.substr(0, i);
                    break;
                }
            }
            line = utf8::trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw Error(where + ": expected 'key = value'");
            const std::string key(utf8::trim(line.substr(0, eq)));
            const std::string value(utf8::trim(line.substr(eq + 1)));
            if (key.empty()) throw Error(where + ": empty key");
            if (s.has(key)) throw Error(where + ": duplicate key '" + key + "'");
            s.set(key, value, base, where);
        }
        return s;
    }

    static Settings load(const std::filesystem::path &path) {
        if (!std::filesystem::exists(path)) throw Error("no such config file: " + path.string());
        const auto base = std::filesystem::absolute(path).parent_path();
        return parse(io::read_file(path), base, path.filename().string());
    }

    bool has(const std::string &key) const { return entries_.count(key) != 0; }

    std::optional<std::string> get(const std::string &key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return std::nullopt;
        return it->second.value;
    }

    std::string str(const std::string &key, std::string def = {}) const { return get(key).value_or(std::move(def)); }

    std::optional<std::filesystem::path> path(const std::string &key) const {
        auto it = entries_.find(key);
        if (it == entries_.end() || it->second.value.empty()) return std::nullopt;
        std::filesystem::path p(it->second.value);
        if (p.is_relative() && !it->second.base.empty()) p = it->second.base / p;
        return p.lexically_normal();
    }

    std::uint64_t uint(const std::string &key, std::uint64_t def) const {
        auto v = get(key);
        if (!v) return def;
        std::uint64_t out = 0;
        const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
        if (ec != std::errc{} || ptr != v->data() + v->size() || v->empty()) bad_(key, "a non-negative integer");
        return out;
    }

    double real(const std::string &key, double def) const {
        auto v = get(key);
        if (!v) return def;
        char *end = nullptr;
        const double out = std::strtod(v->c_str(), &end);
        if (v->empty() || end != v->c_str() + v->size()) bad_(key, "a number");
        return out;
    }

    bool boolean(const std::string &key, bool def) const {
        auto v = get(key);
        if (!v) return def;
        if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
        if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
        bad_(key, "true or false");
        return def;
    }

    std::vector<double> reals(const std::string &key, std::vector<double> def) const {
        auto v = get(key);
        if (!v) return def;
        std::vector<double> out;
        std::size_t start = 0;
        while (start <= v->size()) {
            std::size_t end = v->find(',', start);
            if (end == std::string::npos) end = v->size();
            const std::string item(utf8::trim(std::string_view(*v).substr(start, end - start)));
            char *stop = nullptr;
            const double x = std::strtod(item.c_str(), &stop);
            if (item.empty() || stop != item.c_str() + item.size()) bad_(key, "a comma-separated list of numbers");
            out.push_back(x);
            start = end + 1;
        }
        return out;
    }

    const std::map<std::string, Entry> &entries() const noexcept { return entries_; }

private:
    [[noreturn]] void bad_(const std::string &key, const char *want) const {
        const auto &e = entries_.at(key);
        throw Error("setting " + key + " (" + e.origin + "): expected " + want + ", got '" + e.value + "'");
    }

    std::map<std::string, Entry> entries_;
};

// The seed from settings, else FORGE_SEED; there is no default.
inline std::uint64_t resolve_seed(const Settings &s) {
    if (s.has("seed")) return s.uint("seed", 0);
    if (const char *env = std::getenv("FORGE_SEED"); env != nullptr && *env != '\0') {
        Settings e;
        e.set("seed", env, {}, "FORGE_SEED");
        return e.uint("seed", 0);
    }
    throw Error("a seed is required: pass --seed, set 'seed' in the config, or export FORGE_SEED");
}

} // namespace forge
