#pragma once

// Document streams in the JSON-lines interchange format.
//
//   raw documents:  {"url": str, "timestamp": str, "text": str}
//   clean pages:    {"url", "timestamp", "lines": [str], "language": str,
//                    "confidence": num, "source_filters": [str]}
//
// Readers pull one record at a time, so memory is bounded by a single
// document regardless of file size. ".gz" files are (de)compressed on the fly.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "forge/error.hpp"
#include "forge/io.hpp"
#include "forge/utf8.hpp"

namespace forge {

struct RawDocument {
    std::string url;
    std::string timestamp;
    std::string text;

    bool operator==(const RawDocument &) const = default;
};

struct CleanPage {
    std::string url;
    std::string timestamp;
    std::vector<std::string> lines;
    std::string language;
    double confidence = 0.0;
    std::vector<std::string> source_filters;

    bool operator==(const CleanPage &) const = default;
};

// Splits on '\n', strips one trailing '\r' per line and drops empty lines.
inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) lines.emplace_back(line);
        start = end + 1;
    }
    return lines;
}

inline CleanPage to_page(const RawDocument &doc) {
    CleanPage page;
    page.url = doc.url;
    page.timestamp = doc.timestamp;
    page.lines = split_lines(doc.text);
    return page;
}

namespace detail {

inline nlohmann::json parse_record(io::LineReader &reader, const std::string &line) {
    if (auto bad = utf8::first_invalid(line)) {
        throw Error("invalid UTF-8 at byte offset " + std::to_string(reader.line_offset() + *bad) +
                    " (line " + std::to_string(reader.line_number()) + ") in " + reader.path().string());
    }
    try {
        auto j = nlohmann::json::parse(line);
        if (!j.is_object()) throw Error("record is not an object");
        return j;
    } catch (const nlohmann::json::exception &e) {
        throw Error("malformed record at line " + std::to_string(reader.line_number()) + ": " + e.what());
    } catch (const Error &e) {
        throw Error(std::string(e.what()) + " at line " + std::to_string(reader.line_number()));
    }
}

inline std::string string_field(const nlohmann::json &j, const char *name, std::size_t line_no) {
    auto it = j.find(name);
    if (it == j.end()) throw Error(std::string("missing field ") + name + " at line " + std::to_string(line_no));
    if (!it->is_string())
        throw Error(std::string("field ") + name + " is not a string at line " + std::to_string(line_no));
    return it->get<std::string>();
}

} // namespace detail

// Pull-based reader over a raw-document JSONL file. Blank lines are skipped.
class DocumentReader {
public:
    explicit DocumentReader(const std::filesystem::path &path) : reader_(path) {}

    std::optional<RawDocument> next() {
        while (auto line = reader_.next()) {
            if (utf8::trim(*line).empty()) continue;
            const auto j = detail::parse_record(reader_, *line);
            const std::size_t n = reader_.line_number();
            RawDocument doc{detail::string_field(j, "url", n), detail::string_field(j, "timestamp", n),
                            detail::string_field(j, "text", n)};
            if (doc.url.empty()) throw Error("empty url at line " + std::to_string(n));
            return doc;
        }
        return std::nullopt;
    }

private:
    io::LineReader reader_;
};

inline std::vector<RawDocument> read_documents(const std::filesystem::path &path) {
    DocumentReader reader(path);
    std::vector<RawDocument> docs;
    while (auto d = reader.next()) docs.push_back(std::move(*d));
    return docs;
}

inline std::string to_jsonl(const CleanPage &p) {
    nlohmann::ordered_json j;
    j["url"] = p.url;
    j["timestamp"] = p.timestamp;
    j["lines"] = p.lines;
    j["language"] = p.language;
    j["confidence"] = p.confidence;
    j["source_filters"] = p.source_filters;
    return j.dump();
}

class PageReader {
public:
    explicit PageReader(const std::filesystem::path &path) : reader_(path) {}

    std::optional<CleanPage> next() {
        while (auto line = reader_.next()) {
            if (utf8::trim(*line).empty()) continue;
            const auto j = detail::parse_record(reader_, *line);
            const std::size_t n = reader_.line_number();
            CleanPage p;
            p.url = detail::string_field(j, "url", n);
            p.timestamp = detail::string_field(j, "timestamp", n);
            try {
                p.lines = j.at("lines").get<std::vector<std::string>>();
                p.language = j.value("language", std::string{});
                p.confidence = j.value("confidence", 0.0);
                p.source_filters = j.value("source_filters", std::vector<std::string>{});
            } catch (const nlohmann::json::exception &e) {
                throw Error("malformed page at line " + std::to_string(n) + ": " + e.what());
            }
            return p;
        }
        return std::nullopt;
    }

private:
    io::LineReader reader_;
};

inline std::vector<CleanPage> read_pages(const std::filesystem::path &path) {
    PageReader reader(path);
    std::vector<CleanPage> pages;
    while (auto p = reader.next()) pages.push_back(std::move(*p));
    return pages;
}

// Streaming page writer; the file appears only after commit().
class PageWriter {
public:
    explicit PageWriter(const std::filesystem::path &path) : out_(path) {}

    void write(const CleanPage &page) {
        out_.write_line(to_jsonl(page));
        ++count_;
    }
    std::size_t commit() {
        out_.commit();
        return count_;
    }

private:
    io::AtomicWriter out_;
    std::size_t count_ = 0;
};

template <class Range>
std::size_t write_pages(const Range &pages, const std::filesystem::path &path) {
    PageWriter w(path);
    for (const CleanPage &p : pages) w.write(p);
    return w.commit();
}

} // namespace forge
