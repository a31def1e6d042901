#pragma once

// Line-oriented file access with transparent gzip (by ".gz" suffix) and
// temp-then-rename writes.

#include <zlib.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "forge/error.hpp"

namespace forge::io {

inline bool is_gzip_path(const std::filesystem::path &p) { return p.extension() == ".gz"; }

class LineReader {
public:
    explicit LineReader(const std::filesystem::path &path) : path_(path) {
        if (!std::filesystem::exists(path)) throw Error("no such file: " + path.string());
        if (is_gzip_path(path)) {
            gz_ = gzopen(path.c_str(), "rb");
            if (gz_ == nullptr) throw Error("cannot open " + path.string());
        } else {
            in_.open(path, std::ios::binary);
            if (!in_) throw Error("cannot open " + path.string());
        }
    }
    ~LineReader() {
        if (gz_ != nullptr) gzclose(gz_);
    }
    LineReader(const LineReader &) = delete;
    LineReader &operator=(const LineReader &) = delete;

    // Next line without its '\n'; nullopt at end of file.
    std::optional<std::string> next() {
        std::string line;
        if (gz_ == nullptr) {
            if (!std::getline(in_, line)) return std::nullopt;
        } else {
            char buf[8192];
            bool any = false;
            while (gzgets(gz_, buf, sizeof buf) != nullptr) {
                any = true;
                line.append(buf);
                if (!line.empty() && line.back() == '\n') {
                    line.pop_back();
                    break;
                }
            }
            if (!any) {
                int err = Z_OK;
                gzerror(gz_, &err);
                if (err != Z_OK && err != Z_STREAM_END) throw Error("gzip read error in " + path_.string());
                return std::nullopt;
            }
        }
        line_start_ = offset_;
        offset_ += line.size() + 1;
        ++line_no_;
        return line;
    }

    std::size_t line_number() const noexcept { return line_no_; }
    // Byte offset of the start of the line most recently returned.
    std::size_t line_offset() const noexcept { return line_start_; }
    const std::filesystem::path &path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    gzFile gz_ = nullptr;
    std::size_t line_no_ = 0;
    std::size_t offset_ = 0;
    std::size_t line_start_ = 0;
};

// Writes to "<path>.tmp" and renames over <path> on commit(). A writer
// destroyed without commit() removes its temp file, so the destination is
// either the previous content or the complete new content.
class AtomicWriter {
public:
    explicit AtomicWriter(std::filesystem::path path)
        : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
        if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
        if (is_gzip_path(path_)) {
            gz_ = gzopen(tmp_.c_str(), "wb");
            if (gz_ == nullptr) throw Error("cannot write " + tmp_.string());
        } else {
            out_.open(tmp_, std::ios::binary | std::ios::trunc);
            if (!out_) throw Error("cannot write " + tmp_.string());
        }
    }
    ~AtomicWriter() {
        if (!committed_) {
            close_();
            std::error_code ec;
            std::filesystem::remove(tmp_, ec);
        }
    }
    AtomicWriter(const AtomicWriter &) = delete;
    AtomicWriter &operator=(const AtomicWriter &) = delete;

    void write(std::string_view data) {
        if (gz_ != nullptr) {
            if (!data.empty() &&
                gzwrite(gz_, data.data(), static_cast<unsigned>(data.size())) != static_cast<int>(data.size()))
                throw Error("gzip write failed: " + tmp_.string());
        } else {
            out_.write(data.data(), static_cast<std::streamsize>(data.size()));
            if (!out_) throw Error("write failed: " + tmp_.string());
        }
    }

    void write_line(std::string_view line) {
        write(line);
        write("\n");
    }

    void commit() {
        if (committed_) return;
        close_();
        if (!ok_) throw Error("write failed: " + tmp_.string());
        std::filesystem::rename(tmp_, path_);
        committed_ = true;
    }

private:
    void close_() {
        if (gz_ != nullptr) {
            if (gzclose(gz_) != Z_OK) ok_ = false;
            gz_ = nullptr;
        } else if (out_.is_open()) {
            out_.flush();
            if (!out_) ok_ = false;
            out_.close();
        }
    }

    std::filesystem::path path_;
    std::filesystem::path tmp_;
    std::ofstream out_;
    gzFile gz_ = nullptr;
    bool committed_ = false;
    bool ok_ = true;
};

inline void write_file(const std::filesystem::path &path, std::string_view content) {
    AtomicWriter w(path);
    w.write(content);
    w.commit();
}

inline std::string read_file(const std::filesystem::path &path) {
    if (!is_gzip_path(path)) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open " + path.string());
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }
    LineReader r(path);
    std::string out;
    while (auto line = r.next()) {
        out += *line;
        out += '\n';
    }
    return out;
}

} // namespace forge::io
