#pragma once

// Wordpiece inventory with byte fallback.
//
// File format (UTF-8, one entry per line):
//
//   #forge-vocab 1
//   #special pad=<pad> eos=</s> unk=<unk>
//   #sentinels 100
//   <pad>\t0
//   </s>\t0
//   <unk>\t0
//   <0x00>\t0          byte pieces, "<0xHH>"
//   ...
//   ▁the\t-3.1         U+2581 marks a space
//
// Header lines come first. Piece ids follow file order. Byte pieces missing
// from the file are appended after the listed pieces, and the sentinel ids
// occupy the top of the id space: sentinel i has id V-1-i.
//
// Encoding maps spaces to U+2581 and segments greedily by longest match;
// any character no piece covers becomes its UTF-8 bytes. A literal U+2581 in
// the input is always byte-encoded so decoding stays unambiguous.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "forge/error.hpp"
#include "forge/io.hpp"
#include "forge/utf8.hpp"

namespace forge {

using TokenId = std::int32_t;

inline constexpr char32_t kMetaSpace = 0x2581;
inline constexpr std::string_view kMetaSpaceUtf8 = "\xE2\x96\x81";

inline std::string sentinel_text(std::size_t i) { return "<extra_id_" + std::to_string(i) + ">"; }

inline std::string byte_piece_text(unsigned b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "<0x%02X>", b);
    return buf;
}

inline std::optional<unsigned> parse_byte_piece(std::string_view s) {
    if (s.size() != 6 || s.substr(0, 3) != "<0x" || s[5] != '>') return std::nullopt;
    unsigned v = 0;
    for (char c : s.substr(3, 2)) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<unsigned>(c - '0');
        else if (c >= 'A' && c <= 'F') v |= static_cast<unsigned>(c - 'A' + 10);
        else if (c >= 'a' && c <= 'f') v |= static_cast<unsigned>(c - 'a' + 10);
        else return std::nullopt;
    }
    return v;
}

struct VocabSpecials {
    std::string pad = "<pad>";
    std::string eos = "</s>";
    std::string unk = "<unk>";
};

class Vocabulary {
public:
    using Specials = VocabSpecials;

    // Builds from pieces in id order (specials and byte pieces included or
    // not); missing byte pieces and the sentinels are appended.
    Vocabulary(std::vector<std::string> pieces, std::vector<float> scores, std::size_t sentinel_count,
               const Specials &specials = {}) {
        byte_ids_.fill(-1);
        if (pieces.empty()) throw Error("vocabulary has no pieces");
        scores.resize(pieces.size(), 0.0f);
        for (std::size_t i = 0; i < pieces.size(); ++i) add_piece_(std::move(pieces[i]), scores[i]);
        for (unsigned b = 0; b < 256; ++b) {
            if (byte_ids_[b] < 0) {
                add_piece_(byte_piece_text(b), 0.0f);
                ++synthesized_bytes_;
            }
        }
        pad_ = require_(specials.pad, "pad");
        eos_ = require_(specials.eos, "eos");
        unk_ = require_(specials.unk, "unk");
        // Sentinels fill the top ids in descending order: sentinel i = V-1-i.
        sentinel_count_ = sentinel_count;
        first_sentinel_ = static_cast<TokenId>(pieces_.size());
        for (std::size_t k = 0; k < sentinel_count; ++k) {
            add_piece_(sentinel_text(sentinel_count - 1 - k), 0.0f, true);
        }
    }

    static Vocabulary parse(std::string_view content) {
        if (utf8::trim(content).empty()) throw Error("empty vocabulary file");
        if (auto bad = utf8::first_invalid(content)) {
            throw Error("vocabulary is not valid UTF-8 at byte offset " + std::to_string(*bad));
        }
        Specials specials;
        std::size_t sentinels = 0;
        bool saw_version = false;
        bool in_header = true;
        std::vector<std::string> pieces;
        std::vector<float> scores;
        std::size_t start = 0;
        std::size_t line_no = 0;
        while (start < content.size()) {
            std::size_t end = content.find('\n', start);
            if (end == std::string_view::npos) end = content.size();
            std::string_view line = content.substr(start, end - start);
            start = end + 1;
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (in_header && !line.empty() && line.front() == '#') {
                parse_header_(line, specials, sentinels, saw_version, line_no);
                continue;
            }
            in_header = false;
            if (!saw_version) throw Error("vocabulary header must start with '#forge-vocab 1'");
            if (line.empty()) {
                if (start >= content.size()) break; // trailing newline
                throw Error("empty piece at line " + std::to_string(line_no));
            }
            const std::size_t tab = line.rfind('\t');
            std::string_view piece = tab == std::string_view::npos ? line : line.substr(0, tab);
            float score = 0.0f;
            if (tab != std::string_view::npos) {
                try {
                    score = std::stof(std::string(line.substr(tab + 1)));
                } catch (const std::exception &) {
                    throw Error("bad score at line " + std::to_string(line_no));
                }
            }
            if (piece.empty()) throw Error("empty piece at line " + std::to_string(line_no));
            pieces.emplace_back(piece);
            scores.push_back(score);
        }
        if (!saw_version) throw Error("vocabulary header must start with '#forge-vocab 1'");
        return Vocabulary(std::move(pieces), std::move(scores), sentinels, specials);
    }

    static Vocabulary load(const std::filesystem::path &path) { return parse(io::read_file(path)); }

    std::size_t size() const noexcept { return pieces_.size(); }
    std::size_t sentinel_count() const noexcept { return sentinel_count_; }
    std::size_t synthesized_bytes() const noexcept { return synthesized_bytes_; }
    TokenId pad_id() const noexcept { return pad_; }
    TokenId eos_id() const noexcept { return eos_; }
    TokenId unk_id() const noexcept { return unk_; }
    TokenId byte_id(unsigned char b) const noexcept { return byte_ids_[b]; }
    const std::string &piece(TokenId id) const { return pieces_.at(static_cast<std::size_t>(id)); }
    float score(TokenId id) const { return scores_.at(static_cast<std::size_t>(id)); }

    TokenId sentinel_id(std::size_t i) const {
        if (i >= sentinel_count_) throw Error("sentinel index out of range: " + std::to_string(i));
        return static_cast<TokenId>(size() - 1 - i);
    }
    bool is_sentinel(TokenId id) const noexcept {
        return id >= first_sentinel_ && static_cast<std::size_t>(id) < size();
    }
    std::size_t sentinel_index(TokenId id) const noexcept { return size() - 1 - static_cast<std::size_t>(id); }
    bool is_byte(TokenId id) const noexcept { return byte_of_(id) >= 0; }

    std::optional<TokenId> find(std::string_view piece) const {
        auto it = index_.find(std::string(piece));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<TokenId> encode(std::string_view text) const {
        std::vector<TokenId> ids;
        const std::u32string cps = utf8::decode(text);
        std::string candidate;
        std::size_t i = 0;
        while (i < cps.size()) {
            if (cps[i] == kMetaSpace) {
                for (char c : kMetaSpaceUtf8) ids.push_back(byte_ids_[static_cast<unsigned char>(c)]);
                ++i;
                continue;
            }
            candidate.clear();
            TokenId best = -1;
            std::size_t best_len = 0;
            for (std::size_t len = 1; len <= max_piece_cps_ && i + len <= cps.size(); ++len) {
                const char32_t c = cps[i + len - 1];
                if (c == kMetaSpace) break;
                utf8::append(candidate, c == U' ' ? kMetaSpace : c);
                auto it = text_index_.find(candidate);
                if (it != text_index_.end()) {
                    best = it->second;
                    best_len = len;
                }
            }
            if (best >= 0) {
                ids.push_back(best);
                i += best_len;
            } else {
                std::string bytes;
                utf8::append(bytes, cps[i]);
                for (unsigned char b : bytes) ids.push_back(byte_ids_[b]);
                ++i;
            }
        }
        return ids;
    }

    // Inverse of encode. Sentinels render as "<extra_id_i>"; pad and eos
    // render as nothing.
    std::string decode(const std::vector<TokenId> &ids) const {
        std::string out;
        std::string run;
        std::size_t run_start = 0;
        auto flush = [&] {
            if (run.empty()) return;
            if (auto bad = utf8::first_invalid(run)) {
                throw Error("invalid UTF-8 in byte-fallback run starting at id offset " + std::to_string(run_start) +
                            " (byte " + std::to_string(*bad) + " of the run)");
            }
            out += run;
            run.clear();
        };
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const TokenId id = ids[k];
            if (id < 0 || static_cast<std::size_t>(id) >= size()) {
                throw Error("unknown id " + std::to_string(id) + " at offset " + std::to_string(k));
            }
            const int b = byte_of_(id);
            if (b >= 0) {
                if (run.empty()) run_start = k;
                run.push_back(static_cast<char>(b));
                continue;
            }
            flush();
            if (id == pad_ || id == eos_) continue;
            if (is_sentinel(id)) {
                out += sentinel_text(sentinel_index(id));
                continue;
            }
            const std::string &p = pieces_[static_cast<std::size_t>(id)];
            if (id == unk_) {
                out += p;
                continue;
            }
            std::size_t pos = 0;
            while (pos < p.size()) {
                if (p.compare(pos, kMetaSpaceUtf8.size(), kMetaSpaceUtf8) == 0) {
                    out += ' ';
                    pos += kMetaSpaceUtf8.size();
                } else {
                    out += p[pos++];
                }
            }
        }
        flush();
        return out;
    }

private:
    static void parse_header_(std::string_view line, Specials &specials, std::size_t &sentinels, bool &saw_version,
                              std::size_t line_no) {
        auto fail = [&](const std::string &what) {
            throw Error("bad vocabulary header at line " + std::to_string(line_no) + ": " + what);
        };
        if (line.substr(0, 12) == "#forge-vocab") {
            if (utf8::trim(line.substr(12)) != "1") fail("unsupported version");
            saw_version = true;
        } else if (!saw_version) {
            fail("first line must be '#forge-vocab 1'");
        } else if (line.substr(0, 10) == "#sentinels") {
            try {
                const long v = std::stol(std::string(utf8::trim(line.substr(10))));
                if (v < 0) fail("negative sentinel count");
                sentinels = static_cast<std::size_t>(v);
            } catch (const std::logic_error &) {
                fail("sentinel count is not a number");
            }
        } else if (line.substr(0, 8) == "#special") {
            std::string_view rest = line.substr(8);
            while (!(rest = utf8::trim(rest)).empty()) {
                const std::size_t sp = rest.find(' ');
                const std::string_view kv = rest.substr(0, sp);
                rest = sp == std::string_view::npos ? std::string_view{} : rest.substr(sp);
                const std::size_t eq = kv.find('=');
                if (eq == std::string_view::npos || eq + 1 == kv.size()) fail("expected key=value");
                const std::string_view key = kv.substr(0, eq);
                const std::string value(kv.substr(eq + 1));
                if (key == "pad") specials.pad = value;
                else if (key == "eos") specials.eos = value;
                else if (key == "unk") specials.unk = value;
                else fail("unknown special '" + std::string(key) + "'");
            }
        } else {
            fail("unknown directive");
        }
    }

    void add_piece_(std::string piece, float score, bool sentinel = false) {
        if (piece.empty()) throw Error("empty piece");
        const auto id = static_cast<TokenId>(pieces_.size());
        if (!sentinel && piece.rfind("<extra_id_", 0) == 0) throw Error("piece collides with a sentinel name: " + piece);
        if (!index_.emplace(piece, id).second) throw Error("duplicate piece: " + piece);
        int byte = -1;
        if (sentinel) {
            // not matchable
        } else if (auto b = parse_byte_piece(piece)) {
            byte_ids_[*b] = id;
            byte = static_cast<int>(*b);
        } else {
            text_index_.emplace(piece, id);
            max_piece_cps_ = std::max(max_piece_cps_, utf8::length(piece));
        }
        pieces_.push_back(std::move(piece));
        scores_.push_back(score);
        byte_value_.push_back(static_cast<std::int16_t>(byte));
    }

    TokenId require_(const std::string &piece, const char *role) {
        auto it = index_.find(piece);
        if (it == index_.end()) throw Error(std::string("vocabulary lacks the ") + role + " piece " + piece);
        text_index_.erase(piece);
        return it->second;
    }

    int byte_of_(TokenId id) const noexcept {
        if (id < 0 || static_cast<std::size_t>(id) >= size()) return -1;
        return byte_value_[static_cast<std::size_t>(id)];
    }

    std::vector<std::string> pieces_;
    std::vector<float> scores_;
    std::vector<std::int16_t> byte_value_;
    std::unordered_map<std::string, TokenId> index_;
    std::unordered_map<std::string, TokenId> text_index_;
    std::array<TokenId, 256> byte_ids_{};
    std::size_t max_piece_cps_ = 0;
    std::size_t sentinel_count_ = 0;
    std::size_t synthesized_bytes_ = 0;
    TokenId first_sentinel_ = -1;
    TokenId pad_ = -1;
    TokenId eos_ = -1;
    TokenId unk_ = -1;
};

inline Vocabulary load_vocab(const std::filesystem::path &path) { return Vocabulary::load(path); }

} // namespace forge
