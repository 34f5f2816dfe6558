#pragma once

// Little-endian primitive encoding shared by the TGBE and TGBH formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "tagrec/errors.hpp"

namespace tagrec::io {

class LeWriter {
public:
    explicit LeWriter(std::ostream& out) : out_(out) {}

    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    void bytes(std::string_view s) {
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
        written_ += s.size();
    }

    void f32s(std::span<const float> values) {
        for (float v : values) f32(v);
    }

    std::uint64_t written() const noexcept { return written_; }

private:
    void put(std::uint64_t v, int width) {
        char buf[8];
        for (int i = 0; i < width; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        out_.write(buf, width);
        written_ += static_cast<std::uint64_t>(width);
    }

    std::ostream& out_;
    std::uint64_t written_ = 0;
};

// Reader that tracks its byte offset and raises FormatError on short reads.
class LeReader {
public:
    explicit LeReader(std::istream& in, std::uint64_t offset = 0) : in_(in), offset_(offset) {}

    std::uint32_t u32(const char* what) { return static_cast<std::uint32_t>(get(4, what)); }
    std::uint64_t u64(const char* what) { return get(8, what); }
    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

    std::string bytes(std::size_t n, const char* what) {
        std::string s(n, '\0');
        raw(s.data(), n, what);
        return s;
    }

    void f32s(std::span<float> out, const char* what) {
        // One bulk read, then decode in place.
        std::string buf(out.size() * 4, '\0');
        raw(buf.data(), buf.size(), what);
        for (std::size_t i = 0; i < out.size(); ++i) {
            std::uint32_t bits = 0;
            for (int b = 0; b < 4; ++b)
                bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[4 * i + b])) << (8 * b);
            out[i] = std::bit_cast<float>(bits);
        }
    }

    // True when the stream has no more bytes.
    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

    std::uint64_t offset() const noexcept { return offset_; }

private:
    void raw(char* dst, std::size_t n, const char* what) {
        in_.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in_.gcount()) != n)
            throw FormatError(std::string("truncated record: expected ") + what, offset_);
        offset_ += n;
    }

    std::uint64_t get(int width, const char* what) {
        unsigned char buf[8];
        raw(reinterpret_cast<char*>(buf), static_cast<std::size_t>(width), what);
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        return v;
    }

    std::istream& in_;
    std::uint64_t offset_;
};

}  // namespace tagrec::io
