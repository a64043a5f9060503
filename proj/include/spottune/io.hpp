#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "spottune/error.hpp"

namespace spottune {

std::vector<unsigned char> read_file(const std::string& path);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a half-written file.
void write_file_atomic(const std::string& path, const void* data, std::size_t size);
inline void write_file_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);

// Little-endian serializer for the binary file formats.
class ByteWriter {
public:
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void bytes(const void* p, std::size_t n) { raw(p, n); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

    const std::vector<unsigned char>& buffer() const { return buf_; }

private:
    void raw(const void* p, std::size_t n) {
        static_assert(std::endian::native == std::endian::little,
                      "file formats are little-endian");
        const auto* c = static_cast<const unsigned char*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    std::vector<unsigned char> buf_;
};

// Bounds-checked little-endian reader; every failure is a ParseError carrying
// the byte offset where it happened.
class ByteReader {
public:
    explicit ByteReader(const std::vector<unsigned char>& buf) : buf_(buf) {}

    std::uint32_t u32(const char* what) {
        std::uint32_t v;
        raw(&v, sizeof v, what);
        return v;
    }
    std::uint64_t u64(const char* what) {
        std::uint64_t v;
        raw(&v, sizeof v, what);
        return v;
    }
    double f64(const char* what) {
        double v;
        raw(&v, sizeof v, what);
        return v;
    }
    void bytes(void* p, std::size_t n, const char* what) { raw(p, n, what); }
    std::string str(const char* what) {
        const std::uint64_t n = u64(what);
        if (n > remaining()) {
            throw ParseError(std::string("truncated ") + what, off_);
        }
        std::string s(reinterpret_cast<const char*>(buf_.data() + off_), n);
        off_ += n;
        return s;
    }

    std::size_t offset() const { return off_; }
    std::size_t remaining() const { return buf_.size() - off_; }

    void expect_end(const char* what) {
        if (off_ != buf_.size()) {
            throw ParseError(std::string("trailing bytes after ") + what, off_);
        }
    }

private:
    void raw(void* p, std::size_t n, const char* what) {
        if (n > remaining()) {
            throw ParseError(std::string("truncated ") + what, off_);
        }
        std::memcpy(p, buf_.data() + off_, n);
        off_ += n;
    }
    const std::vector<unsigned char>& buf_;
    std::size_t off_ = 0;
};

}  // namespace spottune
