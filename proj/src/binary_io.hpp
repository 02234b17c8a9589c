#pragma once

// Little-endian primitives shared by the checkpoint and embedding formats.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "reread/error.hpp"

namespace reread::detail {

class LeWriter {
public:
    explicit LeWriter(std::ostream& out) : out_(out) {}

    void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

    template <typename U>
    void uint(U value) {
        char buf[sizeof(U)];
        for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
        out_.write(buf, sizeof(U));
    }

    void f64(double value) { uint<std::uint64_t>(std::bit_cast<std::uint64_t>(value)); }

private:
    std::ostream& out_;
};

class LeReader {
public:
    LeReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

    std::string bytes(std::size_t n) {
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }

    template <typename U>
    U uint() {
        unsigned char buf[sizeof(U)];
        in_.read(reinterpret_cast<char*>(buf), sizeof(U));
        check();
        U value = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
        return value;
    }

    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }

    bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    void check() {
        if (!in_) throw IoError(source_ + ": unexpected end of file");
    }

    std::istream& in_;
    std::string source_;
};

/// Writes through a temporary sibling file and renames it into place.
template <typename WriteFn>
void write_atomically(const std::filesystem::path& path, WriteFn&& write) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        write(out);
        out.flush();
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace reread::detail
