#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "neurogeom/errors.hpp"

namespace neurogeom {

enum class Endianness { little, big };

inline constexpr Endianness native_endianness() {
    return std::endian::native == std::endian::little ? Endianness::little : Endianness::big;
}

namespace detail {

template <typename T>
inline T byteswap(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
}

// Read a scalar stored at byte offset `off` with the given file byte order.
template <typename T>
inline T load_scalar(const std::uint8_t* bytes, std::size_t off, Endianness e) {
    T v;
    std::memcpy(&v, bytes + off, sizeof(T));
    if (e != native_endianness()) v = byteswap(v);
    return v;
}

template <typename T>
inline void store_scalar(std::uint8_t* bytes, std::size_t off, T v, Endianness e) {
    if (e != native_endianness()) v = byteswap(v);
    std::memcpy(bytes + off, &v, sizeof(T));
}

}  // namespace detail

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::vector<std::uint8_t> bytes;
    in.seekg(0, std::ios::end);
    bytes.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0, std::ios::beg);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in && bytes.size() > 0) throw IoError("cannot read file: " + path.string());
    return bytes;
}

// All file outputs go through here: write to a sibling temp file, then rename.
// A failed run never leaves a partial output at `path`.
inline void atomic_write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open file for writing: " + tmp.string());
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename failed: " + tmp.string() + " -> " + path.string());
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& text) {
    atomic_write_file(path, text.data(), text.size());
}

inline void atomic_write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    atomic_write_file(path, bytes.data(), bytes.size());
}

// printf-style significant-digit formatting; used wherever a file format
// pins its decimal precision.
inline std::string format_g(double v, int significant_digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, v);
    return buf;
}

}  // namespace neurogeom
