#pragma once

#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/io_util.hpp"
#include "neurogeom/linalg.hpp"

// White-matter fiber tract ingestion, subsampling, and endpoint extraction.
//
// Text format: one tract per block, `TRACT <n>` followed by n lines `x y z`,
// blocks separated by blank lines. Binary format: magic "NGTR1", uint32
// tract count, then per tract uint32 n and n*3 little-endian float64.

namespace neurogeom {

// Polyline fiber tract; at least 2 points, consecutive points distinct.
struct Tract {
    std::vector<Vec3> points;
};

enum class TractEnd { head, tail };

struct TractEndpoint {
    std::size_t tract_index;
    TractEnd end;
    Vec3 point;
};

namespace detail {

inline void check_tract(const std::vector<Vec3>& pts, std::size_t record) {
    if (pts.size() < 2)
        throw ParseError(record, "tract has " + std::to_string(pts.size()) +
                                     " points, need at least 2");
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (pts[i] == pts[i - 1])
            throw ParseError(record, "tract repeats consecutive point " + std::to_string(i));
}

}  // namespace detail

inline constexpr char kTractMagic[5] = {'N', 'G', 'T', 'R', '1'};

inline std::vector<Tract> parse_tracts_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<Tract> out;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::istringstream ls(line);
        std::string tag;
        std::size_t n = 0;
        ls >> tag;
        if (tag != "TRACT" || !(ls >> n))
            throw ParseError(out.size(), "expected \"TRACT <n>\" at line " +
                                             std::to_string(line_no));
        Tract t;
        t.points.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::getline(in, line))
                throw ParseError(out.size(), "unexpected end of file inside a tract");
            ++line_no;
            std::istringstream ps(line);
            Vec3 p;
            if (!(ps >> p[0] >> p[1] >> p[2]))
                throw ParseError(out.size(), "bad point at line " + std::to_string(line_no));
            t.points.push_back(p);
        }
        detail::check_tract(t.points, out.size());
        out.push_back(std::move(t));
    }
    return out;
}

inline std::string format_tracts_text(const std::vector<Tract>& tracts) {
    std::string out;
    for (std::size_t i = 0; i < tracts.size(); ++i) {
        if (i) out += '\n';
        out += "TRACT " + std::to_string(tracts[i].points.size()) + '\n';
        for (const auto& p : tracts[i].points)
            out += format_g(p[0], 17) + ' ' + format_g(p[1], 17) + ' ' + format_g(p[2], 17) + '\n';
    }
    return out;
}

inline std::vector<Tract> parse_tracts_binary(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 9 || std::memcmp(bytes.data(), kTractMagic, 5) != 0)
        throw BadMagic("not an NGTR1 tract file");
    std::size_t at = 5;
    auto get_u32 = [&](std::size_t record) {
        if (at + 4 > bytes.size()) throw ParseError(record, "truncated tract file");
        const auto v = detail::load_scalar<std::uint32_t>(bytes.data(), at, Endianness::little);
        at += 4;
        return v;
    };
    const std::uint32_t count = get_u32(0);
    std::vector<Tract> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t n = get_u32(i);
        if (at + std::size_t{n} * 24 > bytes.size()) throw ParseError(i, "truncated tract file");
        Tract t;
        t.points.resize(n);
        for (auto& p : t.points)
            for (auto& c : p) {
                c = detail::load_scalar<double>(bytes.data(), at, Endianness::little);
                at += 8;
            }
        detail::check_tract(t.points, i);
        out.push_back(std::move(t));
    }
    return out;
}

inline std::vector<std::uint8_t> format_tracts_binary(const std::vector<Tract>& tracts) {
    std::vector<std::uint8_t> out(5);
    std::memcpy(out.data(), kTractMagic, 5);
    auto put_u32 = [&](std::uint32_t v) {
        const std::size_t at = out.size();
        out.resize(at + 4);
        detail::store_scalar(out.data(), at, v, Endianness::little);
    };
    put_u32(static_cast<std::uint32_t>(tracts.size()));
    for (const auto& t : tracts) {
        put_u32(static_cast<std::uint32_t>(t.points.size()));
        for (const auto& p : t.points)
            for (double c : p) {
                const std::size_t at = out.size();
                out.resize(at + 8);
                detail::store_scalar(out.data(), at, c, Endianness::little);
            }
    }
    return out;
}

// Content dispatch: the 5-byte magic selects the binary variant.
inline std::vector<Tract> load_tracts(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() >= 5 && std::memcmp(bytes.data(), kTractMagic, 5) == 0)
        return parse_tracts_binary(bytes);
    return parse_tracts_text(std::string(bytes.begin(), bytes.end()));
}

inline void save_tracts(const std::vector<Tract>& tracts, const std::filesystem::path& path,
                        bool binary = false) {
    if (binary)
        atomic_write_file(path, format_tracts_binary(tracts));
    else
        atomic_write_file(path, format_tracts_text(tracts));
}

// Keeps tracts at indices 0, stride, 2*stride, ... whose point count exceeds
// min_points.
inline std::vector<Tract> subsample_tracts(const std::vector<Tract>& tracts, std::size_t stride,
                                           std::size_t min_points) {
    if (stride < 1) throw Error(ErrorClass::usage, "stride must be >= 1");
    std::vector<Tract> out;
    for (std::size_t i = 0; i < tracts.size(); i += stride)
        if (tracts[i].points.size() > min_points) out.push_back(tracts[i]);
    return out;
}

// First and last point of each tract, tagged with tract index and end.
inline std::vector<TractEndpoint> tract_endpoints(const std::vector<Tract>& tracts) {
    std::vector<TractEndpoint> out;
    out.reserve(2 * tracts.size());
    for (std::size_t i = 0; i < tracts.size(); ++i) {
        out.push_back({i, TractEnd::head, tracts[i].points.front()});
        out.push_back({i, TractEnd::tail, tracts[i].points.back()});
    }
    return out;
}

}  // namespace neurogeom
