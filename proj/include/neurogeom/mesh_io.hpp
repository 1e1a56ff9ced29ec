#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/io_util.hpp"
#include "neurogeom/mesh.hpp"

// ASCII PLY and OBJ mesh writers/readers. Coordinates are emitted with 6
// significant digits. PLY may carry one per-vertex scalar as
// `property float quality`.

namespace neurogeom {

struct MeshWithScalar {
    TriMesh mesh;
    std::optional<std::vector<double>> scalar;  // per-vertex `quality`, if present
};

inline std::string to_ply(const TriMesh& mesh, const std::vector<double>* scalar = nullptr) {
    std::string out;
    out += "ply\nformat ascii 1.0\ncomment neurogeom mesh\n";
    out += "element vertex " + std::to_string(mesh.vertex_count()) + "\n";
    out += "property float x\nproperty float y\nproperty float z\n";
    if (scalar) out += "property float quality\n";
    out += "element face " + std::to_string(mesh.face_count()) + "\n";
    out += "property list uchar int vertex_indices\nend_header\n";
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
        out += format_g(mesh.vertices[v][0], 6);
        out += ' ';
        out += format_g(mesh.vertices[v][1], 6);
        out += ' ';
        out += format_g(mesh.vertices[v][2], 6);
        if (scalar) {
            out += ' ';
            out += format_g((*scalar)[v], 6);
        }
        out += '\n';
    }
    for (const auto& f : mesh.faces) {
        out += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' +
               std::to_string(f[2]) + '\n';
    }
    return out;
}

inline std::string to_obj(const TriMesh& mesh) {
    std::string out = "# neurogeom mesh\n";
    for (const auto& v : mesh.vertices)
        out += "v " + format_g(v[0], 6) + ' ' + format_g(v[1], 6) + ' ' + format_g(v[2], 6) + '\n';
    for (const auto& f : mesh.faces)  // OBJ indices are 1-based
        out += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) + ' ' +
               std::to_string(f[2] + 1) + '\n';
    return out;
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw ParseError(line_no, "expected a number, got \"" + tok + "\"");
    return v;
}

inline std::uint32_t parse_index(const std::string& tok, std::size_t line_no,
                                 std::size_t vertex_count) {
    long long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || v < 0 ||
        static_cast<std::size_t>(v) >= vertex_count)
        throw ParseError(line_no, "bad vertex index \"" + tok + "\"");
    return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline MeshWithScalar parse_ply(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    };

    if (!next_line() || line != "ply") throw ParseError(line_no, "not a PLY file");
    if (!next_line() || line != "format ascii 1.0")
        throw ParseError(line_no, "only ascii 1.0 PLY is supported");

    std::size_t vertex_count = 0, face_count = 0;
    std::vector<std::string> vertex_props;
    std::string current_element;
    while (next_line()) {
        auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0] == "comment") continue;
        if (tok[0] == "end_header") break;
        if (tok[0] == "element" && tok.size() == 3) {
            current_element = tok[1];
            const auto n = std::strtoull(tok[2].c_str(), nullptr, 10);
            if (tok[1] == "vertex") vertex_count = n;
            else if (tok[1] == "face") face_count = n;
            else throw ParseError(line_no, "unsupported element \"" + tok[1] + "\"");
        } else if (tok[0] == "property") {
            if (current_element == "vertex") {
                if (tok.size() != 3) throw ParseError(line_no, "bad vertex property");
                vertex_props.push_back(tok[2]);
            }
            // face property assumed to be the index list
        } else {
            throw ParseError(line_no, "unexpected header line \"" + line + "\"");
        }
    }

    auto prop_at = [&](const char* name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < vertex_props.size(); ++i)
            if (vertex_props[i] == name) return i;
        return std::nullopt;
    };
    const auto ix = prop_at("x"), iy = prop_at("y"), iz = prop_at("z"), iq = prop_at("quality");
    if (!ix || !iy || !iz) throw ParseError(line_no, "PLY vertex element lacks x/y/z");

    MeshWithScalar out;
    out.mesh.vertices.resize(vertex_count);
    if (iq) out.scalar = std::vector<double>(vertex_count, 0.0);
    for (std::size_t v = 0; v < vertex_count; ++v) {
        if (!next_line()) throw ParseError(line_no, "unexpected end of vertex list");
        auto tok = detail::split_ws(line);
        if (tok.size() < vertex_props.size()) throw ParseError(line_no, "short vertex record");
        out.mesh.vertices[v] = {detail::parse_double(tok[*ix], line_no),
                                detail::parse_double(tok[*iy], line_no),
                                detail::parse_double(tok[*iz], line_no)};
        if (iq) (*out.scalar)[v] = detail::parse_double(tok[*iq], line_no);
    }
    out.mesh.faces.resize(face_count);
    for (std::size_t f = 0; f < face_count; ++f) {
        if (!next_line()) throw ParseError(line_no, "unexpected end of face list");
        auto tok = detail::split_ws(line);
        if (tok.size() != 4 || tok[0] != "3")
            throw ParseError(line_no, "only triangle faces are supported");
        for (int c = 0; c < 3; ++c)
            out.mesh.faces[f][c] = detail::parse_index(tok[c + 1], line_no, vertex_count);
    }
    return out;
}

inline TriMesh parse_obj(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    TriMesh mesh;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto tok = detail::split_ws(line);
        if (tok.empty() || tok[0] == "#") continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError(line_no, "short vertex line");
            mesh.vertices.push_back({detail::parse_double(tok[1], line_no),
                                     detail::parse_double(tok[2], line_no),
                                     detail::parse_double(tok[3], line_no)});
        } else if (tok[0] == "f") {
            if (tok.size() != 4) throw ParseError(line_no, "only triangle faces are supported");
            std::array<std::uint32_t, 3> face{};
            for (int c = 0; c < 3; ++c) {
                std::string idx = tok[c + 1];
                if (auto slash = idx.find('/'); slash != std::string::npos) idx.resize(slash);
                const auto v = detail::parse_index(idx, line_no, mesh.vertices.size() + 1);
                if (v == 0) throw ParseError(line_no, "OBJ indices are 1-based");
                face[c] = v - 1;
            }
            mesh.faces.push_back(face);
        }
        // other OBJ statements ignored
    }
    return mesh;
}

// Extension dispatch: .ply or .obj.
inline MeshWithScalar load_mesh(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    const std::string text(bytes.begin(), bytes.end());
    if (path.extension() == ".obj") return {parse_obj(text), std::nullopt};
    return parse_ply(text);
}

inline void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
                      const std::vector<double>* scalar = nullptr) {
    if (path.extension() == ".obj") {
        atomic_write_file(path, to_obj(mesh));
    } else {
        atomic_write_file(path, to_ply(mesh, scalar));
    }
}

// PLY with a per-vertex scalar channel; the morphometry display artifact.
inline void export_scalar_mesh(const TriMesh& mesh, const std::vector<double>& scalar,
                               const std::filesystem::path& path) {
    if (scalar.size() != mesh.vertex_count())
        throw SizeMismatch("scalar length " + std::to_string(scalar.size()) +
                           " != vertex count " + std::to_string(mesh.vertex_count()));
    atomic_write_file(path, to_ply(mesh, &scalar));
}

}  // namespace neurogeom
