#pragma once

#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/io_util.hpp"
#include "neurogeom/mesh.hpp"
#include "neurogeom/mesh_io.hpp"

// Surface-ensemble morphometry: vertex-wise template averaging and
// displacement vector fields over topology-matched meshes.

namespace neurogeom {

// s subjects sharing one face connectivity; coords already in mm (any
// per-subject voxel scale is applied at ingestion).
struct SurfaceEnsemble {
    std::vector<std::vector<Vec3>> coords;  // [subject][vertex]
    std::vector<std::array<std::uint32_t, 3>> faces;
    std::vector<std::string> subject_ids;

    std::size_t subject_count() const { return coords.size(); }
    std::size_t vertex_count() const { return coords.empty() ? 0 : coords[0].size(); }
};

struct DisplacementField {
    std::vector<Vec3> vectors;   // subject - template, per vertex (mm)
    std::vector<double> lengths;
};

inline TriMesh average_template(const SurfaceEnsemble& ens) {
    if (ens.subject_count() == 0) throw EmptyEnsemble("ensemble has no subjects");
    TriMesh out;
    out.faces = ens.faces;
    const std::size_t n = ens.vertex_count();
    out.vertices.assign(n, {0, 0, 0});
    for (const auto& subject : ens.coords) {
        if (subject.size() != n) throw TopologyMismatch("subjects differ in vertex count");
        for (std::size_t v = 0; v < n; ++v) out.vertices[v] = out.vertices[v] + subject[v];
    }
    const double inv = 1.0 / double(ens.subject_count());
    for (auto& v : out.vertices) v = inv * v;
    return out;
}

inline DisplacementField displacement_field(const SurfaceEnsemble& ens, const TriMesh& tmpl,
                                            std::size_t subject) {
    if (subject >= ens.subject_count())
        throw Error(ErrorClass::usage, "subject index out of range");
    if (tmpl.vertex_count() != ens.vertex_count())
        throw TopologyMismatch("template vertex count " + std::to_string(tmpl.vertex_count()) +
                               " != ensemble vertex count " +
                               std::to_string(ens.vertex_count()));
    DisplacementField out;
    const auto& coords = ens.coords[subject];
    out.vectors.reserve(coords.size());
    out.lengths.reserve(coords.size());
    for (std::size_t v = 0; v < coords.size(); ++v) {
        const Vec3 d = coords[v] - tmpl.vertices[v];
        out.vectors.push_back(d);
        out.lengths.push_back(norm(d));
    }
    return out;
}

// --- ensemble files -----------------------------------------------------
//
// Manifest: text file, one subject per line, `<subject_id> <voxel_scale>
// <mesh path>` (relative paths resolve against the manifest directory);
// `#` starts a comment. The voxel scale multiplies coordinates at load.
//
// Packed binary: magic "NGEN1", uint32 s, n, m, then m*3 uint32 face
// indices, then s*n*3 float64 coordinates subject-major, all little-endian.

inline SurfaceEnsemble load_ensemble_manifest(const std::filesystem::path& manifest_path) {
    const auto bytes = read_file_bytes(manifest_path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    const auto base = manifest_path.parent_path();

    SurfaceEnsemble ens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string id, scale_tok, path_tok;
        if (!(ls >> id >> scale_tok >> path_tok))
            throw ParseError(line_no, "expected: <subject_id> <voxel_scale> <mesh path>");
        char* end = nullptr;
        const double scale = std::strtod(scale_tok.c_str(), &end);
        if (end == scale_tok.c_str() || *end != '\0' || !(scale > 0.0))
            throw ParseError(line_no, "bad voxel scale \"" + scale_tok + "\"");

        std::filesystem::path mesh_path(path_tok);
        if (mesh_path.is_relative()) mesh_path = base / mesh_path;
        auto loaded = load_mesh(mesh_path);

        std::vector<Vec3> coords = std::move(loaded.mesh.vertices);
        for (auto& v : coords) v = scale * v;

        if (ens.subject_count() == 0) {
            ens.faces = std::move(loaded.mesh.faces);
        } else if (loaded.mesh.faces != ens.faces ||
                   coords.size() != ens.vertex_count()) {
            throw TopologyMismatch("subject \"" + id +
                                   "\" does not share the ensemble mesh topology");
        }
        ens.coords.push_back(std::move(coords));
        ens.subject_ids.push_back(id);
    }
    if (ens.subject_count() == 0) throw EmptyEnsemble("manifest lists no subjects");
    return ens;
}

inline constexpr char kEnsembleMagic[5] = {'N', 'G', 'E', 'N', '1'};

inline std::vector<std::uint8_t> write_ensemble_packed(const SurfaceEnsemble& ens) {
    if (ens.subject_count() == 0) throw EmptyEnsemble("ensemble has no subjects");
    std::vector<std::uint8_t> out(sizeof(kEnsembleMagic));
    std::memcpy(out.data(), kEnsembleMagic, sizeof(kEnsembleMagic));
    auto put_u32 = [&](std::uint32_t v) {
        const std::size_t at = out.size();
        out.resize(at + 4);
        detail::store_scalar(out.data(), at, v, Endianness::little);
    };
    auto put_f64 = [&](double v) {
        const std::size_t at = out.size();
        out.resize(at + 8);
        detail::store_scalar(out.data(), at, v, Endianness::little);
    };
    put_u32(static_cast<std::uint32_t>(ens.subject_count()));
    put_u32(static_cast<std::uint32_t>(ens.vertex_count()));
    put_u32(static_cast<std::uint32_t>(ens.faces.size()));
    for (const auto& f : ens.faces)
        for (auto idx : f) put_u32(idx);
    for (const auto& subject : ens.coords)
        for (const auto& v : subject)
            for (double c : v) put_f64(c);
    return out;
}

inline SurfaceEnsemble read_ensemble_packed(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 17 || std::memcmp(bytes.data(), kEnsembleMagic, 5) != 0)
        throw BadMagic("not an NGEN1 ensemble file");
    std::size_t at = 5;
    auto get_u32 = [&] {
        if (at + 4 > bytes.size()) throw ParseError(at, "truncated ensemble file");
        const auto v = detail::load_scalar<std::uint32_t>(bytes.data(), at, Endianness::little);
        at += 4;
        return v;
    };
    auto get_f64 = [&] {
        if (at + 8 > bytes.size()) throw ParseError(at, "truncated ensemble file");
        const auto v = detail::load_scalar<double>(bytes.data(), at, Endianness::little);
        at += 8;
        return v;
    };
    const std::uint32_t s = get_u32(), n = get_u32(), m = get_u32();
    SurfaceEnsemble ens;
    ens.faces.resize(m);
    for (auto& f : ens.faces)
        for (auto& idx : f) {
            idx = get_u32();
            if (idx >= n) throw ParseError(at, "face index out of range");
        }
    ens.coords.assign(s, std::vector<Vec3>(n));
    for (auto& subject : ens.coords)
        for (auto& v : subject) {
            v[0] = get_f64();
            v[1] = get_f64();
            v[2] = get_f64();
        }
    for (std::uint32_t i = 0; i < s; ++i) ens.subject_ids.push_back("subject" + std::to_string(i));
    return ens;
}

// Dispatch on the 5-byte magic; otherwise treat as a text manifest.
inline SurfaceEnsemble load_ensemble(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    if (bytes.size() >= 5 && std::memcmp(bytes.data(), kEnsembleMagic, 5) == 0)
        return read_ensemble_packed(bytes);
    return load_ensemble_manifest(path);
}

}  // namespace neurogeom
