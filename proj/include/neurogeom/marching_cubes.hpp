#pragma once

#include <array>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/mask_ops.hpp"
#include "neurogeom/mesh.hpp"
#include "neurogeom/volume.hpp"

// Marching-cubes isosurface extraction.
//
// Cell corner numbering (unit cube, +x right, +y back, +z up):
//   0:(0,0,0) 1:(1,0,0) 2:(1,1,0) 3:(0,1,0) 4:(0,0,1) 5:(1,0,1) 6:(1,1,1) 7:(0,1,1)
// Cell edge numbering:
//   0:(0,1) 1:(1,2) 2:(3,2) 3:(0,3) 4:(4,5) 5:(5,6) 6:(7,6) 7:(4,7)
//   8:(0,4) 9:(1,5) 10:(2,6) 11:(3,7)
//
// The 256-entry configuration table is generated once from the face-chord
// construction: on every cell face, the isosurface boundary consists of
// chords pairing the crossed face edges so that each maximal run of
// above-isovalue corners is cut off by one chord. On the ambiguous diagonal
// faces this always separates the above-isovalue corners; both cells sharing
// a face see the same corner signs, so their chords coincide and the mesh is
// watertight on interior level sets. Chords are directed (walking each face
// counterclockwise as seen from outside the cell) and therefore close into
// oriented loops, triangulated as fans; the resulting winding is
// counterclockwise seen from outside the surface.

namespace neurogeom {

namespace mc_detail {

struct EdgeGeom {
    std::array<int, 3> base;  // grid offset of the edge's low endpoint
    int axis;                 // 0,1,2
};

inline constexpr std::array<EdgeGeom, 12> kEdges = {{
    {{0, 0, 0}, 0},  // 0: corners 0-1
    {{1, 0, 0}, 1},  // 1: corners 1-2
    {{0, 1, 0}, 0},  // 2: corners 3-2
    {{0, 0, 0}, 1},  // 3: corners 0-3
    {{0, 0, 1}, 0},  // 4: corners 4-5
    {{1, 0, 1}, 1},  // 5: corners 5-6
    {{0, 1, 1}, 0},  // 6: corners 7-6
    {{0, 0, 1}, 1},  // 7: corners 4-7
    {{0, 0, 0}, 2},  // 8: corners 0-4
    {{1, 0, 0}, 2},  // 9: corners 1-5
    {{1, 1, 0}, 2},  // 10: corners 2-6
    {{0, 1, 0}, 2},  // 11: corners 3-7
}};

inline constexpr std::array<std::array<int, 3>, 8> kCorners = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
    {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

// Face corner cycles, counterclockwise as seen from outside the cell, and the
// cell edge connecting cycle corner i to corner i+1.
struct FaceSpec {
    std::array<int, 4> corners;
    std::array<int, 4> edges;
};

inline constexpr std::array<FaceSpec, 6> kFaces = {{
    {{0, 3, 2, 1}, {3, 2, 1, 0}},    // z = 0
    {{4, 5, 6, 7}, {4, 5, 6, 7}},    // z = 1
    {{0, 1, 5, 4}, {0, 9, 4, 8}},    // y = 0
    {{1, 2, 6, 5}, {1, 10, 5, 9}},   // x = 1
    {{2, 3, 7, 6}, {2, 11, 6, 10}},  // y = 1
    {{3, 0, 4, 7}, {3, 8, 7, 11}},   // x = 0
}};

using TriList = std::vector<std::array<int, 3>>;

inline std::array<TriList, 256> build_case_table() {
    // cell edges sharing a face: a fan diagonal between two such edges would
    // lie in the face plane and collide with the neighboring cell's fan
    bool coresident[12][12] = {};
    for (const auto& f : kFaces)
        for (int a : f.edges)
            for (int b : f.edges) coresident[a][b] = true;

    std::array<TriList, 256> table;
    for (int config = 0; config < 256; ++config) {
        std::array<int, 12> next;
        next.fill(-1);

        for (const auto& face : kFaces) {
            std::array<bool, 4> inside{};
            for (int i = 0; i < 4; ++i) inside[i] = (config >> face.corners[i]) & 1;
            // A fully inside/outside face has no run starts and yields nothing.
            for (int start = 0; start < 4; ++start) {
                if (!inside[start] || inside[(start + 3) % 4]) continue;  // not a run start
                int end = start;
                for (int step = 0; step < 3 && inside[(end + 1) % 4]; ++step)
                    end = (end + 1) % 4;
                const int entering = face.edges[(start + 3) % 4];
                const int leaving = face.edges[end];
                next[entering] = leaving;
            }
        }

        TriList tris;
        std::array<bool, 12> used{};
        for (int e = 0; e < 12; ++e) {
            if (next[e] < 0 || used[e]) continue;
            std::vector<int> loop;
            int cur = e;
            do {
                loop.push_back(cur);
                used[cur] = true;
                cur = next[cur];
            } while (cur != e);

            // fan apex whose diagonals stay interior to the cell (one always
            // exists; loops here have at most 7 vertices)
            const int len = static_cast<int>(loop.size());
            int apex = 0;
            for (int k = 0; k < len; ++k) {
                bool safe = true;
                for (int i = 2; i <= len - 2 && safe; ++i)
                    safe = !coresident[loop[k]][loop[(k + i) % len]];
                if (safe) {
                    apex = k;
                    break;
                }
            }
            for (int i = 1; i + 1 < len; ++i)
                tris.push_back({loop[apex], loop[(apex + i) % len], loop[(apex + i + 1) % len]});
        }
        table[config] = std::move(tris);
    }
    return table;
}

inline const std::array<TriList, 256>& case_table() {
    static const std::array<TriList, 256> table = build_case_table();
    return table;
}

}  // namespace mc_detail

// Extracts the level set {value = isovalue} as a triangle mesh. Vertices lie
// on grid edges at the linear-interpolation crossing (edge midpoints for
// binary data at isovalue 0.5), in mm. Watertight whenever the level set does
// not touch the volume boundary.
inline TriMesh marching_cubes(const Volume3D& vol, double isovalue) {
    if (vol.nt() != 1) throw DegenerateVolume("marching cubes expects a single 3D frame");
    if (vol.nx() < 2 || vol.ny() < 2 || vol.nz() < 2)
        throw DegenerateVolume("all spatial dims must be >= 2");
    const auto [lo, hi] = vol.minmax();
    if (!(isovalue > lo && isovalue < hi))
        throw EmptySurface("isovalue " + std::to_string(isovalue) +
                           " is outside the data range [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");

    const std::size_t nx = vol.nx(), ny = vol.ny(), nz = vol.nz();
    const auto& voxel = vol.header().voxel_size;
    const auto& table = mc_detail::case_table();

    TriMesh mesh;
    std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;

    auto value = [&](std::size_t i, std::size_t j, std::size_t k) { return vol.at(i, j, k); };

    auto weld = [&](std::size_t cx, std::size_t cy, std::size_t cz, int edge) -> std::uint32_t {
        const auto& eg = mc_detail::kEdges[edge];
        const std::size_t bx = cx + eg.base[0], by = cy + eg.base[1], bz = cz + eg.base[2];
        const std::uint64_t key = ((bz * ny + by) * nx + bx) * 3 + static_cast<std::uint64_t>(eg.axis);
        if (auto it = edge_vertex.find(key); it != edge_vertex.end()) return it->second;

        std::size_t ox = bx, oy = by, oz = bz;
        (eg.axis == 0 ? ox : eg.axis == 1 ? oy : oz) += 1;
        const double va = value(bx, by, bz);
        const double vb = value(ox, oy, oz);
        double t = (isovalue - va) / (vb - va);
        t = std::min(1.0, std::max(0.0, t));
        const Vec3 p = {(double(bx) + (eg.axis == 0 ? t : 0.0)) * voxel[0],
                        (double(by) + (eg.axis == 1 ? t : 0.0)) * voxel[1],
                        (double(bz) + (eg.axis == 2 ? t : 0.0)) * voxel[2]};
        const auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
        mesh.vertices.push_back(p);
        edge_vertex.emplace(key, idx);
        return idx;
    };

    for (std::size_t cz = 0; cz + 1 < nz; ++cz)
        for (std::size_t cy = 0; cy + 1 < ny; ++cy)
            for (std::size_t cx = 0; cx + 1 < nx; ++cx) {
                int config = 0;
                for (int c = 0; c < 8; ++c) {
                    const auto& off = mc_detail::kCorners[c];
                    if (value(cx + off[0], cy + off[1], cz + off[2]) > isovalue)
                        config |= 1 << c;
                }
                if (config == 0 || config == 255) continue;
                for (const auto& tri : table[config]) {
                    const std::uint32_t a = weld(cx, cy, cz, tri[0]);
                    const std::uint32_t b = weld(cx, cy, cz, tri[1]);
                    const std::uint32_t c = weld(cx, cy, cz, tri[2]);
                    mesh.faces.push_back({a, b, c});
                }
            }
    return mesh;
}

inline TriMesh marching_cubes(const BinaryMask& mask, double isovalue = 0.5) {
    return marching_cubes(to_volume(mask), isovalue);
}

// Zero-pads each spatial face by `n` voxels; vertex coordinates of a
// subsequent extraction shift by n * voxel_size.
inline Volume3D pad_volume(const Volume3D& vol, std::size_t n) {
    VolumeHeader h = vol.header();
    h.dims = {vol.nx() + 2 * n, vol.ny() + 2 * n, vol.nz() + 2 * n, vol.nt()};
    return std::visit(
        [&](const auto& data) {
            using T = typename std::decay_t<decltype(data)>::value_type;
            std::vector<T> out(h.voxel_count(), T{});
            const std::size_t nx = h.dims[0], ny = h.dims[1];
            for (std::size_t t = 0; t < vol.nt(); ++t)
                for (std::size_t k = 0; k < vol.nz(); ++k)
                    for (std::size_t j = 0; j < vol.ny(); ++j)
                        for (std::size_t i = 0; i < vol.nx(); ++i)
                            out[(i + n) + nx * ((j + n) + ny * ((k + n) + h.dims[2] * t))] =
                                data[vol.flat_index(i, j, k, t)];
            return Volume3D(h, std::move(out));
        },
        vol.storage());
}

}  // namespace neurogeom
