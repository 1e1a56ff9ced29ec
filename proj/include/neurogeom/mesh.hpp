#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "neurogeom/linalg.hpp"

namespace neurogeom {

// Indexed triangle mesh; vertex coordinates in mm, faces wound
// counterclockwise when viewed from outside.
struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t face_count() const { return faces.size(); }
};

// Exchanges x and y of every vertex and flips face winding so outward
// orientation is preserved (the swap is a reflection).
inline TriMesh swap_xy(TriMesh mesh) {
    for (auto& v : mesh.vertices) std::swap(v[0], v[1]);
    for (auto& f : mesh.faces) std::swap(f[1], f[2]);
    return mesh;
}

inline void flip_winding(TriMesh& mesh) {
    for (auto& f : mesh.faces) std::swap(f[1], f[2]);
}

}  // namespace neurogeom
