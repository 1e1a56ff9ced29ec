#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/mesh.hpp"

// Topology validation of triangle meshes: edge enumeration, Euler
// characteristic chi = V - E + F, genus via chi = 2 - 2g, closed-manifold and
// sphere-topology checks.

namespace neurogeom {

struct TopologyReport {
    std::size_t vertex_count = 0;
    std::size_t edge_count = 0;
    std::size_t face_count = 0;
    long long chi = 0;
    std::size_t boundary_edges = 0;     // edges with exactly 1 incident face
    std::size_t nonmanifold_edges = 0;  // edges with 3 or more incident faces
    std::size_t components = 0;         // over the vertex-face incidence graph
    std::optional<long long> genus;     // present iff closed, manifold, single component
    bool is_closed = false;
    bool is_sphere = false;
};

// Undirected vertex pair -> number of incident faces.
inline std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t>
enumerate_edges(const TriMesh& mesh) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> edges;
    for (const auto& f : mesh.faces) {
        for (int e = 0; e < 3; ++e) {
            std::uint32_t a = f[e], b = f[(e + 1) % 3];
            if (a > b) std::swap(a, b);
            ++edges[{a, b}];
        }
    }
    return edges;
}

inline long long euler_characteristic(const TriMesh& mesh) {
    const auto edges = enumerate_edges(mesh);
    return static_cast<long long>(mesh.vertex_count()) -
           static_cast<long long>(edges.size()) + static_cast<long long>(mesh.face_count());
}

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
    }
    std::size_t find(std::size_t a) {
        while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
        return a;
    }
    void merge(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

}  // namespace detail

inline TopologyReport validate(const TriMesh& mesh) {
    TopologyReport r;
    r.vertex_count = mesh.vertex_count();
    r.face_count = mesh.face_count();

    const auto edges = enumerate_edges(mesh);
    r.edge_count = edges.size();
    for (const auto& [edge, incidence] : edges) {
        if (incidence == 1) ++r.boundary_edges;
        if (incidence >= 3) ++r.nonmanifold_edges;
    }
    r.chi = static_cast<long long>(r.vertex_count) - static_cast<long long>(r.edge_count) +
            static_cast<long long>(r.face_count);

    detail::UnionFind uf(mesh.vertex_count());
    for (const auto& f : mesh.faces) {
        uf.merge(f[0], f[1]);
        uf.merge(f[0], f[2]);
    }
    std::vector<std::size_t> roots;
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) roots.push_back(uf.find(v));
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    r.components = roots.size();

    r.is_closed = r.boundary_edges == 0 && r.nonmanifold_edges == 0 && r.face_count > 0;
    if (r.is_closed && r.chi % 2 != 0)
        throw OddChiForClosed("closed surface with odd Euler characteristic " +
                              std::to_string(r.chi));
    if (r.is_closed && r.components == 1) {
        const long long g = (2 - r.chi) / 2;
        if (g >= 0) r.genus = g;
    }
    r.is_sphere = r.is_closed && r.components == 1 && r.chi == 2;
    return r;
}

}  // namespace neurogeom
