#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "neurogeom/mesh_topology.hpp"
#include "test_helpers.hpp"

using namespace neurogeom;

TEST_CASE("a single triangle has three boundary edges", "[meshtopo]") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}};
    auto edges = enumerate_edges(m);
    REQUIRE(edges.size() == 3);
    for (const auto& [e, inc] : edges) CHECK(inc == 1);

    auto r = validate(m);
    CHECK(r.boundary_edges == 3);
    CHECK_FALSE(r.genus.has_value());
    CHECK_FALSE(r.is_sphere);
}

TEST_CASE("tetrahedron: 6 edges of incidence 2, chi 2, sphere", "[meshtopo]") {
    auto m = testutil::tetrahedron();
    auto edges = enumerate_edges(m);
    REQUIRE(edges.size() == 6);
    for (const auto& [e, inc] : edges) CHECK(inc == 2);
    CHECK(euler_characteristic(m) == 2);

    auto r = validate(m);
    CHECK(r.is_closed);
    CHECK(r.components == 1);
    REQUIRE(r.genus.has_value());
    CHECK(*r.genus == 0);
    CHECK(r.is_sphere);
}

TEST_CASE("two triangles sharing an edge", "[meshtopo]") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    m.faces = {{0, 1, 2}, {1, 3, 2}};
    auto edges = enumerate_edges(m);
    REQUIRE(edges.size() == 5);
    CHECK(edges.at({1, 2}) == 2);
    CHECK(edges.at({0, 1}) == 1);
}

TEST_CASE("amygdala-template-scale icosphere validates as a sphere", "[meshtopo][paper]") {
    auto m = testutil::icosphere(4);
    REQUIRE(m.vertex_count() == 2562);
    REQUIRE(m.face_count() == 5120);
    auto r = validate(m);
    CHECK(r.edge_count == 7680);  // E = 3F/2
    CHECK(r.chi == 2);
    CHECK(m.face_count() == 2 * m.vertex_count() - 4);  // F = 2V - 4
    CHECK(r.is_sphere);
}

TEST_CASE("cortical-scale icosphere validates as a sphere", "[meshtopo][paper]") {
    auto m = testutil::icosphere(6);
    REQUIRE(m.vertex_count() == 40962);
    REQUIRE(m.face_count() == 81920);
    auto r = validate(m);
    CHECK(r.edge_count == 122880);
    CHECK(r.chi == 2);
    REQUIRE(r.genus.has_value());
    CHECK(*r.genus == 0);
}

TEST_CASE("the 1270-vertex instance satisfies the closed-surface identities",
          "[meshtopo][paper]") {
    const long long v = 1270, f = 2536;
    CHECK(f == 2 * v - 4);
    const long long e = 3 * f / 2;
    CHECK(v - e + f == 2);
}

TEST_CASE("grid torus has chi 0 and genus 1", "[meshtopo]") {
    auto m = testutil::grid_torus(8, 8);
    REQUIRE(m.vertex_count() == 64);
    REQUIRE(m.face_count() == 128);
    auto r = validate(m);
    CHECK(r.edge_count == 192);
    CHECK(r.chi == 0);
    REQUIRE(r.genus.has_value());
    CHECK(*r.genus == 1);
    CHECK_FALSE(r.is_sphere);
}

TEST_CASE("disjoint union of two spheres has chi 4 and no genus", "[meshtopo]") {
    auto a = testutil::tetrahedron();
    auto b = testutil::tetrahedron();
    TriMesh u = a;
    const auto off = static_cast<std::uint32_t>(a.vertex_count());
    for (auto& v : b.vertices) v[0] += 10.0;
    u.vertices.insert(u.vertices.end(), b.vertices.begin(), b.vertices.end());
    for (auto f : b.faces) u.faces.push_back({f[0] + off, f[1] + off, f[2] + off});

    auto r = validate(u);
    CHECK(r.chi == 4);
    CHECK(r.components == 2);
    CHECK(r.is_closed);
    CHECK_FALSE(r.genus.has_value());
    CHECK_FALSE(r.is_sphere);
}

TEST_CASE("adding a handle decreases chi by exactly 2", "[meshtopo][property]") {
    auto m = testutil::icosphere(2);
    const auto before = validate(m);
    REQUIRE(before.chi == 2);

    // find two faces with disjoint vertex sets and no edges between them
    const auto edges = enumerate_edges(m);
    auto connected = [&](std::uint32_t a, std::uint32_t b) {
        if (a > b) std::swap(a, b);
        return edges.count({a, b}) > 0;
    };
    std::size_t i1 = 0, i2 = 0;
    bool found = false;
    for (std::size_t j = 1; j < m.face_count() && !found; ++j) {
        const auto& f1 = m.faces[0];
        const auto& f2 = m.faces[j];
        bool ok = true;
        for (auto a : f1)
            for (auto b : f2)
                if (a == b || connected(a, b)) ok = false;
        if (ok) {
            i2 = j;
            found = true;
        }
    }
    REQUIRE(found);

    const auto f1 = m.faces[i1];
    const auto f2 = m.faces[i2];
    // drop the two faces, bridge their boundaries with a 6-triangle tube
    m.faces.erase(m.faces.begin() + i2);
    m.faces.erase(m.faces.begin() + i1);
    const auto a = f1[0], b = f1[1], c = f1[2];
    const auto d = f2[0], e = f2[1], f = f2[2];
    m.faces.push_back({a, b, d});
    m.faces.push_back({b, e, d});
    m.faces.push_back({b, c, e});
    m.faces.push_back({c, f, e});
    m.faces.push_back({c, a, f});
    m.faces.push_back({a, d, f});

    const auto after = validate(m);
    CHECK(after.is_closed);
    CHECK(after.chi == before.chi - 2);
    REQUIRE(after.genus.has_value());
    CHECK(*after.genus == 1);
}

TEST_CASE("chi is invariant under vertex relabeling and face reordering",
          "[meshtopo][property]") {
    std::mt19937 rng(41);
    auto m = testutil::icosphere(2);
    const auto chi = euler_characteristic(m);

    std::vector<std::uint32_t> perm(m.vertex_count());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    TriMesh p;
    p.vertices.resize(m.vertex_count());
    for (std::size_t v = 0; v < m.vertex_count(); ++v) p.vertices[perm[v]] = m.vertices[v];
    for (auto f : m.faces) p.faces.push_back({perm[f[0]], perm[f[1]], perm[f[2]]});
    std::shuffle(p.faces.begin(), p.faces.end(), rng);

    CHECK(euler_characteristic(p) == chi);
    CHECK(validate(p).is_sphere);
}

TEST_CASE("duplicate faces are flagged through nonmanifold edges", "[meshtopo]") {
    auto m = testutil::tetrahedron();
    m.faces.push_back(m.faces[0]);
    auto r = validate(m);
    CHECK(r.nonmanifold_edges == 3);
    CHECK_FALSE(r.is_closed);
    CHECK_FALSE(r.genus.has_value());
}

TEST_CASE("closed surface with odd chi raises OddChiForClosed", "[meshtopo]") {
    // two tetrahedra sharing a single vertex: closed, connected, chi = 3
    auto a = testutil::tetrahedron();
    auto b = testutil::tetrahedron();
    TriMesh u = a;
    for (auto& v : b.vertices) v[0] += 5.0;
    std::array<std::uint32_t, 4> remap{};
    remap[0] = 0;  // identify vertex 0 of both
    for (std::uint32_t v = 1; v < 4; ++v) {
        u.vertices.push_back(b.vertices[v]);
        remap[v] = static_cast<std::uint32_t>(u.vertices.size() - 1);
    }
    for (auto f : b.faces) u.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});

    CHECK_THROWS_AS(validate(u), OddChiForClosed);
}
