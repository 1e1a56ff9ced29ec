#pragma once

#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/volume.hpp"

// Binary-mask measurement and cleanup: voxel volumetry, connected-component
// labeling, and morphological closing for topology correction.

namespace neurogeom {

// 0/1 voxel grid with physical voxel size in mm.
struct BinaryMask {
    std::array<std::size_t, 3> dims{1, 1, 1};
    std::array<double, 3> voxel_size{1.0, 1.0, 1.0};
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t flat_index(std::size_t i, std::size_t j, std::size_t k) const {
        return i + dims[0] * (j + dims[1] * k);
    }
    bool at(std::size_t i, std::size_t j, std::size_t k) const {
        return bits[flat_index(i, j, k)] != 0;
    }
};

enum class Connectivity : int { faces = 6, edges = 18, corners = 26 };

struct LabelField {
    std::array<std::size_t, 3> dims{1, 1, 1};
    std::vector<std::uint32_t> labels;        // 0 = background; components are 1..L
    std::vector<std::size_t> component_sizes; // component_sizes[l-1] = voxel count of label l

    std::size_t component_count() const { return component_sizes.size(); }
};

// Any nonzero voxel is foreground.
inline BinaryMask to_mask(const Volume3D& vol) {
    BinaryMask m;
    m.dims = {vol.nx(), vol.ny(), vol.nz()};
    m.voxel_size = vol.header().voxel_size;
    m.bits.resize(m.size());
    for (std::size_t idx = 0; idx < m.size(); ++idx) m.bits[idx] = vol.at_flat(idx) != 0.0 ? 1 : 0;
    return m;
}

inline Volume3D to_volume(const BinaryMask& mask) {
    VolumeHeader h;
    h.dims = {mask.dims[0], mask.dims[1], mask.dims[2], 1};
    h.voxel_size = mask.voxel_size;
    h.datatype = Datatype::u8;
    return Volume3D(h, mask.bits);
}

// Volumetry by voxel counting; mm^3 from the voxel edge lengths.
inline std::pair<std::size_t, double> measure_volume(const BinaryMask& mask) {
    const std::size_t count = static_cast<std::size_t>(
        std::count(mask.bits.begin(), mask.bits.end(), std::uint8_t{1}));
    const double voxel_mm3 = mask.voxel_size[0] * mask.voxel_size[1] * mask.voxel_size[2];
    return {count, static_cast<double>(count) * voxel_mm3};
}

namespace detail {

inline std::vector<std::array<int, 3>> neighbor_offsets(Connectivity conn) {
    std::vector<std::array<int, 3>> offsets;
    const int limit = static_cast<int>(conn);
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (manhattan == 0) continue;
                if (limit == 6 && manhattan > 1) continue;
                if (limit == 18 && manhattan > 2) continue;
                offsets.push_back({dx, dy, dz});
            }
    return offsets;
}

}  // namespace detail

// Labels foreground components under the chosen adjacency. Labels are ordered
// by decreasing size; ties broken by the smaller first (lowest flat index)
// voxel.
inline LabelField connected_components(const BinaryMask& mask, Connectivity conn) {
    const auto offsets = detail::neighbor_offsets(conn);
    const int nx = static_cast<int>(mask.dims[0]);
    const int ny = static_cast<int>(mask.dims[1]);
    const int nz = static_cast<int>(mask.dims[2]);

    LabelField out;
    out.dims = mask.dims;
    out.labels.assign(mask.size(), 0);

    struct Component {
        std::uint32_t provisional;
        std::size_t first_voxel;
        std::size_t size;
    };
    std::vector<Component> comps;

    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < mask.bits.size(); ++seed) {
        if (!mask.bits[seed] || out.labels[seed] != 0) continue;
        const std::uint32_t label = static_cast<std::uint32_t>(comps.size() + 1);
        Component comp{label, seed, 0};
        stack.assign(1, seed);
        out.labels[seed] = label;
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            ++comp.size;
            const int x = static_cast<int>(idx % mask.dims[0]);
            const int y = static_cast<int>((idx / mask.dims[0]) % mask.dims[1]);
            const int z = static_cast<int>(idx / (mask.dims[0] * mask.dims[1]));
            for (const auto& off : offsets) {
                const int xn = x + off[0], yn = y + off[1], zn = z + off[2];
                if (xn < 0 || yn < 0 || zn < 0 || xn >= nx || yn >= ny || zn >= nz) continue;
                const std::size_t idxn = mask.flat_index(static_cast<std::size_t>(xn),
                                                          static_cast<std::size_t>(yn),
                                                          static_cast<std::size_t>(zn));
                if (mask.bits[idxn] && out.labels[idxn] == 0) {
                    out.labels[idxn] = label;
                    stack.push_back(idxn);
                }
            }
        }
        comps.push_back(comp);
    }

    // relabel: decreasing size, ties by first voxel
    std::vector<std::size_t> order(comps.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (comps[a].size != comps[b].size) return comps[a].size > comps[b].size;
        return comps[a].first_voxel < comps[b].first_voxel;
    });
    std::vector<std::uint32_t> remap(comps.size() + 1, 0);
    out.component_sizes.resize(comps.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        remap[comps[order[rank]].provisional] = static_cast<std::uint32_t>(rank + 1);
        out.component_sizes[rank] = comps[order[rank]].size;
    }
    for (auto& l : out.labels) l = remap[l];
    return out;
}

inline BinaryMask largest_component(const BinaryMask& mask, Connectivity conn) {
    const auto field = connected_components(mask, conn);
    if (field.component_count() == 0) throw EmptyMask("mask has no set voxels");
    BinaryMask out;
    out.dims = mask.dims;
    out.voxel_size = mask.voxel_size;
    out.bits.resize(mask.size());
    for (std::size_t idx = 0; idx < mask.size(); ++idx) out.bits[idx] = field.labels[idx] == 1;
    return out;
}

namespace detail {

// Discrete Euclidean ball: offsets with dx^2+dy^2+dz^2 <= r^2.
inline std::vector<std::array<int, 3>> ball_offsets(int radius) {
    std::vector<std::array<int, 3>> offsets;
    for (int dz = -radius; dz <= radius; ++dz)
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx)
                if (dx * dx + dy * dy + dz * dz <= radius * radius)
                    offsets.push_back({dx, dy, dz});
    return offsets;
}

enum class Morph { dilate, erode };

// Out-of-volume voxels count as background for both operations.
inline BinaryMask morph(const BinaryMask& mask, const std::vector<std::array<int, 3>>& se,
                        Morph op) {
    const int nx = static_cast<int>(mask.dims[0]);
    const int ny = static_cast<int>(mask.dims[1]);
    const int nz = static_cast<int>(mask.dims[2]);
    BinaryMask out;
    out.dims = mask.dims;
    out.voxel_size = mask.voxel_size;
    out.bits.assign(mask.size(), 0);
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                bool hit = op == Morph::erode;
                for (const auto& off : se) {
                    const int xn = x + off[0], yn = y + off[1], zn = z + off[2];
                    bool v = false;
                    if (xn >= 0 && yn >= 0 && zn >= 0 && xn < nx && yn < ny && zn < nz)
                        v = mask.bits[mask.flat_index(static_cast<std::size_t>(xn),
                                                      static_cast<std::size_t>(yn),
                                                      static_cast<std::size_t>(zn))] != 0;
                    if (op == Morph::dilate && v) {
                        hit = true;
                        break;
                    }
                    if (op == Morph::erode && !v) {
                        hit = false;
                        break;
                    }
                }
                if (hit)
                    out.bits[out.flat_index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                            static_cast<std::size_t>(z))] = 1;
            }
    return out;
}

}  // namespace detail

// dilation then erosion by the same discrete ball; fills holes and removes
// handles up to the radius scale. Extensive: output contains the input.
inline BinaryMask morphological_close(const BinaryMask& mask, int radius) {
    if (radius < 1) throw Error(ErrorClass::usage, "closing radius must be >= 1");
    const auto se = detail::ball_offsets(radius);
    return detail::morph(detail::morph(mask, se, detail::Morph::dilate), se,
                         detail::Morph::erode);
}

}  // namespace neurogeom
