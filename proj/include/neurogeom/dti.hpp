#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/linalg.hpp"
#include "neurogeom/volume.hpp"

// Diffusion-tensor processing: symmetric 3x3 eigenstructure, fractional
// anisotropy, and voxelwise FA / principal-direction maps.

namespace neurogeom {

// The six unique coefficients of a symmetric diffusion tensor.
struct DiffusionTensor {
    double dxx = 0, dyy = 0, dzz = 0;
    double dxy = 0, dxz = 0, dyz = 0;

    Mat3 matrix() const {
        return {{{dxx, dxy, dxz}, {dxy, dyy, dyz}, {dxz, dyz, dzz}}};
    }

    bool is_zero() const {
        return dxx == 0 && dyy == 0 && dzz == 0 && dxy == 0 && dxz == 0 && dyz == 0;
    }
};

// lambdas sorted descending; vectors[i] is the unit eigenvector of
// lambdas[i], sign-fixed so its first nonzero component is positive.
struct EigenSystem {
    std::array<double, 3> lambdas;
    std::array<Vec3, 3> vectors;
};

namespace detail {

inline Vec3 fix_sign(Vec3 v) {
    for (double c : v) {
        if (std::abs(c) > 1e-12) {
            if (c < 0) return {-v[0], -v[1], -v[2]};
            return v;
        }
    }
    return v;
}

// Eigenvalues of a symmetric 3x3 matrix in closed form: the shifted/scaled
// matrix has eigenvalues 2*cos of angles from the trigonometric solution of
// the characteristic cubic.
inline std::array<double, 3> analytic_eigenvalues(const Mat3& a) {
    const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    Mat3 b = a;
    for (int i = 0; i < 3; ++i) b[i][i] -= q;
    double p2 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) p2 += b[i][j] * b[i][j];
    const double p = std::sqrt(p2 / 6.0);
    if (p == 0.0) return {q, q, q};
    for (auto& row : b)
        for (auto& x : row) x /= p;
    double r = det(b) / 2.0;
    r = std::min(1.0, std::max(-1.0, r));
    const double phi = std::acos(r) / 3.0;
    const double l1 = q + 2.0 * p * std::cos(phi);
    const double l3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
    const double l2 = 3.0 * q - l1 - l3;
    return {l1, l2, l3};  // descending
}

// Eigenvector for a well-separated eigenvalue: the largest cross product of
// two rows of (A - lambda I).
inline bool analytic_eigenvector(const Mat3& a, double lambda, Vec3& out) {
    Mat3 b = a;
    for (int i = 0; i < 3; ++i) b[i][i] -= lambda;
    const Vec3 r0 = {b[0][0], b[0][1], b[0][2]};
    const Vec3 r1 = {b[1][0], b[1][1], b[1][2]};
    const Vec3 r2 = {b[2][0], b[2][1], b[2][2]};
    const Vec3 c01 = cross(r0, r1), c02 = cross(r0, r2), c12 = cross(r1, r2);
    const double n01 = dot(c01, c01), n02 = dot(c02, c02), n12 = dot(c12, c12);
    const Vec3& best = n01 >= n02 ? (n01 >= n12 ? c01 : c12) : (n02 >= n12 ? c02 : c12);
    const double n = std::sqrt(std::max({n01, n02, n12}));
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) scale = std::max(scale, std::abs(a[i][j]));
    if (n <= 1e-6 * std::max(scale * scale, 1e-300)) return false;  // ill-conditioned
    out = (1.0 / n) * best;
    return true;
}

}  // namespace detail

// Closed-form trigonometric solver with a cyclic-Jacobi fallback when the
// spectrum is nearly degenerate (relative gap below 1e-8).
inline EigenSystem eigendecompose(const DiffusionTensor& d) {
    const Mat3 a = d.matrix();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!std::isfinite(a[i][j])) throw NonFinite("tensor has NaN or Inf entries");

    EigenSystem out;
    const auto lambdas = detail::analytic_eigenvalues(a);
    double scale = std::max({std::abs(lambdas[0]), std::abs(lambdas[2]), 1e-300});
    const double gap01 = std::abs(lambdas[0] - lambdas[1]) / scale;
    const double gap12 = std::abs(lambdas[1] - lambdas[2]) / scale;

    bool ok = gap01 >= 1e-8 && gap12 >= 1e-8;
    if (ok) {
        out.lambdas = lambdas;
        for (int i = 0; i < 3 && ok; ++i)
            ok = detail::analytic_eigenvector(a, lambdas[i], out.vectors[i]);
    }
    if (!ok) {
        const auto eig = jacobi_symmetric<3>(a);
        out.lambdas = eig.values;
        for (int i = 0; i < 3; ++i) out.vectors[i] = eig.vectors[i];
        // degenerate pairs: keep a deterministic orthonormal frame
        out.vectors[1] = normalized(out.vectors[1] - dot(out.vectors[1], out.vectors[0]) *
                                                         out.vectors[0]);
        out.vectors[2] = cross(out.vectors[0], out.vectors[1]);
    }
    for (auto& v : out.vectors) v = detail::fix_sign(v);
    return out;
}

// Fractional anisotropy from the three eigenvalues. In scalar context the
// all-zero spectrum is an error; map context writes 0 for zero tensors.
inline double fa(double l1, double l2, double l3) {
    const double den = 2.0 * (l1 * l1 + l2 * l2 + l3 * l3);
    if (den == 0.0) throw AllZero("FA undefined for the zero tensor");
    const double num =
        (l1 - l2) * (l1 - l2) + (l2 - l3) * (l2 - l3) + (l3 - l1) * (l3 - l1);
    double value = std::sqrt(num / den);
    if (value > 1.0 && value < 1.0 + 1e-12) value = 1.0;  // rounding only, never real overshoot
    return value;
}

inline double fa(const std::array<double, 3>& lambdas) {
    return fa(lambdas[0], lambdas[1], lambdas[2]);
}

// Per-voxel tensor field stored as six coefficient volumes sharing one grid
// (the on-disk layout is six separate Analyze files).
struct TensorField {
    std::array<std::size_t, 3> dims{1, 1, 1};
    std::array<double, 3> voxel_size{1.0, 1.0, 1.0};
    // order: dxx, dyy, dzz, dxy, dxz, dyz
    std::array<std::vector<double>, 6> comps;

    std::size_t size() const { return dims[0] * dims[1] * dims[2]; }

    DiffusionTensor at(std::size_t idx) const {
        return {comps[0][idx], comps[1][idx], comps[2][idx],
                comps[3][idx], comps[4][idx], comps[5][idx]};
    }

    static TensorField from_volumes(const std::array<Volume3D, 6>& vols) {
        TensorField f;
        f.dims = {vols[0].nx(), vols[0].ny(), vols[0].nz()};
        f.voxel_size = vols[0].header().voxel_size;
        for (int c = 0; c < 6; ++c) {
            const auto& v = vols[c];
            if (v.nx() != f.dims[0] || v.ny() != f.dims[1] || v.nz() != f.dims[2] || v.nt() != 1)
                throw DimsMismatch("tensor component " + std::to_string(c) +
                                   " does not match the field dimensions");
            f.comps[c].resize(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) f.comps[c][i] = v.at_flat(i);
        }
        return f;
    }
};

struct FaMapStats {
    std::size_t negative_eigenvalue_voxels = 0;  // non-SPD tensors passed through
};

// Voxelwise FA as a float32 volume ready to write as NIfTI-1. Zero tensors
// map to 0; tensors with negative eigenvalues keep the absolute formula
// value and are tallied in `stats`.
inline Volume3D fa_map(const TensorField& field, FaMapStats* stats = nullptr) {
    VolumeHeader h;
    h.dims = {field.dims[0], field.dims[1], field.dims[2], 1};
    h.voxel_size = field.voxel_size;
    h.datatype = Datatype::f32;
    h.description = "fractional anisotropy";
    std::vector<float> values(field.size(), 0.0f);
    FaMapStats local;
    for (std::size_t idx = 0; idx < field.size(); ++idx) {
        const DiffusionTensor d = field.at(idx);
        if (d.is_zero()) continue;
        const auto eig = eigendecompose(d);
        if (eig.lambdas[2] < 0.0) ++local.negative_eigenvalue_voxels;
        values[idx] = static_cast<float>(fa(eig.lambdas));
    }
    if (stats) *stats = local;
    return Volume3D(h, std::move(values));
}

// Voxelwise principal eigenvector components as three float32 volumes; zero
// tensors map to the zero vector.
inline std::array<Volume3D, 3> principal_direction_map(const TensorField& field) {
    VolumeHeader h;
    h.dims = {field.dims[0], field.dims[1], field.dims[2], 1};
    h.voxel_size = field.voxel_size;
    h.datatype = Datatype::f32;
    std::array<std::vector<float>, 3> comps;
    for (auto& c : comps) c.assign(field.size(), 0.0f);
    for (std::size_t idx = 0; idx < field.size(); ++idx) {
        const DiffusionTensor d = field.at(idx);
        if (d.is_zero()) continue;
        const auto eig = eigendecompose(d);
        for (int c = 0; c < 3; ++c) comps[c][idx] = static_cast<float>(eig.vectors[0][c]);
    }
    auto make = [&](int c, const char* name) {
        VolumeHeader hc = h;
        hc.description = name;
        return Volume3D(hc, std::move(comps[c]));
    };
    return {make(0, "principal direction x"), make(1, "principal direction y"),
            make(2, "principal direction z")};
}

}  // namespace neurogeom
