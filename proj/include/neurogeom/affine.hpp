#pragma once

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "neurogeom/errors.hpp"
#include "neurogeom/io_util.hpp"
#include "neurogeom/linalg.hpp"
#include "neurogeom/mesh.hpp"

// Landmark-based affine and rigid registration by least squares.
//
// The affine map q = Rp + c is handled in its augmented 4x4 form
//   A = [ R  c ]
//       [ 0  1 ]
// which is linear on homogeneous coordinates. The full-affine least-squares
// estimate is (R c) = Q P' (P P')^{-1} over the 4xk homogeneous landmark
// matrix P; the rotation-constrained variant uses the orthogonal polar factor
// of the centered cross-covariance with the reflection excluded by
// completing the smallest singular direction right-handedly.

namespace neurogeom {

struct LandmarkSet {
    std::vector<Vec3> points;
    std::vector<std::string> labels;
    std::string subject_id;

    std::size_t size() const { return points.size(); }
};

class AffineTransform {
public:
    AffineTransform() : m_{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}} {}

    static AffineTransform from_parts(const Mat3& r, const Vec3& c) {
        AffineTransform a;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) a.m_[i][j] = r[i][j];
            a.m_[i][3] = c[i];
        }
        return a;
    }

    static AffineTransform from_matrix(const std::array<std::array<double, 4>, 4>& m) {
        if (m[3][0] != 0.0 || m[3][1] != 0.0 || m[3][2] != 0.0 || m[3][3] != 1.0)
            throw Error(ErrorClass::parse, "affine matrix last row must be (0,0,0,1)");
        AffineTransform a;
        a.m_ = m;
        return a;
    }

    const std::array<std::array<double, 4>, 4>& matrix() const { return m_; }

    Mat3 rotation() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r[i][j] = m_[i][j];
        return r;
    }

    Vec3 translation() const { return {m_[0][3], m_[1][3], m_[2][3]}; }

    Vec3 apply(const Vec3& p) const {
        return {m_[0][0] * p[0] + m_[0][1] * p[1] + m_[0][2] * p[2] + m_[0][3],
                m_[1][0] * p[0] + m_[1][1] * p[1] + m_[1][2] * p[2] + m_[1][3],
                m_[2][0] * p[0] + m_[2][1] * p[1] + m_[2][2] * p[2] + m_[2][3]};
    }

    // homogeneous 4-vector action; exactly linear
    std::array<double, 4> apply_homogeneous(const std::array<double, 4>& x) const {
        std::array<double, 4> out{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) out[i] += m_[i][j] * x[j];
        return out;
    }

    AffineTransform compose(const AffineTransform& other) const {  // this after other
        std::array<std::array<double, 4>, 4> out{};
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                for (int k = 0; k < 4; ++k) out[i][j] += m_[i][k] * other.m_[k][j];
        return from_matrix(out);
    }

private:
    std::array<std::array<double, 4>, 4> m_;
};

namespace detail {

inline void check_correspondence(const LandmarkSet& p, const LandmarkSet& q) {
    if (p.size() != q.size())
        throw SizeMismatch("landmark sets differ in size: " + std::to_string(p.size()) +
                           " vs " + std::to_string(q.size()));
    if (!p.labels.empty() && !q.labels.empty() && p.labels != q.labels)
        throw LabelMismatch("landmark labels do not correspond in order");
}

}  // namespace detail

// Full-affine least squares: (R c) = Q P' (P P')^{-1}. The 4x4 normal matrix
// is factored by the symmetric eigensolver; a condition number beyond 1e12
// (coplanar or collinear landmarks) raises RankDeficient.
inline AffineTransform estimate_affine(const LandmarkSet& moving, const LandmarkSet& fixed) {
    detail::check_correspondence(moving, fixed);
    const std::size_t k = moving.size();
    if (k < 4)
        throw RankDeficient("rank-deficient landmarks (need at least 4, got " +
                            std::to_string(k) + ")");

    std::array<std::array<double, 4>, 4> normal{};  // P P'
    std::array<std::array<double, 4>, 3> cross{};   // Q P'
    for (std::size_t i = 0; i < k; ++i) {
        const std::array<double, 4> ph = {moving.points[i][0], moving.points[i][1],
                                          moving.points[i][2], 1.0};
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) normal[r][c] += ph[r] * ph[c];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 4; ++c) cross[r][c] += fixed.points[i][r] * ph[c];
    }

    const auto eig = jacobi_symmetric<4>(normal);
    const double lambda_max = eig.values[0], lambda_min = eig.values[3];
    if (!(lambda_min > 0.0) || lambda_max / lambda_min > 1e12)
        throw RankDeficient("rank-deficient landmarks (coplanar or collinear)");

    // (P P')^{-1} = V diag(1/lambda) V'
    std::array<std::array<double, 4>, 4> inv{};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            for (int e = 0; e < 4; ++e)
                inv[r][c] += eig.vectors[e][r] * eig.vectors[e][c] / eig.values[e];

    std::array<std::array<double, 4>, 4> m{};
    m[3] = {0, 0, 0, 1};
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 4; ++c)
            for (int e = 0; e < 4; ++e) m[r][c] += cross[r][e] * inv[e][c];
    return AffineTransform::from_matrix(m);
}

// Rotation-constrained least squares (R'R = I, det R = +1).
inline AffineTransform estimate_rigid(const LandmarkSet& moving, const LandmarkSet& fixed) {
    detail::check_correspondence(moving, fixed);
    const std::size_t k = moving.size();
    if (k < 3)
        throw DegenerateConfiguration("need at least 3 landmarks, got " + std::to_string(k));

    Vec3 pbar{0, 0, 0}, qbar{0, 0, 0};
    for (std::size_t i = 0; i < k; ++i) {
        pbar = pbar + moving.points[i];
        qbar = qbar + fixed.points[i];
    }
    pbar = (1.0 / double(k)) * pbar;
    qbar = (1.0 / double(k)) * qbar;

    Mat3 c{};  // cross-covariance sum q~ p~'
    for (std::size_t i = 0; i < k; ++i) {
        const Vec3 pt = moving.points[i] - pbar;
        const Vec3 qt = fixed.points[i] - qbar;
        for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) c[r][s] += qt[r] * pt[s];
    }

    const auto eig = jacobi_symmetric<3>(mul(transposed(c), c));
    Vec3 v1 = {eig.vectors[0][0], eig.vectors[0][1], eig.vectors[0][2]};
    Vec3 v2 = {eig.vectors[1][0], eig.vectors[1][1], eig.vectors[1][2]};
    Vec3 v3 = cross(v1, v2);  // right-handed completion of the V frame

    const double s1 = std::sqrt(std::max(eig.values[0], 0.0));
    const double s2 = std::sqrt(std::max(eig.values[1], 0.0));
    if (!(s1 > 0.0) || s2 <= 1e-12 * s1)
        throw DegenerateConfiguration("collinear centered landmarks");

    const Vec3 u1 = normalized(mul(c, v1));
    Vec3 u2 = mul(c, v2);
    u2 = normalized(u2 - dot(u2, u1) * u1);
    const Vec3 u3 = cross(u1, u2);  // reflection excluded on the smallest direction

    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            r[i][j] = u1[i] * v1[j] + u2[i] * v2[j] + u3[i] * v3[j];  // U V'

    const Vec3 t = qbar - mul(r, pbar);
    return AffineTransform::from_parts(r, t);
}

inline AffineTransform invert_affine(const AffineTransform& a) {
    const Mat3 r = a.rotation();
    const double d = det(r);
    if (std::abs(d) <= 1e-12)
        throw SingularTransform("transform is singular (|det R| = " + std::to_string(std::abs(d)) +
                                ")");
    const Mat3 rinv = inverse(r, d);
    const Vec3 c = a.translation();
    return AffineTransform::from_parts(rinv, {-dot(rinv[0], c), -dot(rinv[1], c), -dot(rinv[2], c)});
}

inline std::vector<Vec3> apply_affine(const AffineTransform& a, const std::vector<Vec3>& pts) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.push_back(a.apply(p));
    return out;
}

// Orientation-reversing transforms flip the winding to keep faces
// counterclockwise from outside.
inline TriMesh apply_affine(const AffineTransform& a, const TriMesh& mesh) {
    TriMesh out = mesh;
    out.vertices = apply_affine(a, mesh.vertices);
    if (det(a.rotation()) < 0.0) flip_winding(out);
    return out;
}

struct RegistrationResidual {
    double rms = 0.0;
    std::vector<double> per_landmark;
};

inline RegistrationResidual registration_residual(const AffineTransform& a,
                                                  const LandmarkSet& moving,
                                                  const LandmarkSet& fixed) {
    if (moving.size() != fixed.size())
        throw SizeMismatch("landmark sets differ in size: " + std::to_string(moving.size()) +
                           " vs " + std::to_string(fixed.size()));
    RegistrationResidual out;
    out.per_landmark.reserve(moving.size());
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < moving.size(); ++i) {
        const double r = norm(fixed.points[i] - a.apply(moving.points[i]));
        out.per_landmark.push_back(r);
        sum_sq += r * r;
    }
    out.rms = moving.size() ? std::sqrt(sum_sq / double(moving.size())) : 0.0;
    return out;
}

// --- file formats -------------------------------------------------------

// Landmark CSV: header `label,x,y,z`, coordinates in mm.
inline LandmarkSet parse_landmarks_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    LandmarkSet out;
    auto fields = [](const std::string& s) {
        std::vector<std::string> f;
        std::string cur;
        for (char ch : s) {
            if (ch == ',') {
                f.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur += ch;
            }
        }
        f.push_back(cur);
        return f;
    };
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto f = fields(line);
        if (!header_seen) {
            if (f != std::vector<std::string>{"label", "x", "y", "z"})
                throw ParseError(line_no, "expected header label,x,y,z");
            header_seen = true;
            continue;
        }
        if (f.size() != 4) throw ParseError(line_no, "expected 4 fields");
        char* end = nullptr;
        Vec3 p;
        for (int a = 0; a < 3; ++a) {
            p[a] = std::strtod(f[a + 1].c_str(), &end);
            if (end == f[a + 1].c_str() || *end != '\0')
                throw ParseError(line_no, "bad coordinate \"" + f[a + 1] + "\"");
        }
        for (const auto& existing : out.labels)
            if (existing == f[0]) throw ParseError(line_no, "duplicate label \"" + f[0] + "\"");
        out.labels.push_back(f[0]);
        out.points.push_back(p);
    }
    return out;
}

inline LandmarkSet load_landmarks(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    auto set = parse_landmarks_csv(std::string(bytes.begin(), bytes.end()));
    set.subject_id = path.stem().string();
    return set;
}

inline void save_landmarks(const LandmarkSet& set, const std::filesystem::path& path) {
    std::string out = "label,x,y,z\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        out += (i < set.labels.size() ? set.labels[i] : "p" + std::to_string(i)) + ',' +
               format_g(set.points[i][0], 17) + ',' + format_g(set.points[i][1], 17) + ',' +
               format_g(set.points[i][2], 17) + '\n';
    }
    atomic_write_file(path, out);
}

// Transform file: the 4x4 matrix, row-major, 17 significant digits.
inline void save_affine(const AffineTransform& a, const std::filesystem::path& path) {
    std::string out;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            out += format_g(a.matrix()[r][c], 17);
            out += c == 3 ? '\n' : ' ';
        }
    }
    atomic_write_file(path, out);
}

inline AffineTransform load_affine(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::array<std::array<double, 4>, 4> m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (!(in >> m[r][c]))
                throw ParseError(static_cast<std::size_t>(r), "affine file needs 16 numbers");
    return AffineTransform::from_matrix(m);
}

}  // namespace neurogeom
