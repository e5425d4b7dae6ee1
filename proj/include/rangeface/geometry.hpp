#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace rangeface {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr Vec3 operator*(Vec3 a, double s) { return s * a; }
    friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

/// Row-major 3x3 matrix.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static constexpr Mat3 identity() { return {}; }
    static constexpr Mat3 from_rows(Vec3 r0, Vec3 r1, Vec3 r2) {
        return {{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
    }

    constexpr double operator()(int r, int c) const { return m[static_cast<std::size_t>(3 * r + c)]; }
    constexpr double& operator()(int r, int c) { return m[static_cast<std::size_t>(3 * r + c)]; }

    constexpr Vec3 row(int r) const { return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)}; }

    constexpr Mat3 transposed() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
        return t;
    }

    double determinant() const {
        return dot(row(0), cross(row(1), row(2)));
    }

    friend constexpr Vec3 operator*(const Mat3& a, Vec3 v) {
        return {dot(a.row(0), v), dot(a.row(1), v), dot(a.row(2), v)};
    }
    friend constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
        Mat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
                out(r, c) = s;
            }
        return out;
    }
    friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

/// Rotation about x, then y, then z (R = Rz * Ry * Rx), angles in radians.
inline Mat3 rotation_xyz(double ax, double ay, double az) {
    const double cx = std::cos(ax), sx = std::sin(ax);
    const double cy = std::cos(ay), sy = std::sin(ay);
    const double cz = std::cos(az), sz = std::sin(az);
    const Mat3 rx = Mat3::from_rows({1, 0, 0}, {0, cx, -sx}, {0, sx, cx});
    const Mat3 ry = Mat3::from_rows({cy, 0, sy}, {0, 1, 0}, {-sy, 0, cy});
    const Mat3 rz = Mat3::from_rows({cz, -sz, 0}, {sz, cz, 0}, {0, 0, 1});
    return rz * ry * rx;
}

/// x -> rotation * x + translation.
struct RigidTransform {
    Mat3 rotation = Mat3::identity();
    Vec3 translation{};

    Vec3 apply(Vec3 p) const { return rotation * p + translation; }

    RigidTransform inverse() const {
        const Mat3 rt = rotation.transposed();
        return {rt, -1.0 * (rt * translation)};
    }

    /// (a * b)(x) = a(b(x))
    friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
        return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
    }

    /// Max entry of |RᵀR - I| and |det R - 1|; both must stay below 1e-10.
    double orthonormality_error() const {
        const Mat3 g = rotation.transposed() * rotation;
        double err = 0;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) err = std::max(err, std::abs(g(r, c) - (r == c ? 1.0 : 0.0)));
        return std::max(err, std::abs(rotation.determinant() - 1.0));
    }

    /// Row-major 3x4 [R | t].
    std::array<double, 12> to_row_major() const {
        std::array<double, 12> a{};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) a[static_cast<std::size_t>(4 * r + c)] = rotation(r, c);
        }
        a[3] = translation.x;
        a[7] = translation.y;
        a[11] = translation.z;
        return a;
    }

    static RigidTransform from_row_major(const std::array<double, 12>& a) {
        RigidTransform t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t.rotation(r, c) = a[static_cast<std::size_t>(4 * r + c)];
        t.translation = {a[3], a[7], a[11]};
        return t;
    }
};

}  // namespace rangeface
