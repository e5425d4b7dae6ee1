#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "rangeface/error.hpp"

namespace rangeface {

/// Dense symmetric matrix stored row-major.
struct SymmetricMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    explicit SymmetricMatrix(std::size_t size = 0) : n(size), a(size * size, 0.0) {}
    double& operator()(std::size_t r, std::size_t c) { return a[r * n + c]; }
    double operator()(std::size_t r, std::size_t c) const { return a[r * n + c]; }
};

struct EigenDecomposition {
    std::vector<double> values;  // unsorted, in diagonal order
    /// Column j of this row-major n x n matrix is the eigenvector of values[j].
    std::vector<double> vectors;
    int sweeps = 0;
};

/// Cyclic Jacobi eigensolver. Sweeps visit (p, q) pairs in row order p < q and
/// stop once every off-diagonal magnitude is below `rel_tol * |trace|` (or
/// exactly zero when the trace vanishes).
inline EigenDecomposition jacobi_eigen(SymmetricMatrix m, double rel_tol = 1e-12, int max_sweeps = 100) {
    const std::size_t n = m.n;
    EigenDecomposition out;
    out.vectors.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + i] = 1.0;

    double trace = 0;
    for (std::size_t i = 0; i < n; ++i) trace += m(i, i);
    const double tol = rel_tol * std::abs(trace);

    auto max_off = [&] {
        double v = 0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) v = std::max(v, std::abs(m(p, q)));
        return v;
    };

    for (;;) {
        const double off = max_off();
        if (off < tol || off == 0.0) break;
        if (out.sweeps == max_sweeps) throw NumericError("Jacobi eigensolver did not converge");
        ++out.sweeps;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = m(p, q);
                if (apq == 0.0) continue;
                const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = m(k, p), akq = m(k, q);
                    m(k, p) = c * akp - s * akq;
                    m(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = m(p, k), aqk = m(q, k);
                    m(p, k) = c * apk - s * aqk;
                    m(q, k) = s * apk + c * aqk;
                }
                m(p, q) = 0.0;
                m(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    double& vkp = out.vectors[k * n + p];
                    double& vkq = out.vectors[k * n + q];
                    const double a = vkp, b = vkq;
                    vkp = c * a - s * b;
                    vkq = s * a + c * b;
                }
            }
        }
    }
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = m(i, i);
    return out;
}

}  // namespace rangeface
