#pragma once

// PCA subspace trained with the snapshot method: the k x k Gram matrix of the
// centered training vectors is diagonalized instead of the D x D covariance,
// which is far larger when D >> k.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rangeface/error.hpp"
#include "rangeface/jacobi.hpp"
#include "rangeface/mesh.hpp"
#include "rangeface/parallel.hpp"
#include "rangeface/textio.hpp"

namespace rangeface {

enum class Modality { shape, color, concat, fused };

inline std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::shape: return "shape";
        case Modality::color: return "color";
        case Modality::concat: return "concat";
        case Modality::fused: return "fused";
    }
    return "unknown";
}

inline Modality parse_modality(std::string_view s) {
    if (s == "shape") return Modality::shape;
    if (s == "color") return Modality::color;
    if (s == "concat") return Modality::concat;
    if (s == "fused") return Modality::fused;
    throw DataError("unknown modality '" + std::string(s) + "'");
}

struct Subspace {
    std::vector<double> mean;
    /// basis[i] is the i-th unit eigenvector, in descending eigenvalue order.
    std::vector<std::vector<double>> basis;
    std::vector<double> eigenvalues;
    std::size_t training_count = 0;
    Modality modality = Modality::shape;

    std::size_t dimension() const { return mean.size(); }
    std::size_t components() const { return basis.size(); }

    friend bool operator==(const Subspace&, const Subspace&) = default;
};

struct FeatureVector {
    std::vector<double> coefficients;
    std::string subject_id;
    PoseTag pose = PoseTag::gallery;
    Modality modality = Modality::shape;
};

struct TrainOptions {
    /// Keep at most this many components; 0 keeps every one above the floor.
    std::size_t max_components = 0;
    /// Components with eigenvalue <= floor * max eigenvalue are dropped.
    double eigenvalue_floor = 1e-10;
    Modality modality = Modality::shape;
};

inline Subspace train(std::span<const std::vector<double>> vectors, const TrainOptions& opts = {}) {
    const std::size_t k = vectors.size();
    if (k < 2) throw TrainingError("training needs at least 2 vectors");
    const std::size_t dim = vectors[0].size();
    if (dim == 0) throw TrainingError("training vectors are empty");
    for (const auto& v : vectors)
        if (v.size() != dim) throw TrainingError("training vectors have inconsistent lengths");

    Subspace sub;
    sub.training_count = k;
    sub.modality = opts.modality;
    sub.mean.assign(dim, 0.0);
    for (const auto& v : vectors)
        for (std::size_t j = 0; j < dim; ++j) sub.mean[j] += v[j];
    for (auto& m : sub.mean) m /= static_cast<double>(k);

    std::vector<std::vector<double>> centered(k, std::vector<double>(dim));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < dim; ++j) centered[i][j] = vectors[i][j] - sub.mean[j];

    SymmetricMatrix gram(k);
    const double norm = 1.0 / static_cast<double>(k - 1);
    parallel_for(k, [&](std::size_t i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0;
            for (std::size_t t = 0; t < dim; ++t) s += centered[i][t] * centered[j][t];
            gram(i, j) = s * norm;
        }
    });
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < i; ++j) gram(j, i) = gram(i, j);

    const EigenDecomposition eig = jacobi_eigen(gram);
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eig.values[a] > eig.values[b]; });

    const double lambda_max = eig.values[order[0]];
    if (!(lambda_max > 0)) throw TrainingError("zero variance: training vectors are identical");
    const double floor = opts.eigenvalue_floor * lambda_max;
    std::size_t keep = 0;
    while (keep < k - 1 && eig.values[order[keep]] > floor) ++keep;
    if (opts.max_components > 0) keep = std::min(keep, opts.max_components);

    sub.basis.assign(keep, std::vector<double>(dim, 0.0));
    sub.eigenvalues.resize(keep);
    parallel_for(keep, [&](std::size_t c) {
        const std::size_t col = order[c];
        auto& b = sub.basis[c];
        for (std::size_t i = 0; i < k; ++i) {
            const double u = eig.vectors[i * k + col];
            for (std::size_t t = 0; t < dim; ++t) b[t] += u * centered[i][t];
        }
        sub.eigenvalues[c] = eig.values[col];
    });

    // Re-orthonormalize in descending order; the mapped Gram eigenvectors are
    // orthogonal only up to rounding that grows as lambda shrinks.
    for (std::size_t c = 0; c < keep; ++c) {
        auto& b = sub.basis[c];
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < c; ++p) {
                const auto& q = sub.basis[p];
                double proj = 0;
                for (std::size_t t = 0; t < dim; ++t) proj += q[t] * b[t];
                for (std::size_t t = 0; t < dim; ++t) b[t] -= proj * q[t];
            }
        }
        double len = 0;
        double largest = 0;
        for (double v : b) {
            len += v * v;
            largest = std::max(largest, std::abs(v));
        }
        len = std::sqrt(len);
        if (!(len > 0)) throw TrainingError("zero variance: degenerate principal component");
        // Sign convention: first coefficient that is not rounding noise is >= 0.
        double sign = 1.0;
        for (double v : b) {
            if (std::abs(v) > 1e-9 * largest) {
                sign = v < 0 ? -1.0 : 1.0;
                break;
            }
        }
        for (auto& v : b) v *= sign / len;
    }
    if (keep == 0) throw TrainingError("zero variance: no component above the eigenvalue floor");
    return sub;
}

inline FeatureVector project(const Subspace& sub, std::span<const double> v) {
    if (v.size() != sub.dimension())
        throw DataError("projection length mismatch: got " + std::to_string(v.size()) + ", subspace has " +
                        std::to_string(sub.dimension()));
    FeatureVector f;
    f.modality = sub.modality;
    f.coefficients.resize(sub.components());
    for (std::size_t i = 0; i < sub.components(); ++i) {
        const auto& b = sub.basis[i];
        double s = 0;
        for (std::size_t t = 0; t < v.size(); ++t) s += b[t] * (v[t] - sub.mean[t]);
        f.coefficients[i] = s;
    }
    return f;
}

/// mean + sum_i coefficients[i] * basis[i]
inline std::vector<double> reconstruct(const Subspace& sub, std::span<const double> coefficients) {
    std::vector<double> out = sub.mean;
    for (std::size_t i = 0; i < coefficients.size() && i < sub.components(); ++i)
        for (std::size_t t = 0; t < out.size(); ++t) out[t] += coefficients[i] * sub.basis[i][t];
    return out;
}

// ---------------------------------------------------------------------------
// Subspace file:
//   rangeface-pca v1
//   D <dim>
//   m <components>
//   k <training count>
//   modality <shape|color|concat>
//   <mean: D values>
//   <eigenvalues: m values>
//   <m basis rows of D values>

inline std::string serialize_subspace(const Subspace& sub) {
    std::string out = "rangeface-pca v1\nD " + std::to_string(sub.dimension()) + "\nm " +
                      std::to_string(sub.components()) + "\nk " + std::to_string(sub.training_count) +
                      "\nmodality " + std::string(to_string(sub.modality)) + "\n";
    auto row = [&out](const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += ' ';
            textio::append(out, v[i]);
        }
        out += '\n';
    };
    row(sub.mean);
    row(sub.eigenvalues);
    for (const auto& b : sub.basis) row(b);
    return out;
}

inline Subspace parse_subspace(std::string_view text) {
    textio::LineReader reader(text);
    std::string_view line;
    auto need = [&](const char* what) {
        if (!reader.next(line)) throw ParseError(std::string("unexpected end of subspace, expected ") + what, reader.line_no() + 1);
    };
    auto count = [&](std::string_view key) {
        need(key.data());
        auto tok = textio::split_ws(line);
        std::uint64_t v = 0;
        if (tok.size() != 2 || tok[0] != key || !textio::parse_u64(tok[1], v))
            throw ParseError("expected '" + std::string(key) + " <count>'", reader.line_no());
        return static_cast<std::size_t>(v);
    };
    auto row = [&](std::size_t n) {
        need("row");
        auto tok = textio::split_ws(line);
        if (tok.size() != n) throw ParseError("row has " + std::to_string(tok.size()) + " values, expected " + std::to_string(n), reader.line_no());
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i)
            if (!textio::parse_double(tok[i], v[i]) || !std::isfinite(v[i])) throw ParseError("bad number", reader.line_no());
        return v;
    };
    need("header");
    if (line != "rangeface-pca v1") throw ParseError("malformed header, expected 'rangeface-pca v1'", reader.line_no());
    Subspace sub;
    const std::size_t dim = count("D");
    const std::size_t m = count("m");
    sub.training_count = count("k");
    need("modality");
    auto tok = textio::split_ws(line);
    if (tok.size() != 2 || tok[0] != "modality") throw ParseError("expected 'modality <name>'", reader.line_no());
    try {
        sub.modality = parse_modality(tok[1]);
    } catch (const DataError& e) {
        throw ParseError(e.what(), reader.line_no());
    }
    sub.mean = row(dim);
    sub.eigenvalues = row(m);
    for (std::size_t i = 0; i < m; ++i) sub.basis.push_back(row(dim));
    if (reader.next(line)) throw ParseError("trailing content after subspace", reader.line_no());
    return sub;
}

}  // namespace rangeface
