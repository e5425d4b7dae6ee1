#pragma once

// Score normalization, score-level fusion rules and image-level fusion.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rangeface/error.hpp"
#include "rangeface/matcher.hpp"

namespace rangeface {

enum class FusionRule { mean, min, max, product };

inline std::string_view to_string(FusionRule r) {
    switch (r) {
        case FusionRule::mean: return "mean";
        case FusionRule::min: return "min";
        case FusionRule::max: return "max";
        case FusionRule::product: return "product";
    }
    return "unknown";
}

inline FusionRule parse_rule(std::string_view s) {
    if (s == "mean") return FusionRule::mean;
    if (s == "min") return FusionRule::min;
    if (s == "max") return FusionRule::max;
    if (s == "product") return FusionRule::product;
    throw DataError("unknown fusion rule '" + std::string(s) + "'");
}

/// Where normalization statistics come from: the whole matrix, or each probe
/// column on its own.
enum class NormalizationScope { global, per_probe };

namespace detail {

struct Stats {
    double min, max, mean, std;
};

/// Sample statistics (n - 1 denominator) of the selected cells.
template <class Index>
Stats stats(std::size_t count, Index cell) {
    Stats s{cell(0), cell(0), 0.0, 0.0};
    for (std::size_t i = 0; i < count; ++i) {
        const double v = cell(i);
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        s.mean += v;
    }
    s.mean /= static_cast<double>(count);
    double ss = 0;
    for (std::size_t i = 0; i < count; ++i) ss += (cell(i) - s.mean) * (cell(i) - s.mean);
    s.std = count > 1 ? std::sqrt(ss / static_cast<double>(count - 1)) : 0.0;
    return s;
}

}  // namespace detail

inline ScoreMatrix normalize_scores(const ScoreMatrix& m, Normalization method,
                                    NormalizationScope scope = NormalizationScope::global) {
    m.check_shape();
    if (method == Normalization::raw) throw NormalizationError("target normalization must be minmax or zscore");
    if (m.normalization != Normalization::raw)
        throw NormalizationError("scores are already " + std::string(to_string(m.normalization)) + "-normalized");
    if (m.values.empty()) throw NormalizationError("empty score matrix");

    ScoreMatrix out = m;
    out.normalization = method;
    auto apply = [&](const detail::Stats& s, auto cell_ref, std::size_t count) {
        if (method == Normalization::minmax) {
            if (!(s.max > s.min)) throw NormalizationError("constant scores: max(S) == min(S), minmax undefined");
            const double range = s.max - s.min;
            for (std::size_t i = 0; i < count; ++i) {
                double& v = cell_ref(i);
                v = (v - s.min) / range;
            }
        } else {
            if (!(s.std > 0)) throw NormalizationError("constant scores: std(S) == 0, zscore undefined");
            for (std::size_t i = 0; i < count; ++i) {
                double& v = cell_ref(i);
                v = (v - s.mean) / s.std;
            }
        }
    };
    if (scope == NormalizationScope::global) {
        const auto s = detail::stats(m.values.size(), [&](std::size_t i) { return m.values[i]; });
        apply(s, [&](std::size_t i) -> double& { return out.values[i]; }, out.values.size());
    } else {
        for (std::size_t p = 0; p < m.cols(); ++p) {
            const auto s = detail::stats(m.rows(), [&](std::size_t g) { return m(g, p); });
            apply(s, [&](std::size_t g) -> double& { return out(g, p); }, m.rows());
        }
    }
    return out;
}

struct FuseOptions {
    /// Permit the product rule on zscore-normalized (signed) scores.
    bool allow_signed_product = false;
};

inline ScoreMatrix fuse_scores(const ScoreMatrix& a, const ScoreMatrix& b, FusionRule rule, const FuseOptions& opts = {}) {
    a.check_shape();
    b.check_shape();
    if (a.gallery_ids != b.gallery_ids || a.probe_ids != b.probe_ids)
        throw FusionError("score matrices have different gallery/probe axes");
    if (a.polarity != b.polarity) throw FusionError("score matrices have different polarity");
    if (a.normalization != b.normalization)
        throw FusionError("normalization mismatch: " + std::string(to_string(a.normalization)) + " vs " +
                          std::string(to_string(b.normalization)));
    if (a.normalization == Normalization::raw) throw FusionError("fusion needs normalized scores, got raw");
    if (rule == FusionRule::product && a.normalization != Normalization::minmax && !opts.allow_signed_product)
        throw FusionError(
            "product rule on zscore scores is sign-ambiguous (negative products invert the ordering); use minmax "
            "or set the signed-product override");

    ScoreMatrix out = a;
    out.modality = Modality::fused;
    out.tags.erase("metric");
    if (a.tags.count("metric") && b.tags.count("metric") && a.tags.at("metric") == b.tags.at("metric"))
        out.tags["metric"] = a.tags.at("metric");
    out.tags["rule"] = std::string(to_string(rule));
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double x = a.values[i], y = b.values[i];
        switch (rule) {
            case FusionRule::mean: out.values[i] = (x + y) / 2; break;
            case FusionRule::min: out.values[i] = std::min(x, y); break;
            case FusionRule::max: out.values[i] = std::max(x, y); break;
            case FusionRule::product: out.values[i] = x * y; break;
        }
    }
    return out;
}

/// Concatenates shape then color. With `standardize`, each block is first
/// shifted to zero mean and scaled to unit sample standard deviation.
inline std::vector<double> fuse_image(std::span<const double> shape, std::span<const double> color, bool standardize = true) {
    if (shape.size() < 2 || color.size() < 2) throw FusionError("image fusion blocks need at least 2 values");
    std::vector<double> out;
    out.reserve(shape.size() + color.size());
    auto push = [&](std::span<const double> block) {
        if (!standardize) {
            out.insert(out.end(), block.begin(), block.end());
            return;
        }
        double mean = 0;
        for (double v : block) mean += v;
        mean /= static_cast<double>(block.size());
        double ss = 0;
        for (double v : block) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(block.size() - 1));
        if (!(sd > 0)) throw FusionError("image fusion block has zero variance");
        for (double v : block) out.push_back((v - mean) / sd);
    };
    push(shape);
    push(color);
    return out;
}

}  // namespace rangeface
