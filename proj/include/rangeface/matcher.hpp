#pragma once

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rangeface/error.hpp"
#include "rangeface/parallel.hpp"
#include "rangeface/subspace.hpp"
#include "rangeface/textio.hpp"

namespace rangeface {

enum class Polarity { distance, similarity };
enum class Normalization { raw, minmax, zscore };
enum class Metric { l1, mahalanobis };

inline std::string_view to_string(Polarity p) { return p == Polarity::distance ? "distance" : "similarity"; }
inline std::string_view to_string(Metric m) { return m == Metric::l1 ? "l1" : "mahalanobis"; }
inline std::string_view to_string(Normalization n) {
    switch (n) {
        case Normalization::raw: return "raw";
        case Normalization::minmax: return "minmax";
        case Normalization::zscore: return "zscore";
    }
    return "unknown";
}

inline Polarity parse_polarity(std::string_view s) {
    if (s == "distance") return Polarity::distance;
    if (s == "similarity") return Polarity::similarity;
    throw DataError("unknown polarity '" + std::string(s) + "'");
}
inline Normalization parse_normalization(std::string_view s) {
    if (s == "raw") return Normalization::raw;
    if (s == "minmax") return Normalization::minmax;
    if (s == "zscore") return Normalization::zscore;
    throw DataError("unknown normalization '" + std::string(s) + "'");
}
inline Metric parse_metric(std::string_view s) {
    if (s == "l1") return Metric::l1;
    if (s == "mahalanobis") return Metric::mahalanobis;
    throw DataError("unknown metric '" + std::string(s) + "'");
}

/// Gallery x probe scores; values are row-major with one row per gallery id.
struct ScoreMatrix {
    std::vector<double> values;
    std::vector<std::string> gallery_ids;
    std::vector<std::string> probe_ids;
    Polarity polarity = Polarity::distance;
    Modality modality = Modality::shape;
    Normalization normalization = Normalization::raw;
    /// Extra `key=value` header tags carried through I/O (metric, config hash).
    std::map<std::string, std::string> tags;

    std::size_t rows() const { return gallery_ids.size(); }
    std::size_t cols() const { return probe_ids.size(); }
    double operator()(std::size_t g, std::size_t p) const { return values[g * cols() + p]; }
    double& operator()(std::size_t g, std::size_t p) { return values[g * cols() + p]; }

    void check_shape() const {
        if (values.size() != rows() * cols()) throw DataError("score matrix size does not match its id axes");
    }

    friend bool operator==(const ScoreMatrix&, const ScoreMatrix&) = default;
};

inline double dist_l1(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("L1 distance: length mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

/// -sum_m a[m] * b[m] / sqrt(lambda[m]): an eigenvalue-weighted negative inner
/// product. Lower means more similar; the value can be negative and is not a
/// metric.
inline double dist_mahalanobis(std::span<const double> a, std::span<const double> b, std::span<const double> lambda) {
    if (a.size() != b.size() || a.size() != lambda.size())
        throw DataError("weighted distance: length mismatch");
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!(lambda[i] > 0)) throw DataError("weighted distance: eigenvalues must be > 0");
        s += a[i] * b[i] / std::sqrt(lambda[i]);
    }
    return -s;
}

inline double dist_l1(const FeatureVector& a, const FeatureVector& b) { return dist_l1(a.coefficients, b.coefficients); }
inline double dist_mahalanobis(const FeatureVector& a, const FeatureVector& b, std::span<const double> lambda) {
    return dist_mahalanobis(a.coefficients, b.coefficients, lambda);
}

inline ScoreMatrix score_matrix(std::span<const FeatureVector> gallery, std::span<const FeatureVector> probes, Metric metric,
                                std::span<const double> lambda = {}) {
    if (gallery.empty() || probes.empty()) throw DataError("score matrix needs non-empty gallery and probe sets");
    auto unique = [](std::span<const FeatureVector> set, const char* axis) {
        std::set<std::string> seen;
        for (const auto& f : set)
            if (!seen.insert(f.subject_id).second)
                throw DataError(std::string("duplicate ") + axis + " id '" + f.subject_id + "'");
    };
    unique(gallery, "gallery");
    unique(probes, "probe");
    const std::size_t m = gallery[0].coefficients.size();
    for (const auto& f : gallery)
        if (f.coefficients.size() != m) throw DataError("feature vectors have inconsistent lengths");
    for (const auto& f : probes)
        if (f.coefficients.size() != m) throw DataError("feature vectors have inconsistent lengths");
    if (metric == Metric::mahalanobis && lambda.size() != m)
        throw DataError("weighted distance needs one eigenvalue per coefficient");

    ScoreMatrix out;
    out.polarity = Polarity::distance;
    out.normalization = Normalization::raw;
    out.modality = gallery[0].modality;
    out.tags["metric"] = std::string(to_string(metric));
    for (const auto& f : gallery) out.gallery_ids.push_back(f.subject_id);
    for (const auto& f : probes) out.probe_ids.push_back(f.subject_id);
    out.values.resize(gallery.size() * probes.size());
    parallel_for(gallery.size(), [&](std::size_t g) {
        for (std::size_t p = 0; p < probes.size(); ++p)
            out(g, p) = metric == Metric::l1 ? dist_l1(gallery[g], probes[p])
                                             : dist_mahalanobis(gallery[g], probes[p], lambda);
    });
    return out;
}

// ---------------------------------------------------------------------------
// ScoreMatrix CSV:
//   #polarity=distance;normalization=raw;modality=shape[;key=value...]
//   ,probe_0,probe_1,...
//   gallery_0,v,v,...

inline std::string serialize_scores(const ScoreMatrix& m) {
    m.check_shape();
    std::string out = "#polarity=" + std::string(to_string(m.polarity)) +
                      ";normalization=" + std::string(to_string(m.normalization)) +
                      ";modality=" + std::string(to_string(m.modality));
    for (const auto& [k, v] : m.tags) out += ";" + k + "=" + v;
    out += '\n';
    for (const auto& p : m.probe_ids) out += "," + p;
    out += '\n';
    for (std::size_t g = 0; g < m.rows(); ++g) {
        out += m.gallery_ids[g];
        for (std::size_t p = 0; p < m.cols(); ++p) {
            out += ',';
            textio::append(out, m(g, p));
        }
        out += '\n';
    }
    return out;
}

inline ScoreMatrix parse_scores(std::string_view text) {
    std::size_t line_no = 0, pos = 0;
    auto next_line = [&](std::string_view& line) {
        while (pos < text.size()) {
            auto end = text.find('\n', pos);
            if (end == std::string_view::npos) end = text.size();
            line = textio::trim(text.substr(pos, end - pos));
            pos = end + 1;
            ++line_no;
            if (!line.empty()) return true;
        }
        return false;
    };
    std::string_view line;
    if (!next_line(line) || line.empty() || line.front() != '#')
        throw ParseError("score matrix must start with a '#key=value;...' header", line_no);
    ScoreMatrix m;
    bool has_pol = false, has_norm = false, has_mod = false;
    try {
        for (auto kv : textio::split(line.substr(1), ';')) {
            auto eq = kv.find('=');
            if (eq == std::string_view::npos) throw ParseError("bad header tag '" + std::string(kv) + "'", line_no);
            auto key = kv.substr(0, eq), val = kv.substr(eq + 1);
            if (key == "polarity") {
                m.polarity = parse_polarity(val);
                has_pol = true;
            } else if (key == "normalization") {
                m.normalization = parse_normalization(val);
                has_norm = true;
            } else if (key == "modality") {
                m.modality = parse_modality(val);
                has_mod = true;
            } else {
                m.tags[std::string(key)] = std::string(val);
            }
        }
    } catch (const ParseError&) {
        throw;
    } catch (const DataError& e) {
        throw ParseError(e.what(), line_no);
    }
    if (!has_pol || !has_norm || !has_mod)
        throw ParseError("header must set polarity, normalization and modality", line_no);
    if (!next_line(line)) throw ParseError("missing probe id row", line_no + 1);
    auto probe_fields = textio::split(line, ',');
    if (probe_fields.size() < 2 || !probe_fields[0].empty()) throw ParseError("probe id row must start with an empty cell", line_no);
    for (std::size_t i = 1; i < probe_fields.size(); ++i) m.probe_ids.emplace_back(probe_fields[i]);
    while (next_line(line)) {
        auto f = textio::split(line, ',');
        if (f.size() != m.probe_ids.size() + 1) throw ParseError("gallery row has wrong number of cells", line_no);
        m.gallery_ids.emplace_back(f[0]);
        for (std::size_t i = 1; i < f.size(); ++i) {
            double v = 0;
            if (!textio::parse_double(f[i], v) || std::isnan(v)) throw ParseError("bad score '" + std::string(f[i]) + "'", line_no);
            m.values.push_back(v);
        }
    }
    if (m.gallery_ids.empty()) throw ParseError("score matrix has no gallery rows", line_no);
    return m;
}

}  // namespace rangeface
