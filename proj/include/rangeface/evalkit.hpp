#pragma once

// Identification (CMC) and verification (ROC) metrics over a score matrix,
// plus CSV and SVG report output.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rangeface/error.hpp"
#include "rangeface/matcher.hpp"
#include "rangeface/textio.hpp"

namespace rangeface {

struct CmcCurve {
    /// rates[r - 1] is the fraction of probes whose true match has rank <= r.
    std::vector<double> rates;
    /// Rank of the true match for each probe, in probe order.
    std::vector<std::size_t> probe_ranks;
    std::size_t gallery_size = 0;
    std::size_t probe_count = 0;

    double rank1() const { return rates.empty() ? 0.0 : rates.front(); }
    friend bool operator==(const CmcCurve&, const CmcCurve&) = default;
};

struct RocPoint {
    double threshold = 0;
    double far = 0;
    double tar = 0;
    friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct RocCurve {
    std::vector<RocPoint> points;
    std::size_t genuine_count = 0;
    std::size_t impostor_count = 0;
};

inline bool better(Polarity p, double a, double b) { return p == Polarity::distance ? a < b : a > b; }

/// A probe's rank is 1 + the number of gallery entries scoring strictly
/// better than its true match, so ties never count against the true match.
inline CmcCurve cmc(const ScoreMatrix& m) {
    m.check_shape();
    if (m.rows() == 0 || m.cols() == 0) throw EvalError("CMC needs a non-empty score matrix");
    CmcCurve c;
    c.gallery_size = m.rows();
    c.probe_count = m.cols();
    c.probe_ranks.resize(m.cols());
    for (std::size_t p = 0; p < m.cols(); ++p) {
        std::size_t match = m.rows();
        for (std::size_t g = 0; g < m.rows(); ++g) {
            if (m.gallery_ids[g] != m.probe_ids[p]) continue;
            if (match != m.rows()) throw EvalError("probe '" + m.probe_ids[p] + "' matches several gallery entries");
            match = g;
        }
        if (match == m.rows()) throw EvalError("probe subject '" + m.probe_ids[p] + "' absent from gallery");
        const double truth = m(match, p);
        std::size_t rank = 1;
        for (std::size_t g = 0; g < m.rows(); ++g)
            if (better(m.polarity, m(g, p), truth)) ++rank;
        c.probe_ranks[p] = rank;
    }
    std::vector<std::size_t> hist(m.rows() + 1, 0);
    for (auto r : c.probe_ranks) ++hist[r];
    c.rates.resize(m.rows());
    std::size_t cumulative = 0;
    for (std::size_t r = 1; r <= m.rows(); ++r) {
        cumulative += hist[r];
        c.rates[r - 1] = static_cast<double>(cumulative) / static_cast<double>(m.cols());
    }
    return c;
}

/// Genuine pairs share a subject id; every other cell is an impostor pair.
/// Thresholds sweep the distinct scores from strictest to most permissive
/// (a distance is accepted when <= threshold, a similarity when >=). The curve
/// starts at an accept-nothing point (threshold -inf, or +inf for similarities)
/// and consecutive duplicate (FAR, TAR) points keep the strictest threshold.
inline RocCurve roc(const ScoreMatrix& m) {
    m.check_shape();
    std::vector<double> genuine, impostor;
    for (std::size_t g = 0; g < m.rows(); ++g)
        for (std::size_t p = 0; p < m.cols(); ++p)
            (m.gallery_ids[g] == m.probe_ids[p] ? genuine : impostor).push_back(m(g, p));
    if (genuine.empty()) throw EvalError("ROC needs at least one genuine pair");
    if (impostor.empty()) throw EvalError("ROC needs at least one impostor pair");

    // Work in "badness" space where lower is always better.
    const double sign = m.polarity == Polarity::distance ? 1.0 : -1.0;
    for (auto& v : genuine) v *= sign;
    for (auto& v : impostor) v *= sign;
    std::sort(genuine.begin(), genuine.end());
    std::sort(impostor.begin(), impostor.end());
    std::vector<double> thresholds;
    thresholds.reserve(genuine.size() + impostor.size());
    std::merge(genuine.begin(), genuine.end(), impostor.begin(), impostor.end(), std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    RocCurve c;
    c.genuine_count = genuine.size();
    c.impostor_count = impostor.size();
    const double ng = static_cast<double>(genuine.size()), ni = static_cast<double>(impostor.size());
    c.points.push_back({-sign * std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t gi = 0, ii = 0;
    for (double t : thresholds) {
        while (gi < genuine.size() && genuine[gi] <= t) ++gi;
        while (ii < impostor.size() && impostor[ii] <= t) ++ii;
        const RocPoint pt{sign * t, static_cast<double>(ii) / ni, static_cast<double>(gi) / ng};
        if (pt.far == c.points.back().far && pt.tar == c.points.back().tar) continue;
        c.points.push_back(pt);
    }
    return c;
}

/// FAR and TAR when accepting every pair at least as good as `threshold`.
inline RocPoint operating_point(const ScoreMatrix& m, double threshold) {
    m.check_shape();
    std::size_t ng = 0, ni = 0, ag = 0, ai = 0;
    for (std::size_t g = 0; g < m.rows(); ++g)
        for (std::size_t p = 0; p < m.cols(); ++p) {
            const bool accept = m.polarity == Polarity::distance ? m(g, p) <= threshold : m(g, p) >= threshold;
            if (m.gallery_ids[g] == m.probe_ids[p]) {
                ++ng;
                ag += accept;
            } else {
                ++ni;
                ai += accept;
            }
        }
    if (ng == 0 || ni == 0) throw EvalError("operating point needs genuine and impostor pairs");
    return {threshold, static_cast<double>(ai) / static_cast<double>(ni), static_cast<double>(ag) / static_cast<double>(ng)};
}

/// Highest verification rate among operating points with FAR <= far.
inline double tar_at_far(const RocCurve& c, double far) {
    double best = 0;
    for (const auto& p : c.points)
        if (p.far <= far) best = std::max(best, p.tar);
    return best;
}

// ---------------------------------------------------------------------------
// Reports

using Curve = std::variant<CmcCurve, RocCurve>;

inline std::string serialize_cmc_csv(const CmcCurve& c, std::string_view comment = {}) {
    std::string out;
    if (!comment.empty()) out += "# " + std::string(comment) + "\n";
    out += "rank,rate\n";
    for (std::size_t r = 0; r < c.rates.size(); ++r) {
        out += std::to_string(r + 1) + ",";
        textio::append(out, c.rates[r]);
        out += '\n';
    }
    return out;
}

inline std::string serialize_roc_csv(const RocCurve& c, std::string_view comment = {}) {
    std::string out;
    if (!comment.empty()) out += "# " + std::string(comment) + "\n";
    out += "threshold,far,tar\n";
    for (const auto& p : c.points) {
        textio::append(out, p.threshold);
        out += ',';
        textio::append(out, p.far);
        out += ',';
        textio::append(out, p.tar);
        out += '\n';
    }
    return out;
}

inline std::string slug(std::string_view label) {
    std::string s;
    for (char ch : label) {
        if ((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9')) s += ch;
        else if (ch >= 'A' && ch <= 'Z') s += static_cast<char>(ch - 'A' + 'a');
        else if (!s.empty() && s.back() != '_') s += '_';
    }
    while (!s.empty() && s.back() == '_') s.pop_back();
    return s.empty() ? "curve" : s;
}

namespace detail {

inline std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> xy;
};

/// Static line chart. x is linear unless `log_x`, where values are clamped to
/// [x_min, x_max] before taking log10.
inline std::string svg_chart(const std::vector<Series>& series, std::string_view title, std::string_view x_label,
                             std::string_view y_label, double x_min, double x_max, bool log_x, std::string_view comment) {
    constexpr double W = 640, H = 480, L = 70, R = 190, T = 40, B = 60;
    const double pw = W - L - R, ph = H - T - B;
    auto tx = [&](double x) {
        if (log_x) {
            x = std::clamp(x, x_min, x_max);
            return L + pw * (std::log10(x) - std::log10(x_min)) / (std::log10(x_max) - std::log10(x_min));
        }
        return L + pw * (std::clamp(x, x_min, x_max) - x_min) / (x_max - x_min);
    };
    auto ty = [&](double y) { return T + ph * (1.0 - std::clamp(y, 0.0, 1.0)); };
    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    if (!comment.empty()) s += "<!-- " + xml_escape(comment) + " -->\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
    s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
    s += "<text x=\"" + fixed(L + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         xml_escape(title) + "</text>\n";
    s += "<rect x=\"" + fixed(L) + "\" y=\"" + fixed(T) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        s += "<line x1=\"" + fixed(L) + "\" y1=\"" + fixed(ty(v)) + "\" x2=\"" + fixed(L + pw) + "\" y2=\"" + fixed(ty(v)) +
             "\" stroke=\"#dddddd\"/>\n";
        s += "<text x=\"" + fixed(L - 6) + "\" y=\"" + fixed(ty(v) + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fixed(v, 1) + "</text>\n";
    }
    std::vector<double> xticks;
    if (log_x) {
        for (double v = x_min; v <= x_max * 1.0000001; v *= 10) xticks.push_back(v);
    } else {
        for (int i = 0; i <= 5; ++i) xticks.push_back(x_min + (x_max - x_min) * i / 5.0);
    }
    for (double v : xticks) {
        const std::string label = log_x ? textio::fmt(v) : fixed(v, x_max - x_min >= 5 ? 0 : 2);
        s += "<text x=\"" + fixed(tx(v)) + "\" y=\"" + fixed(T + ph + 16) +
             "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + label + "</text>\n";
    }
    s += "<text x=\"" + fixed(L + pw / 2) + "\" y=\"" + fixed(H - 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + xml_escape(x_label) + "</text>\n";
    s += "<text x=\"18\" y=\"" + fixed(T + ph / 2) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 " +
         fixed(T + ph / 2) + ")\">" + xml_escape(y_label) + "</text>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = palette[i % std::size(palette)];
        std::string pts;
        for (const auto& [x, y] : series[i].xy) {
            if (!pts.empty()) pts += ' ';
            pts += fixed(tx(x)) + "," + fixed(ty(y));
        }
        s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
        const double ly = T + 14 + 18.0 * static_cast<double>(i);
        s += "<line x1=\"" + fixed(L + pw + 12) + "\" y1=\"" + fixed(ly) + "\" x2=\"" + fixed(L + pw + 34) + "\" y2=\"" +
             fixed(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + fixed(L + pw + 40) + "\" y=\"" + fixed(ly + 4) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + xml_escape(series[i].label) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace detail

struct ReportOptions {
    std::string title;
    /// Written as a comment into every emitted file.
    std::string comment;
    /// Largest rank drawn on CMC charts; 0 draws all ranks.
    std::size_t max_rank = 0;
};

/// Writes `<figure>_<label>.csv` per curve and `<figure>.svg` with every curve
/// on one chart. All curves of a figure must be of the same kind.
inline std::vector<std::filesystem::path> emit_report(std::span<const Curve> curves, std::span<const std::string> labels,
                                                      const std::filesystem::path& out_dir, std::string_view figure,
                                                      const ReportOptions& opts = {}) {
    if (curves.empty()) throw EvalError("report needs at least one curve");
    if (labels.size() != curves.size()) throw EvalError("report needs one label per curve");
    const bool is_cmc = std::holds_alternative<CmcCurve>(curves[0]);
    for (const auto& c : curves)
        if (std::holds_alternative<CmcCurve>(c) != is_cmc) throw EvalError("a figure cannot mix CMC and ROC curves");

    std::vector<std::filesystem::path> written;
    std::vector<detail::Series> series;
    std::size_t max_rank = 1;
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto path = out_dir / (std::string(figure) + "_" + slug(labels[i]) + ".csv");
        detail::Series s{labels[i], {}};
        if (is_cmc) {
            const auto& c = std::get<CmcCurve>(curves[i]);
            textio::write_file(path, serialize_cmc_csv(c, opts.comment));
            const std::size_t limit = opts.max_rank ? std::min(opts.max_rank, c.rates.size()) : c.rates.size();
            for (std::size_t r = 0; r < limit; ++r) s.xy.emplace_back(static_cast<double>(r + 1), c.rates[r]);
            max_rank = std::max(max_rank, limit);
        } else {
            const auto& c = std::get<RocCurve>(curves[i]);
            textio::write_file(path, serialize_roc_csv(c, opts.comment));
            for (const auto& p : c.points) s.xy.emplace_back(p.far, p.tar);
        }
        written.push_back(path);
        series.push_back(std::move(s));
    }
    const std::string title = opts.title.empty() ? std::string(figure) : opts.title;
    const std::string svg =
        is_cmc ? detail::svg_chart(series, title, "rank", "cumulative match rate", 1.0,
                                   static_cast<double>(std::max<std::size_t>(max_rank, 2)), false, opts.comment)
               : detail::svg_chart(series, title, "false accept rate", "verification rate (1 - FRR)", 1e-3, 1.0, true,
                                   opts.comment);
    const auto svg_path = out_dir / (std::string(figure) + ".svg");
    textio::write_file(svg_path, svg);
    written.push_back(svg_path);
    return written;
}

}  // namespace rangeface
