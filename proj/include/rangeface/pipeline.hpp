#pragma once

// The experiment as a chain of file-to-file stages over one work directory:
//
//   data/      manifest.csv and scans/*.mesh, *.lm        (synth)
//   grids/     index.csv and one .grid per scan           (preprocess)
//   models/    shape.pca, color.pca, image.pca            (train)
//   scores/    <modality>_<metric>.csv                    (match)
//              score_<metric>_<normalization>_<rule>.csv  (fuse)
//   report/    per-curve CSVs and SVG figures             (eval)
//   results.csv                                           (eval)
//
// Every stage reads only files written by earlier stages, so running them one
// by one produces the same bytes as run_all.

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rangeface/config.hpp"
#include "rangeface/evalkit.hpp"
#include "rangeface/facegen.hpp"
#include "rangeface/fusion.hpp"
#include "rangeface/matcher.hpp"
#include "rangeface/normalize.hpp"
#include "rangeface/parallel.hpp"
#include "rangeface/subspace.hpp"
#include "rangeface/textio.hpp"

namespace rangeface::pipeline {

namespace fs = std::filesystem;

struct Layout {
    fs::path root;

    fs::path data() const { return root / "data"; }
    fs::path grids() const { return root / "grids"; }
    fs::path models() const { return root / "models"; }
    fs::path scores() const { return root / "scores"; }
    fs::path report() const { return root / "report"; }
    fs::path results() const { return root / "results.csv"; }
    fs::path config_record() const { return root / "config.ini"; }
};

/// Signature channels. "image" is image-level fusion: the standardized shape
/// and color vectors concatenated.
inline constexpr std::array<std::string_view, 3> channel_names{"shape", "color", "image"};
inline constexpr std::array<Metric, 2> metrics{Metric::l1, Metric::mahalanobis};
inline constexpr std::array<Normalization, 2> normalizations{Normalization::minmax, Normalization::zscore};
inline constexpr std::array<FusionRule, 4> rules{FusionRule::mean, FusionRule::min, FusionRule::max, FusionRule::product};

inline Modality channel_modality(std::string_view name) {
    if (name == "shape") return Modality::shape;
    if (name == "color") return Modality::color;
    return Modality::concat;
}

inline std::string stamp(const Config& c) { return "config=" + config_hash(c); }

inline std::string fused_name(Metric m, Normalization n, FusionRule r) {
    return "score_" + std::string(to_string(m)) + "_" + std::string(to_string(n)) + "_" + std::string(to_string(r));
}

inline void write_config_record(const Config& c, const Layout& l) {
    fs::create_directories(l.root);
    textio::write_file(l.config_record(), "# " + stamp(c) + "\n" + dump_config(c));
}

// ---------------------------------------------------------------------------
// synth

inline void run_synth(const Config& c, const Layout& l) {
    validate(c);
    write_config_record(c, l);
    DatasetOptions opts;
    opts.nominal_d = c.synth.nominal_d;
    opts.comment = stamp(c);
    synth_dataset(c.synth.subjects, c.synth.seed, gallery_capture(c), probe_capture(c), l.data(), opts);
}

// ---------------------------------------------------------------------------
// preprocess

struct GridEntry {
    std::string subject_id;
    PoseTag pose = PoseTag::gallery;
    std::string path;  // relative to the grids directory
};

inline std::vector<GridEntry> parse_grid_index(std::string_view text) {
    textio::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != "subject_id,pose,grid_path") throw ParseError("malformed grid index header", reader.line_no());
    std::vector<GridEntry> out;
    while (reader.next(line)) {
        const auto f = textio::split(line, ',');
        if (f.size() != 3) throw ParseError("grid index row needs 3 fields", reader.line_no());
        try {
            out.push_back({std::string(f[0]), parse_pose(f[1]), std::string(f[2])});
        } catch (const ParseError&) {
            throw;
        } catch (const DataError& e) {
            throw ParseError(e.what(), reader.line_no());
        }
    }
    return out;
}

/// Crop, align and resample every scan listed in the manifest.
inline void run_preprocess(const Config& c, const Layout& l) {
    validate(c);
    write_config_record(c, l);
    const Manifest manifest = parse_manifest(textio::read_file(l.data() / "manifest.csv"));
    if (manifest.entries.empty()) throw DataError("manifest lists no scans");
    fs::create_directories(l.grids());
    const std::string header = "# " + stamp(c) + "\n";
    std::vector<GridEntry> index(manifest.entries.size());
    parallel_for(manifest.entries.size(), [&](std::size_t i) {
        const ManifestEntry& e = manifest.entries[i];
        SubjectRecord rec;
        rec.subject_id = e.subject_id;
        rec.pose = e.pose;
        rec.mesh = parse_mesh(textio::read_file(l.data() / e.mesh_path));
        rec.landmarks = parse_landmarks(textio::read_file(l.data() / e.landmark_path));
        const RangeGrid g = normalize_scan(rec, c.grid, c.crop);
        index[i] = {e.subject_id, e.pose, e.subject_id + "_" + std::string(to_string(e.pose)) + ".grid"};
        textio::write_file(l.grids() / index[i].path, header + serialize_grid(g, c.grid.color_mode == ColorMode::rgb));
    });
    std::string text = header + "subject_id,pose,grid_path\n";
    for (const auto& e : index) text += e.subject_id + "," + std::string(to_string(e.pose)) + "," + e.path + "\n";
    textio::write_file(l.grids() / "index.csv", text);
}

// ---------------------------------------------------------------------------
// train / match

/// Signature vectors of one pose, per channel, in index order.
struct ChannelVectors {
    std::vector<std::string> ids;
    std::map<std::string, std::vector<std::vector<double>>, std::less<>> by_channel;
};

inline ChannelVectors load_vectors(const Config& c, const Layout& l, PoseTag pose) {
    const auto index = parse_grid_index(textio::read_file(l.grids() / "index.csv"));
    std::vector<GridEntry> picked;
    for (const auto& e : index)
        if (e.pose == pose) picked.push_back(e);
    if (picked.size() < 2) throw DataError("need at least 2 " + std::string(to_string(pose)) + " grids");
    ChannelVectors out;
    for (auto name : channel_names) out.by_channel[std::string(name)].resize(picked.size());
    parallel_for(picked.size(), [&](std::size_t i) {
        const RangeGrid g = parse_grid(textio::read_file(l.grids() / picked[i].path));
        GridVectors v = grid_to_vectors(g, c.grid.color_mode);
        out.by_channel.find("image")->second[i] = fuse_image(v.shape, v.color, c.image_standardize);
        out.by_channel.find("shape")->second[i] = std::move(v.shape);
        out.by_channel.find("color")->second[i] = std::move(v.color);
    });
    for (const auto& e : picked) out.ids.push_back(e.subject_id);
    return out;
}

/// Trains one subspace per channel on the gallery grids.
inline void run_train(const Config& c, const Layout& l) {
    validate(c);
    write_config_record(c, l);
    const ChannelVectors gallery = load_vectors(c, l, PoseTag::gallery);
    fs::create_directories(l.models());
    for (auto name : channel_names) {
        TrainOptions opts;
        opts.max_components = c.max_components;
        opts.eigenvalue_floor = c.eigenvalue_floor;
        opts.modality = channel_modality(name);
        const Subspace sub = train(gallery.by_channel.find(name)->second, opts);
        textio::write_file(l.models() / (std::string(name) + ".pca"), "# " + stamp(c) + "\n" + serialize_subspace(sub));
    }
}

inline std::vector<FeatureVector> project_all(const Subspace& sub, const std::vector<std::vector<double>>& vectors,
                                              const std::vector<std::string>& ids, PoseTag pose) {
    std::vector<FeatureVector> out(vectors.size());
    parallel_for(vectors.size(), [&](std::size_t i) {
        out[i] = project(sub, vectors[i]);
        out[i].subject_id = ids[i];
        out[i].pose = pose;
    });
    return out;
}

/// Gallery x probe score matrices for every channel and metric.
inline void run_match(const Config& c, const Layout& l) {
    validate(c);
    write_config_record(c, l);
    const ChannelVectors gallery = load_vectors(c, l, PoseTag::gallery);
    const ChannelVectors probes = load_vectors(c, l, PoseTag::probe);
    fs::create_directories(l.scores());
    for (auto name : channel_names) {
        const Subspace sub = parse_subspace(textio::read_file(l.models() / (std::string(name) + ".pca")));
        const auto g = project_all(sub, gallery.by_channel.find(name)->second, gallery.ids, PoseTag::gallery);
        const auto p = project_all(sub, probes.by_channel.find(name)->second, probes.ids, PoseTag::probe);
        for (Metric m : metrics) {
            ScoreMatrix s = score_matrix(g, p, m, sub.eigenvalues);
            s.tags["config"] = config_hash(c);
            textio::write_file(l.scores() / (std::string(name) + "_" + std::string(to_string(m)) + ".csv"),
                               serialize_scores(s));
        }
    }
}

// ---------------------------------------------------------------------------
// fuse

/// Score-level fusion of the shape and color matrices for every metric,
/// normalization and rule. Combinations the fusion guard refuses are listed in
/// scores/rejected.csv instead.
inline void run_fuse(const Config& c, const Layout& l) {
    validate(c);
    write_config_record(c, l);
    std::string rejected = "# " + stamp(c) + "\nconfiguration,reason\n";
    FuseOptions opts;
    opts.allow_signed_product = c.allow_signed_product;
    for (Metric m : metrics) {
        const std::string suffix = "_" + std::string(to_string(m)) + ".csv";
        const ScoreMatrix shape = parse_scores(textio::read_file(l.scores() / ("shape" + suffix)));
        const ScoreMatrix color = parse_scores(textio::read_file(l.scores() / ("color" + suffix)));
        for (Normalization n : normalizations) {
            const ScoreMatrix ns = normalize_scores(shape, n, c.scope);
            const ScoreMatrix nc = normalize_scores(color, n, c.scope);
            for (FusionRule r : rules) {
                const std::string name = fused_name(m, n, r);
                try {
                    ScoreMatrix f = fuse_scores(ns, nc, r, opts);
                    f.tags["config"] = config_hash(c);
                    textio::write_file(l.scores() / (name + ".csv"), serialize_scores(f));
                } catch (const FusionError& e) {
                    if (r != FusionRule::product) throw;
                    std::error_code ec;
                    fs::remove(l.scores() / (name + ".csv"), ec);
                    rejected += name + ",\"" + e.what() + "\"\n";
                }
            }
        }
    }
    textio::write_file(l.scores() / "rejected.csv", rejected);
}

// ---------------------------------------------------------------------------
// eval

struct ResultRow {
    std::string configuration;
    std::string metric;
    std::string modality;
    std::string normalization;
    std::string rule;
    std::string status = "ok";
    std::optional<double> rank1;
    std::optional<double> tar;
    std::optional<double> reference;
};

/// Rank-1 identification rates reported for the CAESAR experiments. They are
/// printed beside the synthetic results for comparison only.
inline std::optional<double> reference_rank1(std::string_view metric, std::string_view modality, std::string_view normalization,
                                         std::string_view rule) {
    const bool l1 = metric == "l1";
    if (metric != "l1" && metric != "mahalanobis") return std::nullopt;
    if (normalization == "raw" && rule.empty()) {
        if (modality == "color") return l1 ? 0.778 : 0.728;
        if (modality == "shape") return l1 ? 0.683 : 0.708;
        if (modality == "concat") return l1 ? 0.794 : 0.7738;
    }
    if (modality == "fused" && normalization == "zscore" && rule == "mean") return l1 ? 0.82 : 0.81;
    return std::nullopt;
}

inline ResultRow evaluate(const ScoreMatrix& m, std::string configuration, double far) {
    ResultRow row;
    row.configuration = std::move(configuration);
    if (auto it = m.tags.find("metric"); it != m.tags.end()) row.metric = it->second;
    if (auto it = m.tags.find("rule"); it != m.tags.end()) row.rule = it->second;
    row.modality = std::string(to_string(m.modality));
    row.normalization = std::string(to_string(m.normalization));
    row.rank1 = cmc(m).rank1();
    row.tar = tar_at_far(roc(m), far);
    row.reference = reference_rank1(row.metric, row.modality, row.normalization, row.rule);
    return row;
}

inline std::string serialize_results(const std::vector<ResultRow>& rows, double far, std::string_view comment) {
    std::string out;
    if (!comment.empty()) out += "# " + std::string(comment) + "\n";
    out += "configuration,metric,modality,normalization,rule,status,rank1,tar_at_far_" + textio::fmt(far) +
           ",\"paper (CAESAR, not reproducible)\"\n";
    auto opt = [&out](const std::optional<double>& v) {
        if (v) textio::append(out, *v);
    };
    for (const auto& r : rows) {
        out += r.configuration + "," + r.metric + "," + r.modality + "," + r.normalization + "," + r.rule + "," + r.status + ",";
        opt(r.rank1);
        out += ',';
        opt(r.tar);
        out += ',';
        opt(r.reference);
        out += '\n';
    }
    return out;
}

/// Evaluates explicit score files and writes results.csv plus one CMC and one
/// ROC figure into `out_dir`.
inline void evaluate_files(const std::vector<fs::path>& files, const fs::path& out_dir, double far, std::string_view comment) {
    if (files.empty()) throw EvalError("no score files to evaluate");
    std::vector<ResultRow> rows;
    std::vector<Curve> cmcs, rocs;
    std::vector<std::string> labels;
    for (const auto& f : files) {
        const ScoreMatrix m = parse_scores(textio::read_file(f));
        rows.push_back(evaluate(m, f.stem().string(), far));
        cmcs.emplace_back(cmc(m));
        rocs.emplace_back(roc(m));
        labels.push_back(f.stem().string());
    }
    fs::create_directories(out_dir);
    textio::write_file(out_dir / "results.csv", serialize_results(rows, far, comment));
    ReportOptions opts;
    opts.comment = std::string(comment);
    opts.title = "Identification (CMC)";
    emit_report(cmcs, labels, out_dir, "cmc", opts);
    opts.title = "Verification (ROC)";
    emit_report(rocs, labels, out_dir, "roc", opts);
}

/// Results table for the whole experiment grid plus the comparison figures.
inline void run_eval(const Config& c, const Layout& l) {
    validate(c);
    write_config_record(c, l);
    const std::string comment = stamp(c);
    std::map<std::string, ScoreMatrix> matrices;
    auto load = [&](const std::string& name) -> const ScoreMatrix& {
        auto it = matrices.find(name);
        if (it == matrices.end())
            it = matrices.emplace(name, parse_scores(textio::read_file(l.scores() / (name + ".csv")))).first;
        return it->second;
    };
    std::vector<ResultRow> rows;
    for (Metric m : metrics)
        for (auto name : channel_names) {
            const std::string cfg = std::string(name) + "_" + std::string(to_string(m));
            rows.push_back(evaluate(load(cfg), cfg, c.far_target));
        }
    const std::string rejected_text = textio::read_file(l.scores() / "rejected.csv");
    for (Metric m : metrics)
        for (Normalization n : normalizations)
            for (FusionRule r : rules) {
                const std::string name = fused_name(m, n, r);
                if (rejected_text.find("\n" + name + ",") != std::string::npos) {
                    ResultRow row;
                    row.configuration = name;
                    row.metric = std::string(to_string(m));
                    row.modality = "fused";
                    row.normalization = std::string(to_string(n));
                    row.rule = std::string(to_string(r));
                    row.status = "rejected: sign-ambiguous product on zscore";
                    rows.push_back(row);
                    continue;
                }
                rows.push_back(evaluate(load(name), name, c.far_target));
            }
    textio::write_file(l.results(), serialize_results(rows, c.far_target, comment));

    fs::create_directories(l.report());
    ReportOptions opts;
    opts.comment = comment;
    opts.max_rank = c.chart_max_rank;
    auto figure = [&](std::string_view fig, std::string title, const std::vector<std::pair<std::string, std::string>>& picks,
                      bool as_roc) {
        std::vector<Curve> curves;
        std::vector<std::string> labels;
        for (const auto& [name, label] : picks) {
            if (!fs::exists(l.scores() / (name + ".csv"))) continue;
            const ScoreMatrix& m = load(name);
            if (as_roc) curves.emplace_back(roc(m));
            else curves.emplace_back(cmc(m));
            labels.push_back(label);
        }
        opts.title = std::move(title);
        emit_report(curves, labels, l.report(), fig, opts);
    };
    for (Metric m : metrics) {
        const std::string ms(to_string(m));
        const std::string pretty = m == Metric::l1 ? "L1" : "Mahalanobis";
        figure("cmc_" + ms, "CMC, " + pretty + " classifier",
               {{"color_" + ms, "color map"},
                {"shape_" + ms, "3D shape"},
                {"image_" + ms, "image-level fusion"},
                {fused_name(m, Normalization::zscore, FusionRule::mean), "score-level fusion (zscore, mean)"}},
               false);
    }
    std::vector<std::pair<std::string, std::string>> rule_picks;
    for (Normalization n : normalizations)
        for (FusionRule r : rules)
            rule_picks.emplace_back(fused_name(Metric::l1, n, r),
                                    std::string(to_string(n)) + " " + std::string(to_string(r)));
    figure("cmc_fusion_rules", "CMC by fusion rule and normalization, L1", rule_picks, false);
    const std::vector<std::pair<std::string, std::string>> compare{
        {"image_l1", "image-level, L1"},
        {"image_mahalanobis", "image-level, Mahalanobis"},
        {fused_name(Metric::l1, Normalization::zscore, FusionRule::mean), "score-level, L1"},
        {fused_name(Metric::mahalanobis, Normalization::zscore, FusionRule::mean), "score-level, Mahalanobis"}};
    figure("cmc_image_vs_score", "CMC, image-level vs score-level fusion", compare, false);
    figure("roc_image_vs_score", "ROC, image-level vs score-level fusion", compare, true);
}

inline void run_all(const Config& c, const Layout& l) {
    run_synth(c, l);
    run_preprocess(c, l);
    run_train(c, l);
    run_match(c, l);
    run_fuse(c, l);
    run_eval(c, l);
}

}  // namespace rangeface::pipeline
