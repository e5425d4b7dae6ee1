#pragma once

// Synthetic face scans with ground-truth landmarks and known capture motion.
//
// A subject is a height field z = f(x, y) sampled on a regular lattice in the
// canonical frame (origin between the infraorbitale landmarks, +x toward the
// subject's left, +y up, +z toward the scanner). The surface is an ellipsoidal
// head plus a neck and a flat backdrop, with Gaussian bumps for the nose, brow
// ridges, cheeks and chin. All lengths inside SubjectParams are in units of the
// inter-infraorbitale distance d except `d` itself.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "rangeface/error.hpp"
#include "rangeface/geometry.hpp"
#include "rangeface/mesh.hpp"
#include "rangeface/parallel.hpp"
#include "rangeface/random.hpp"
#include "rangeface/textio.hpp"

namespace rangeface {

struct Bump {
    double amplitude = 0;
    double cx = 0, cy = 0;  // for mirrored pairs cx is the offset of the left member
    double sx = 1, sy = 1;

    double operator()(double u, double v) const {
        const double du = (u - cx) / sx, dv = (v - cy) / sy;
        return amplitude * std::exp(-0.5 * (du * du + dv * dv));
    }
};

struct ColorBlob {
    double cx = 0, cy = 0, radius = 0.2;
    Color delta;
};

struct SubjectParams {
    std::uint64_t seed = 0;
    double d = 60.0;

    // Head ellipsoid semi-axes and vertical center.
    double head_a = 2.0, head_b = 2.6, head_c = 1.2, head_y0 = -0.2;
    double neck_half_width = 0.85, neck_depth = 0.55;
    double backdrop_z = -1.5;

    Bump nose{0.45, 0.0, -0.35, 0.2, 0.38};
    Bump brow{0.12, 0.55, 0.45, 0.3, 0.13};  // mirrored to -cx
    Bump cheek{0.1, 0.72, -0.5, 0.32, 0.28};  // mirrored to -cx
    Bump chin{0.16, 0.0, -1.35, 0.32, 0.2};

    Color skin{0.8, 0.64, 0.52};
    Color lip_delta{0.12, -0.1, -0.08};
    Color brow_delta{-0.25, -0.22, -0.2};
    Color cheek_delta{0.06, -0.02, -0.02};
    std::vector<ColorBlob> marks;

    // Lattice extent and spacing.
    double x_half_extent = 2.2, y_min = -4.0, y_max = 2.5, lattice_step = 0.06;
};

/// Draws a random but anatomically plausible subject.
inline SubjectParams random_subject_params(std::uint64_t seed, double nominal_d = 60.0) {
    Rng rng(splitmix64(seed));
    SubjectParams p;
    p.seed = seed;
    p.d = nominal_d * rng.uniform(0.9, 1.1);
    p.head_a = rng.uniform(1.85, 2.15);
    p.head_b = rng.uniform(2.45, 2.75);
    p.head_c = rng.uniform(1.0, 1.4);
    p.head_y0 = rng.uniform(-0.3, -0.1);
    p.nose = {rng.uniform(0.3, 0.6), 0.0, rng.uniform(-0.45, -0.25), rng.uniform(0.14, 0.26), rng.uniform(0.28, 0.46)};
    p.brow = {rng.uniform(0.05, 0.22), rng.uniform(0.45, 0.65), rng.uniform(0.35, 0.55), rng.uniform(0.22, 0.36),
              rng.uniform(0.09, 0.17)};
    p.cheek = {rng.uniform(0.03, 0.2), rng.uniform(0.6, 0.85), rng.uniform(-0.62, -0.35), rng.uniform(0.24, 0.4),
               rng.uniform(0.2, 0.36)};
    p.chin = {rng.uniform(0.08, 0.26), 0.0, rng.uniform(-1.45, -1.25), rng.uniform(0.24, 0.42), rng.uniform(0.14, 0.26)};

    const double tone = rng.uniform(0.3, 0.9);
    p.skin = {tone, tone * rng.uniform(0.72, 0.86), tone * rng.uniform(0.58, 0.74)};
    p.lip_delta = {rng.uniform(0.04, 0.2), -rng.uniform(0.03, 0.15), -rng.uniform(0.03, 0.15)};
    const double brow_dark = rng.uniform(0.05, 0.35);
    p.brow_delta = {-brow_dark, -brow_dark * 0.9, -brow_dark * 0.85};
    p.cheek_delta = {rng.uniform(0.0, 0.12), -rng.uniform(0.0, 0.04), -rng.uniform(0.0, 0.04)};
    const int n_marks = 4 + static_cast<int>(rng.bits() % 5);
    for (int i = 0; i < n_marks; ++i) {
        ColorBlob b;
        b.cx = rng.uniform(-1.1, 1.1);
        b.cy = rng.uniform(-1.3, 1.3);
        b.radius = rng.uniform(0.1, 0.35);
        const double l = rng.uniform(-0.15, 0.15);
        b.delta = {l, l * rng.uniform(0.7, 1.0), l * rng.uniform(0.6, 1.0)};
        p.marks.push_back(b);
    }
    return p;
}

/// Surface height and color of a subject at canonical (x, y), in length units.
class SubjectSurface {
public:
    explicit SubjectSurface(const SubjectParams& p) : p_(p) {}

    double height(double x, double y) const {
        const double u = x / p_.d, v = y / p_.d;
        return p_.d * (base(u, v) + bumps(u, v));
    }

    Color color(double x, double y) const {
        const double u = x / p_.d, v = y / p_.d;
        Color c = p_.skin;
        auto add = [&c](const Color& delta, double w) {
            c.r += w * delta.r;
            c.g += w * delta.g;
            c.b += w * delta.b;
        };
        auto gauss = [](double du, double dv, double sx, double sy) {
            return std::exp(-0.5 * ((du / sx) * (du / sx) + (dv / sy) * (dv / sy)));
        };
        add(p_.lip_delta, gauss(u, v + 0.95, 0.32, 0.08));
        add(p_.brow_delta, gauss(std::abs(u) - p_.brow.cx, v - p_.brow.cy - 0.05, 0.26, 0.05));
        add(p_.cheek_delta, gauss(std::abs(u) - p_.cheek.cx, v - p_.cheek.cy, 0.25, 0.2));
        for (const auto& m : p_.marks) add(m.delta, gauss(u - m.cx, v - m.cy, m.radius, m.radius));
        return {clamp01(c.r), clamp01(c.g), clamp01(c.b)};
    }

    const SubjectParams& params() const { return p_; }

private:
    static double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

    double base(double u, double v) const {
        double z = p_.backdrop_z;
        const double du = u / p_.head_a, dv = (v - p_.head_y0) / p_.head_b;
        const double r2 = du * du + dv * dv;
        if (r2 < 1.0) z = std::max(z, p_.head_c * std::sqrt(1.0 - r2));
        if (std::abs(u) < p_.neck_half_width && v < p_.head_y0) {
            const double w = u / p_.neck_half_width;
            z = std::max(z, p_.neck_depth * std::sqrt(1.0 - w * w));
        }
        return z;
    }

    double bumps(double u, double v) const {
        const double au = std::abs(u);
        return p_.nose(u, v) + p_.brow(au, v) + p_.cheek(au, v) + p_.chin(u, v);
    }

    SubjectParams p_;
};

/// A generated subject in the canonical frame. The mesh vertices are the
/// lattice points in row-major order (row 0 at y_min).
struct SubjectScan {
    FaceMesh mesh;
    LandmarkSet landmarks;
    std::size_t lattice_rows = 0, lattice_cols = 0;
};

namespace detail {

/// Triangulates the surviving lattice points. `keep_rows`/`keep_cols` list the
/// retained lattice lines; `alive(r, c)` says whether a vertex survived void
/// removal; `index(r, c)` returns its output index. Each cell with four live
/// corners yields two triangles, a cell with three yields one.
template <class Alive, class Index>
std::vector<Triangle> triangulate_lattice(const std::vector<std::size_t>& keep_rows,
                                          const std::vector<std::size_t>& keep_cols, Alive alive, Index index) {
    std::vector<Triangle> tris;
    for (std::size_t ri = 0; ri + 1 < keep_rows.size(); ++ri) {
        for (std::size_t ci = 0; ci + 1 < keep_cols.size(); ++ci) {
            const std::size_t r0 = keep_rows[ri], r1 = keep_rows[ri + 1];
            const std::size_t c0 = keep_cols[ci], c1 = keep_cols[ci + 1];
            const bool a = alive(r0, c0), b = alive(r0, c1), c = alive(r1, c0), e = alive(r1, c1);
            const int n = a + b + c + e;
            if (n == 4) {
                tris.push_back({index(r0, c0), index(r0, c1), index(r1, c1)});
                tris.push_back({index(r0, c0), index(r1, c1), index(r1, c0)});
            } else if (n == 3) {
                Triangle t{};
                std::size_t k = 0;
                if (a) t[k++] = index(r0, c0);
                if (b) t[k++] = index(r0, c1);
                if (e) t[k++] = index(r1, c1);
                if (c) t[k++] = index(r1, c0);
                tris.push_back(t);
            }
        }
    }
    return tris;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

}  // namespace detail

/// Builds the canonical-frame lattice mesh and analytic landmarks.
inline SubjectScan synth_subject(const SubjectParams& params) {
    if (!(params.d > 0) || !(params.lattice_step > 0)) throw GenerationError("subject d and lattice step must be > 0");
    const SubjectSurface surface(params);
    const double d = params.d;
    SubjectScan scan;
    scan.lattice_cols = static_cast<std::size_t>(std::llround(2 * params.x_half_extent / params.lattice_step)) + 1;
    scan.lattice_rows = static_cast<std::size_t>(std::llround((params.y_max - params.y_min) / params.lattice_step)) + 1;
    const double sx = 2 * params.x_half_extent / static_cast<double>(scan.lattice_cols - 1);
    const double sy = (params.y_max - params.y_min) / static_cast<double>(scan.lattice_rows - 1);

    scan.mesh.frame = FrameTag::canonical;
    scan.mesh.vertices.reserve(scan.lattice_rows * scan.lattice_cols);
    for (std::size_t r = 0; r < scan.lattice_rows; ++r) {
        const double y = d * (params.y_min + sy * static_cast<double>(r));
        for (std::size_t c = 0; c < scan.lattice_cols; ++c) {
            const double x = d * (-params.x_half_extent + sx * static_cast<double>(c));
            scan.mesh.vertices.push_back({{x, y, surface.height(x, y)}, surface.color(x, y)});
        }
    }
    const std::size_t cols = scan.lattice_cols;
    scan.mesh.triangles = detail::triangulate_lattice(
        detail::all_indices(scan.lattice_rows), detail::all_indices(cols), [](std::size_t, std::size_t) { return true; },
        [cols](std::size_t r, std::size_t c) { return static_cast<std::uint32_t>(r * cols + c); });

    auto on_surface = [&](double u, double v) { return Vec3{u * d, v * d, surface.height(u * d, v * d)}; };
    scan.landmarks.set(LandmarkId::sellion, on_surface(0.0, 0.45));
    scan.landmarks.set(LandmarkId::rt_infraorbitale, on_surface(-0.5, 0.0));
    scan.landmarks.set(LandmarkId::lt_infraorbitale, on_surface(0.5, 0.0));
    scan.landmarks.set(LandmarkId::supramenton, on_surface(0.0, -1.3));
    scan.landmarks.set(LandmarkId::rt_tragion, Vec3{-2.0 * d, 0.0, -1.0 * d});
    scan.landmarks.set(LandmarkId::rt_clavicale, Vec3{-1.0 * d, -3.6 * d, -0.5 * d});
    return scan;
}

struct CaptureParams {
    std::uint64_t seed = 0;
    /// Per-axis rotation angles are drawn uniformly from [-max, max] degrees.
    double max_rotation_deg = 0.0;
    /// Per-axis translation drawn uniformly from [-max, max] (length units).
    double max_translation = 0.0;
    /// When set, used instead of the random rigid motion.
    std::optional<RigidTransform> transform;
    /// Fraction of lattice vertices kept, in (0, 1].
    double subsample_fraction = 1.0;
    int void_count = 0;
    double void_radius = 0.15;  // units of d
    double depth_noise = 0.0;  // sigma, units of d
    double color_noise = 0.0;  // sigma per channel
    double color_gain = 0.0;  // sigma of a per-capture brightness factor
    double landmark_noise = 0.0;  // sigma per coordinate, units of d
    /// Output positions are rounded to multiples of this (length units); 0 disables.
    double position_quantum = 0.0;
    /// Output colors are rounded to multiples of this; 0 disables.
    double color_quantum = 0.0;
};

struct CaptureResult {
    SubjectRecord record;
    /// Maps canonical-frame subject coordinates to the captured body frame.
    RigidTransform transform;
};

inline constexpr std::size_t min_capture_vertices = 500;

/// Simulates one scan of a subject: lattice subsampling, void disks, noise,
/// then a rigid motion applied to mesh and landmarks alike.
inline CaptureResult synth_capture(const SubjectScan& subject, const std::string& subject_id, PoseTag pose,
                                   const CaptureParams& cap) {
    if (!(cap.subsample_fraction > 0.0 && cap.subsample_fraction <= 1.0))
        throw GenerationError("subsample fraction must lie in (0, 1]");
    const std::size_t rows = subject.lattice_rows, cols = subject.lattice_cols;
    if (rows * cols != subject.mesh.vertices.size()) throw GenerationError("subject mesh is not a full lattice");
    Rng rng(splitmix64(cap.seed));

    const double d = distance(subject.landmarks.at(LandmarkId::rt_infraorbitale),
                              subject.landmarks.at(LandmarkId::lt_infraorbitale));

    RigidTransform motion;
    if (cap.transform) {
        motion = *cap.transform;
    } else {
        const double k = cap.max_rotation_deg * std::numbers::pi / 180.0;
        const double ax = rng.uniform(-k, k), ay = rng.uniform(-k, k), az = rng.uniform(-k, k);
        motion.rotation = rotation_xyz(ax, ay, az);
        const double t = cap.max_translation;
        motion.translation = {rng.uniform(-t, t), rng.uniform(-t, t), rng.uniform(-t, t)};
    }

    // Evenly spaced lattice lines so that the kept vertex fraction is ~f.
    auto pick = [](std::size_t n, double frac) {
        const std::size_t count =
            std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(static_cast<double>(n) * frac)), 2, n);
        std::vector<std::size_t> keep(count);
        for (std::size_t i = 0; i < count; ++i)
            keep[i] = static_cast<std::size_t>(
                std::llround(static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(count - 1)));
        return keep;
    };
    const double line_frac = std::sqrt(cap.subsample_fraction);
    const auto keep_rows = cap.subsample_fraction < 1.0 ? pick(rows, line_frac) : detail::all_indices(rows);
    const auto keep_cols = cap.subsample_fraction < 1.0 ? pick(cols, line_frac) : detail::all_indices(cols);

    struct Disk {
        double x, y, r2;
    };
    std::vector<Disk> disks;
    for (int i = 0; i < cap.void_count; ++i) {
        const double r = cap.void_radius * d;
        disks.push_back({rng.uniform(-1.0, 1.0) * d, rng.uniform(-1.2, 1.2) * d, r * r});
    }

    constexpr std::uint32_t dead = 0xffffffffu;
    std::vector<std::uint32_t> new_index(rows * cols, dead);
    FaceMesh out;
    out.frame = FrameTag::body;
    for (auto r : keep_rows) {
        for (auto c : keep_cols) {
            const Vertex& v = subject.mesh.vertices[r * cols + c];
            bool in_void = false;
            for (const auto& disk : disks) {
                const double dx = v.position.x - disk.x, dy = v.position.y - disk.y;
                if (dx * dx + dy * dy < disk.r2) in_void = true;
            }
            if (in_void) continue;
            new_index[r * cols + c] = static_cast<std::uint32_t>(out.vertices.size());
            out.vertices.push_back(v);
        }
    }
    if (out.vertices.size() < min_capture_vertices)
        throw GenerationError("capture keeps " + std::to_string(out.vertices.size()) + " vertices, fewer than " +
                              std::to_string(min_capture_vertices));
    out.triangles = detail::triangulate_lattice(
        keep_rows, keep_cols, [&](std::size_t r, std::size_t c) { return new_index[r * cols + c] != dead; },
        [&](std::size_t r, std::size_t c) { return new_index[r * cols + c]; });

    const double gain = cap.color_gain > 0 ? 1.0 + rng.normal(0.0, cap.color_gain) : 1.0;
    auto clamp01 = [](double v) { return std::min(1.0, std::max(0.0, v)); };
    for (auto& v : out.vertices) {
        if (cap.depth_noise > 0) v.position.z += rng.normal(0.0, cap.depth_noise * d);
        if (cap.color_noise > 0 || cap.color_gain > 0) {
            v.color.r = clamp01(gain * v.color.r + (cap.color_noise > 0 ? rng.normal(0.0, cap.color_noise) : 0.0));
            v.color.g = clamp01(gain * v.color.g + (cap.color_noise > 0 ? rng.normal(0.0, cap.color_noise) : 0.0));
            v.color.b = clamp01(gain * v.color.b + (cap.color_noise > 0 ? rng.normal(0.0, cap.color_noise) : 0.0));
        }
        v.position = motion.apply(v.position);
        if (cap.position_quantum > 0) {
            const double q = cap.position_quantum;
            v.position = {std::round(v.position.x / q) * q, std::round(v.position.y / q) * q,
                          std::round(v.position.z / q) * q};
        }
        if (cap.color_quantum > 0) {
            const double q = cap.color_quantum;
            v.color = {clamp01(std::round(v.color.r / q) * q), clamp01(std::round(v.color.g / q) * q),
                       clamp01(std::round(v.color.b / q) * q)};
        }
    }

    CaptureResult result;
    result.transform = motion;
    result.record.subject_id = subject_id;
    result.record.pose = pose;
    for (const auto& [id, p] : subject.landmarks.entries()) {
        Vec3 q = p;
        if (cap.landmark_noise > 0) {
            const double s = cap.landmark_noise * d;
            q = q + Vec3{rng.normal(0.0, s), rng.normal(0.0, s), rng.normal(0.0, s)};
        }
        result.record.landmarks.set(id, motion.apply(q));
    }
    result.record.mesh = std::move(out);
    return result;
}

// ---------------------------------------------------------------------------
// Datasets

struct ManifestEntry {
    std::string subject_id;
    PoseTag pose = PoseTag::gallery;
    std::string mesh_path;  // relative to the manifest directory
    std::string landmark_path;
    RigidTransform transform;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

inline constexpr std::string_view manifest_header = "subject_id,pose,mesh_path,landmark_path,transform";

inline std::string subject_name(std::size_t i) {
    std::string s = std::to_string(i);
    if (s.size() < 4) s.insert(0, 4 - s.size(), '0');
    return "s" + s;
}

/// The transform field holds the 12 row-major [R|t] values separated by spaces.
inline std::string serialize_manifest(const Manifest& m, std::string_view comment = {}) {
    std::string out;
    if (!comment.empty()) out += "# " + std::string(comment) + "\n";
    out += std::string(manifest_header) + "\n";
    for (const auto& e : m.entries) {
        out += e.subject_id + "," + std::string(to_string(e.pose)) + "," + e.mesh_path + "," + e.landmark_path + ",";
        const auto a = e.transform.to_row_major();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i) out += ' ';
            textio::append(out, a[i]);
        }
        out += '\n';
    }
    return out;
}

inline Manifest parse_manifest(std::string_view text) {
    textio::LineReader reader(text);
    std::string_view line;
    if (!reader.next(line) || line != manifest_header)
        throw ParseError("malformed manifest header", reader.line_no());
    Manifest m;
    while (reader.next(line)) {
        auto f = textio::split(line, ',');
        if (f.size() != 5) throw ParseError("manifest row needs 5 fields", reader.line_no());
        ManifestEntry e;
        e.subject_id = std::string(f[0]);
        if (e.subject_id.empty()) throw ParseError("empty subject id", reader.line_no());
        try {
            e.pose = parse_pose(f[1]);
        } catch (const DataError& err) {
            throw ParseError(err.what(), reader.line_no());
        }
        e.mesh_path = std::string(f[2]);
        e.landmark_path = std::string(f[3]);
        auto tok = textio::split_ws(f[4]);
        if (tok.size() != 12) throw ParseError("transform needs 12 values", reader.line_no());
        std::array<double, 12> a{};
        for (std::size_t i = 0; i < 12; ++i)
            if (!textio::parse_double(tok[i], a[i])) throw ParseError("bad transform value", reader.line_no());
        e.transform = RigidTransform::from_row_major(a);
        m.entries.push_back(std::move(e));
    }
    return m;
}

struct DatasetOptions {
    double nominal_d = 60.0;
    /// Written as a `#` comment at the top of every file.
    std::string comment;
};

/// Subject i uses seed = master_seed XOR i for its shape; its gallery and
/// probe captures use cap.seed XOR i.
inline Manifest synth_dataset(std::size_t n_subjects, std::uint64_t seed, const CaptureParams& cap_gallery,
                              const CaptureParams& cap_probe, const std::filesystem::path& out_dir,
                              const DatasetOptions& opts = {}) {
    if (n_subjects < 2) throw GenerationError("need at least 2 subjects");
    std::filesystem::create_directories(out_dir / "scans");
    Manifest manifest;
    manifest.entries.resize(2 * n_subjects);
    const std::string header = opts.comment.empty() ? std::string() : "# " + opts.comment + "\n";

    parallel_for(n_subjects, [&](std::size_t i) {
        const std::string id = subject_name(i);
        const SubjectScan scan = synth_subject(random_subject_params(seed ^ i, opts.nominal_d));
        for (int k = 0; k < 2; ++k) {
            const PoseTag pose = k == 0 ? PoseTag::gallery : PoseTag::probe;
            CaptureParams cap = k == 0 ? cap_gallery : cap_probe;
            cap.seed ^= i;
            auto result = synth_capture(scan, id, pose, cap);
            ManifestEntry& e = manifest.entries[2 * i + static_cast<std::size_t>(k)];
            e.subject_id = id;
            e.pose = pose;
            e.mesh_path = "scans/" + id + "_" + std::string(to_string(pose)) + ".mesh";
            e.landmark_path = "scans/" + id + "_" + std::string(to_string(pose)) + ".lm";
            e.transform = result.transform;
            textio::write_file(out_dir / e.mesh_path, header + serialize_mesh(result.record.mesh));
            textio::write_file(out_dir / e.landmark_path, header + serialize_landmarks(result.record.landmarks));
        }
    });
    textio::write_file(out_dir / "manifest.csv", serialize_manifest(manifest, opts.comment));
    return manifest;
}

}  // namespace rangeface
