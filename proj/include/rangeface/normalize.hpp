#pragma once

// Face normalization: crop with landmark planes, move into the canonical
// landmark frame, and rasterize depth and color onto a regular grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "rangeface/error.hpp"
#include "rangeface/geometry.hpp"
#include "rangeface/mesh.hpp"
#include "rangeface/textio.hpp"

namespace rangeface {

/// Keeps vertices strictly above the clavicale's horizontal plane and strictly
/// in front of the tragion's vertical plane. Triangles touching a removed
/// vertex are dropped.
inline FaceMesh crop_face(const FaceMesh& mesh, const LandmarkSet& lm) {
    lm.require({LandmarkId::rt_tragion, LandmarkId::rt_clavicale});
    const double y_cut = lm.at(LandmarkId::rt_clavicale).y;
    const double z_cut = lm.at(LandmarkId::rt_tragion).z;

    constexpr std::uint32_t dead = 0xffffffffu;
    std::vector<std::uint32_t> remap(mesh.vertices.size(), dead);
    FaceMesh out;
    out.frame = mesh.frame;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& p = mesh.vertices[i].position;
        if (p.y > y_cut && p.z > z_cut) {
            remap[i] = static_cast<std::uint32_t>(out.vertices.size());
            out.vertices.push_back(mesh.vertices[i]);
        }
    }
    if (out.vertices.size() < 3)
        throw CropError("crop keeps " + std::to_string(out.vertices.size()) + " vertices, need at least 3");
    for (const auto& t : mesh.triangles) {
        if (remap[t[0]] == dead || remap[t[1]] == dead || remap[t[2]] == dead) continue;
        out.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    }
    return out;
}

/// Rigid transform taking mesh coordinates to the landmark frame: origin at
/// the infraorbitale midpoint, x along L3 - L2, y along the part of L1 - L4
/// orthogonal to x, z = x cross y.
inline RigidTransform canonical_frame(const LandmarkSet& lm) {
    lm.require({LandmarkId::sellion, LandmarkId::rt_infraorbitale, LandmarkId::lt_infraorbitale,
                LandmarkId::supramenton});
    const Vec3 l1 = lm.at(LandmarkId::sellion);
    const Vec3 l2 = lm.at(LandmarkId::rt_infraorbitale);
    const Vec3 l3 = lm.at(LandmarkId::lt_infraorbitale);
    const Vec3 l4 = lm.at(LandmarkId::supramenton);

    const double scale = std::max({norm(l1), norm(l2), norm(l3), norm(l4), 1.0});
    const Vec3 across = l3 - l2;
    const double d = norm(across);
    if (d < 1e-12 * scale) throw AlignmentError("degenerate landmarks: infraorbitale points coincide");
    const Vec3 ex = (1.0 / d) * across;

    const Vec3 vertical = l1 - l4;
    const Vec3 ortho = vertical - dot(vertical, ex) * ex;
    const double h = norm(ortho);
    if (norm(vertical) < 1e-12 * scale || h < 1e-9 * std::max(norm(vertical), d))
        throw AlignmentError("degenerate landmarks: sellion-supramenton axis parallel to infraorbitale axis");
    const Vec3 ey = (1.0 / h) * ortho;
    const Vec3 ez = cross(ex, ey);

    RigidTransform t;
    t.rotation = Mat3::from_rows(ex, ey, ez);
    const Vec3 origin = 0.5 * (l2 + l3);
    t.translation = -1.0 * (t.rotation * origin);
    return t;
}

inline FaceMesh transform_mesh(const FaceMesh& mesh, const RigidTransform& t, FrameTag frame) {
    FaceMesh out = mesh;
    for (auto& v : out.vertices) v.position = t.apply(v.position);
    out.frame = frame;
    return out;
}

inline LandmarkSet transform_landmarks(const LandmarkSet& lm, const RigidTransform& t) {
    LandmarkSet out;
    for (const auto& [id, p] : lm.entries()) out.set(id, t.apply(p));
    return out;
}

enum class ColorMode { luminance, rgb };

struct GridConfig {
    int resolution = 128;
    double x_half_extent = 1.25;  // multiples of d
    double y_below = 1.5;  // multiples of d below the origin
    double y_above = 1.5;  // multiples of d above the origin
    ColorMode color_mode = ColorMode::luminance;

    void validate() const {
        if (resolution < 2) throw DataError("grid resolution must be >= 2");
        if (!(x_half_extent > 0 && y_below > 0 && y_above > 0)) throw DataError("grid extents must be > 0");
    }
};

/// Row 0 is the top of the face (largest y); column 0 is the smallest x.
struct RangeGrid {
    int resolution = 0;
    std::vector<double> depth;
    std::vector<Color> color;
    /// 1 where the value was filled from a neighbour rather than observed.
    std::vector<std::uint8_t> void_mask;
    double d = 0;
    std::string subject_id;
    PoseTag pose = PoseTag::gallery;

    std::size_t index(int row, int col) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(resolution) + static_cast<std::size_t>(col);
    }

    friend bool operator==(const RangeGrid&, const RangeGrid&) = default;
};

/// Pixel-center coordinates of the grid lattice in the canonical frame.
struct PixelLattice {
    int n;
    double x0, dx, y0, dy;  // center(r, c) = (x0 + (c + 0.5) dx, y0 - (r + 0.5) dy)

    PixelLattice(const GridConfig& cfg, double d)
        : n(cfg.resolution),
          x0(-cfg.x_half_extent * d),
          dx(2 * cfg.x_half_extent * d / cfg.resolution),
          y0(cfg.y_above * d),
          dy((cfg.y_above + cfg.y_below) * d / cfg.resolution) {}

    double x(int col) const { return x0 + (col + 0.5) * dx; }
    double y(int row) const { return y0 - (row + 0.5) * dy; }
};

namespace detail {

/// For every void pixel, copies depth and color from the nearest observed
/// pixel (Euclidean distance in pixel units, ties to the lowest row-major
/// index). Searches square rings outward until no closer pixel can exist.
inline void fill_voids(RangeGrid& g) {
    const int n = g.resolution;
    std::vector<std::uint8_t> observed(g.void_mask.size());
    for (std::size_t i = 0; i < observed.size(); ++i) observed[i] = !g.void_mask[i];

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            if (observed[g.index(r, c)]) continue;
            long best_d2 = std::numeric_limits<long>::max();
            std::size_t best = 0;
            for (int ring = 1; ring < 2 * n; ++ring) {
                if (static_cast<long>(ring) * ring > best_d2) break;
                const int r_lo = r - ring, r_hi = r + ring, c_lo = c - ring, c_hi = c + ring;
                auto consider = [&](int rr, int cc) {
                    if (rr < 0 || rr >= n || cc < 0 || cc >= n) return;
                    const std::size_t idx = g.index(rr, cc);
                    if (!observed[idx]) return;
                    const long d2 = static_cast<long>(rr - r) * (rr - r) + static_cast<long>(cc - c) * (cc - c);
                    if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                        best_d2 = d2;
                        best = idx;
                    }
                };
                for (int cc = c_lo; cc <= c_hi; ++cc) {
                    consider(r_lo, cc);
                    consider(r_hi, cc);
                }
                for (int rr = r_lo + 1; rr < r_hi; ++rr) {
                    consider(rr, c_lo);
                    consider(rr, c_hi);
                }
            }
            const std::size_t self = g.index(r, c);
            g.depth[self] = g.depth[best];
            g.color[self] = g.color[best];
        }
    }
}

}  // namespace detail

/// Orthographic z-buffered rasterization of a canonical-frame mesh. Each pixel
/// takes barycentric depth and color from the covering triangle with the
/// largest z at the pixel center (equal depths: the later triangle wins).
/// Uncovered pixels are filled from the nearest covered pixel and flagged.
inline RangeGrid resample(const FaceMesh& mesh, const LandmarkSet& lm, const GridConfig& cfg = {}) {
    cfg.validate();
    const double d = distance(lm.at(LandmarkId::rt_infraorbitale), lm.at(LandmarkId::lt_infraorbitale));
    if (!(d > 0)) throw ResampleError("infraorbitale distance must be > 0");

    const PixelLattice px(cfg, d);
    const int n = cfg.resolution;
    const std::size_t count = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    RangeGrid g;
    g.resolution = n;
    g.d = d;
    g.depth.assign(count, -std::numeric_limits<double>::infinity());
    g.color.assign(count, Color{});
    g.void_mask.assign(count, 1);

    for (const auto& tri : mesh.triangles) {
        const Vertex& va = mesh.vertices[tri[0]];
        const Vertex& vb = mesh.vertices[tri[1]];
        const Vertex& vc = mesh.vertices[tri[2]];
        const Vec3 a = va.position, b = vb.position, c = vc.position;
        const double area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        if (area == 0.0) continue;

        const double xmin = std::min({a.x, b.x, c.x}), xmax = std::max({a.x, b.x, c.x});
        const double ymin = std::min({a.y, b.y, c.y}), ymax = std::max({a.y, b.y, c.y});
        const int c_lo = std::max(0, static_cast<int>(std::floor((xmin - px.x0) / px.dx - 0.5)));
        const int c_hi = std::min(n - 1, static_cast<int>(std::ceil((xmax - px.x0) / px.dx - 0.5)));
        const int r_lo = std::max(0, static_cast<int>(std::floor((px.y0 - ymax) / px.dy - 0.5)));
        const int r_hi = std::min(n - 1, static_cast<int>(std::ceil((px.y0 - ymin) / px.dy - 0.5)));

        for (int r = r_lo; r <= r_hi; ++r) {
            const double y = px.y(r);
            for (int col = c_lo; col <= c_hi; ++col) {
                const double x = px.x(col);
                // Barycentric weights; all >= 0 means the center is inside or on an edge.
                const double wa = ((b.x - x) * (c.y - y) - (c.x - x) * (b.y - y)) / area;
                const double wb = ((c.x - x) * (a.y - y) - (a.x - x) * (c.y - y)) / area;
                const double wc = ((a.x - x) * (b.y - y) - (b.x - x) * (a.y - y)) / area;
                if (wa < 0 || wb < 0 || wc < 0) continue;
                const double z = wa * a.z + wb * b.z + wc * c.z;
                const std::size_t idx = g.index(r, col);
                if (z < g.depth[idx]) continue;
                g.depth[idx] = z;
                g.color[idx] = {wa * va.color.r + wb * vb.color.r + wc * vc.color.r,
                                wa * va.color.g + wb * vb.color.g + wc * vc.color.g,
                                wa * va.color.b + wb * vb.color.b + wc * vc.color.b};
                g.void_mask[idx] = 0;
            }
        }
    }

    if (std::all_of(g.void_mask.begin(), g.void_mask.end(), [](std::uint8_t v) { return v != 0; }))
        throw ResampleError("no triangle covers the sampling window");
    for (auto& col : g.color) {
        col.r = std::clamp(col.r, 0.0, 1.0);
        col.g = std::clamp(col.g, 0.0, 1.0);
        col.b = std::clamp(col.b, 0.0, 1.0);
    }
    detail::fill_voids(g);
    return g;
}

/// Luminance weights; they sum to 1 so a white pixel maps to 1.
inline double luminance(const Color& c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

struct GridVectors {
    std::vector<double> shape;
    std::vector<double> color;
};

/// Row-major flattening. In rgb mode the color vector holds the r, g and b
/// planes one after another.
inline GridVectors grid_to_vectors(const RangeGrid& g, ColorMode mode = ColorMode::luminance) {
    GridVectors v;
    v.shape = g.depth;
    if (mode == ColorMode::luminance) {
        v.color.reserve(g.color.size());
        for (const auto& c : g.color) v.color.push_back(luminance(c));
    } else {
        v.color.resize(3 * g.color.size());
        const std::size_t n = g.color.size();
        for (std::size_t i = 0; i < n; ++i) {
            v.color[i] = g.color[i].r;
            v.color[n + i] = g.color[i].g;
            v.color[2 * n + i] = g.color[i].b;
        }
    }
    return v;
}

/// Crop (when requested), align and resample in one call.
inline RangeGrid normalize_scan(const SubjectRecord& rec, const GridConfig& cfg, bool crop = true) {
    const FaceMesh cropped = crop ? crop_face(rec.mesh, rec.landmarks) : rec.mesh;
    const RigidTransform to_canonical = canonical_frame(rec.landmarks);
    RangeGrid g = resample(transform_mesh(cropped, to_canonical, FrameTag::canonical),
                           transform_landmarks(rec.landmarks, to_canonical), cfg);
    g.subject_id = rec.subject_id;
    g.pose = rec.pose;
    return g;
}

// ---------------------------------------------------------------------------
// Grid file:
//   rangeface-grid v1
//   resolution N
//   d <value>
//   subject <id>
//   pose <gallery|probe>
//   N depth rows, N luminance rows, N mask rows (0/1), then optionally N rgb
//   rows of 3N values (r g b per pixel). Without the rgb rows the color is
//   read back as gray at the stored luminance.

inline std::string serialize_grid(const RangeGrid& g, bool with_rgb = true) {
    const int n = g.resolution;
    std::string out = "rangeface-grid v1\nresolution " + std::to_string(n) + "\nd ";
    textio::append(out, g.d);
    out += "\nsubject " + g.subject_id + "\npose " + std::string(to_string(g.pose)) + "\n";
    auto rows = [&](auto value) {
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                if (c) out += ' ';
                value(g.index(r, c));
            }
            out += '\n';
        }
    };
    rows([&](std::size_t i) { textio::append(out, g.depth[i]); });
    rows([&](std::size_t i) { textio::append(out, luminance(g.color[i])); });
    rows([&](std::size_t i) { out += g.void_mask[i] ? '1' : '0'; });
    if (!with_rgb) return out;
    rows([&](std::size_t i) {
        textio::append(out, g.color[i].r);
        out += ' ';
        textio::append(out, g.color[i].g);
        out += ' ';
        textio::append(out, g.color[i].b);
    });
    return out;
}

inline RangeGrid parse_grid(std::string_view text) {
    textio::LineReader reader(text);
    std::string_view line;
    auto need = [&](const char* what) {
        if (!reader.next(line)) throw ParseError(std::string("unexpected end of grid, expected ") + what, reader.line_no() + 1);
    };
    auto keyed = [&](std::string_view key) {
        need(key.data());
        auto tok = textio::split_ws(line);
        if (tok.size() != 2 || tok[0] != key) throw ParseError("expected '" + std::string(key) + " <value>'", reader.line_no());
        return tok[1];
    };
    need("header");
    if (line != "rangeface-grid v1") throw ParseError("malformed header, expected 'rangeface-grid v1'", reader.line_no());
    RangeGrid g;
    std::uint64_t n = 0;
    if (!textio::parse_u64(keyed("resolution"), n) || n < 2 || n > 8192) throw ParseError("bad resolution", reader.line_no());
    g.resolution = static_cast<int>(n);
    if (!textio::parse_double(keyed("d"), g.d) || !(g.d > 0)) throw ParseError("bad d", reader.line_no());
    g.subject_id = std::string(keyed("subject"));
    try {
        g.pose = parse_pose(keyed("pose"));
    } catch (const ParseError&) {
        throw;
    } catch (const DataError& e) {
        throw ParseError(e.what(), reader.line_no());
    }
    const std::size_t count = n * n;
    g.depth.resize(count);
    g.void_mask.resize(count);
    g.color.resize(count);
    std::vector<double> lum(count);

    auto read_rows = [&](std::size_t per_pixel, auto store) {
        for (std::size_t r = 0; r < n; ++r) {
            need("grid row");
            auto tok = textio::split_ws(line);
            if (tok.size() != n * per_pixel) throw ParseError("grid row has wrong length", reader.line_no());
            for (std::size_t k = 0; k < tok.size(); ++k) {
                double v = 0;
                if (!textio::parse_double(tok[k], v) || !std::isfinite(v))
                    throw ParseError("bad number '" + std::string(tok[k]) + "'", reader.line_no());
                store(r * n + k / per_pixel, k % per_pixel, v, reader.line_no());
            }
        }
    };
    read_rows(1, [&](std::size_t i, std::size_t, double v, std::size_t) { g.depth[i] = v; });
    read_rows(1, [&](std::size_t i, std::size_t, double v, std::size_t) { lum[i] = v; });
    read_rows(1, [&](std::size_t i, std::size_t, double v, std::size_t ln) {
        if (v != 0.0 && v != 1.0) throw ParseError("mask values must be 0 or 1", ln);
        g.void_mask[i] = v != 0.0;
    });
    if (reader.next(line)) {
        // Optional rgb section; the first row is already in `line`.
        bool first = true;
        for (std::size_t r = 0; r < n; ++r) {
            if (!first) need("rgb row");
            first = false;
            auto tok = textio::split_ws(line);
            if (tok.size() != 3 * n) throw ParseError("rgb row has wrong length", reader.line_no());
            for (std::size_t c = 0; c < n; ++c) {
                double v[3];
                for (std::size_t k = 0; k < 3; ++k)
                    if (!textio::parse_double(tok[3 * c + k], v[k]) || !(v[k] >= 0.0 && v[k] <= 1.0))
                        throw ParseError("bad rgb value", reader.line_no());
                g.color[r * n + c] = {v[0], v[1], v[2]};
            }
        }
        if (reader.next(line)) throw ParseError("trailing content after grid", reader.line_no());
    } else {
        for (std::size_t i = 0; i < count; ++i) g.color[i] = {lum[i], lum[i], lum[i]};
    }
    return g;
}

}  // namespace rangeface
