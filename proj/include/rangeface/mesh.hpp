#pragma once

// Face meshes, landmark sets and their ASCII file formats.
//
// Mesh file:
//   rangeface-mesh v1
//   vertices N
//   x y z r g b        (N lines, colors in [0,1])
//   faces M
//   i j k              (M lines, 0-based vertex indices)
//
// Landmark sidecar: one `id x y z` line per landmark, ids from the
// anthropometric numbering below. Blank lines and lines starting with `#` are
// ignored by every parser in this library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rangeface/error.hpp"
#include "rangeface/geometry.hpp"
#include "rangeface/textio.hpp"

namespace rangeface {

struct Color {
    double r = 0, g = 0, b = 0;
    friend constexpr bool operator==(Color, Color) = default;
};

struct Vertex {
    Vec3 position;
    Color color;
    friend constexpr bool operator==(const Vertex&, const Vertex&) = default;
};

using Triangle = std::array<std::uint32_t, 3>;

enum class FrameTag { body, canonical };

struct FaceMesh {
    std::vector<Vertex> vertices;
    std::vector<Triangle> triangles;
    FrameTag frame = FrameTag::body;

    friend bool operator==(const FaceMesh&, const FaceMesh&) = default;
};

/// Throws DataError if an index is out of range, a color leaves [0,1], or
/// triangles exist with fewer than three vertices.
inline void validate(const FaceMesh& mesh) {
    if (!mesh.triangles.empty() && mesh.vertices.size() < 3)
        throw DataError("mesh has triangles but fewer than 3 vertices");
    for (const auto& v : mesh.vertices) {
        for (double c : {v.color.r, v.color.g, v.color.b})
            if (!(c >= 0.0 && c <= 1.0)) throw DataError("vertex color out of [0,1]");
    }
    for (const auto& t : mesh.triangles)
        for (auto i : t)
            if (i >= mesh.vertices.size()) throw DataError("triangle index out of range");
}

/// Anthropometric landmark numbering.
enum class LandmarkId : int {
    sellion = 1,
    rt_infraorbitale = 2,
    lt_infraorbitale = 3,
    supramenton = 4,
    rt_tragion = 5,
    rt_gonion = 6,
    lt_tragion = 7,
    lt_gonion = 8,
    rt_clavicale = 10,
    lt_clavicale = 12,
};

inline std::optional<LandmarkId> landmark_from_int(int id) {
    switch (id) {
        case 1: case 2: case 3: case 4: case 5: case 6: case 7: case 8: case 10: case 12:
            return static_cast<LandmarkId>(id);
        default:
            return std::nullopt;
    }
}

inline std::string_view landmark_name(LandmarkId id) {
    switch (id) {
        case LandmarkId::sellion: return "Sellion";
        case LandmarkId::rt_infraorbitale: return "Rt Infraorbitale";
        case LandmarkId::lt_infraorbitale: return "Lt Infraorbitale";
        case LandmarkId::supramenton: return "Supramenton";
        case LandmarkId::rt_tragion: return "Rt Tragion";
        case LandmarkId::rt_gonion: return "Rt Gonion";
        case LandmarkId::lt_tragion: return "Lt Tragion";
        case LandmarkId::lt_gonion: return "Lt Gonion";
        case LandmarkId::rt_clavicale: return "Rt Clavicale";
        case LandmarkId::lt_clavicale: return "Lt Clavicale";
    }
    return "unknown";
}

class LandmarkSet {
public:
    void set(LandmarkId id, Vec3 p) { entries_[id] = p; }
    bool has(LandmarkId id) const { return entries_.count(id) != 0; }

    Vec3 at(LandmarkId id) const {
        auto it = entries_.find(id);
        if (it == entries_.end())
            throw DataError("required landmark " + std::to_string(static_cast<int>(id)) + " (" +
                            std::string(landmark_name(id)) + ") absent");
        return it->second;
    }

    /// Throws DataError naming every absent id in `ids`.
    void require(std::initializer_list<LandmarkId> ids) const {
        std::string missing;
        for (auto id : ids) {
            if (has(id)) continue;
            if (!missing.empty()) missing += "; ";
            missing += "required landmark " + std::to_string(static_cast<int>(id)) + " (" +
                       std::string(landmark_name(id)) + ") absent";
        }
        if (!missing.empty()) throw DataError(missing);
    }

    const std::map<LandmarkId, Vec3>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

private:
    std::map<LandmarkId, Vec3> entries_;
};

enum class PoseTag { gallery, probe };

inline std::string_view to_string(PoseTag p) { return p == PoseTag::gallery ? "gallery" : "probe"; }

inline PoseTag parse_pose(std::string_view s) {
    if (s == "gallery") return PoseTag::gallery;
    if (s == "probe") return PoseTag::probe;
    throw DataError("unknown pose tag '" + std::string(s) + "'");
}

struct SubjectRecord {
    std::string subject_id;
    PoseTag pose = PoseTag::gallery;
    FaceMesh mesh;
    LandmarkSet landmarks;
};

// ---------------------------------------------------------------------------
// Mesh format

inline FaceMesh parse_mesh(std::string_view text) {
    using textio::parse_double;
    using textio::parse_u64;
    textio::LineReader reader(text);
    std::string_view line;

    auto expect_line = [&](const char* what) {
        if (!reader.next(line))
            throw ParseError(std::string("unexpected end of file, expected ") + what, reader.line_no() + 1);
    };
    auto count_line = [&](std::string_view keyword) -> std::size_t {
        expect_line(keyword.data());
        auto tok = textio::split_ws(line);
        std::uint64_t n = 0;
        if (tok.size() != 2 || tok[0] != keyword || !parse_u64(tok[1], n))
            throw ParseError("malformed header, expected '" + std::string(keyword) + " <count>'",
                             reader.line_no());
        return static_cast<std::size_t>(n);
    };

    expect_line("header");
    if (line != "rangeface-mesh v1") throw ParseError("malformed header, expected 'rangeface-mesh v1'", reader.line_no());

    FaceMesh mesh;
    mesh.frame = FrameTag::body;
    const std::size_t nv = count_line("vertices");
    mesh.vertices.reserve(std::min<std::size_t>(nv, text.size() / 12 + 1));
    for (std::size_t i = 0; i < nv; ++i) {
        expect_line("vertex");
        auto tok = textio::split_ws(line);
        if (tok.size() != 6) throw ParseError("vertex line needs 6 values", reader.line_no());
        double v[6];
        for (std::size_t k = 0; k < 6; ++k)
            if (!parse_double(tok[k], v[k]) || !std::isfinite(v[k]))
                throw ParseError("bad number '" + std::string(tok[k]) + "'", reader.line_no());
        for (std::size_t k = 3; k < 6; ++k)
            if (!(v[k] >= 0.0 && v[k] <= 1.0)) throw ParseError("color out of [0,1]", reader.line_no());
        mesh.vertices.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
    }
    const std::size_t nf = count_line("faces");
    if (nf > 0 && nv < 3) throw ParseError("faces present but fewer than 3 vertices", reader.line_no());
    mesh.triangles.reserve(std::min<std::size_t>(nf, text.size() / 6 + 1));
    for (std::size_t i = 0; i < nf; ++i) {
        expect_line("face");
        auto tok = textio::split_ws(line);
        if (tok.size() != 3) throw ParseError("face line needs 3 indices", reader.line_no());
        Triangle t{};
        for (std::size_t k = 0; k < 3; ++k) {
            std::uint64_t idx = 0;
            if (!parse_u64(tok[k], idx)) throw ParseError("bad index '" + std::string(tok[k]) + "'", reader.line_no());
            if (idx >= nv) throw ParseError("index out of range", reader.line_no());
            t[k] = static_cast<std::uint32_t>(idx);
        }
        mesh.triangles.push_back(t);
    }
    if (reader.next(line)) throw ParseError("trailing content after faces", reader.line_no());
    return mesh;
}

inline std::string serialize_mesh(const FaceMesh& mesh) {
    std::string out = "rangeface-mesh v1\nvertices " + std::to_string(mesh.vertices.size()) + "\n";
    out.reserve(mesh.vertices.size() * 80 + mesh.triangles.size() * 20 + 64);
    for (const auto& v : mesh.vertices) {
        for (double c : {v.position.x, v.position.y, v.position.z, v.color.r, v.color.g}) {
            textio::append(out, c);
            out += ' ';
        }
        textio::append(out, v.color.b);
        out += '\n';
    }
    out += "faces " + std::to_string(mesh.triangles.size()) + "\n";
    for (const auto& t : mesh.triangles) {
        out += std::to_string(t[0]);
        out += ' ';
        out += std::to_string(t[1]);
        out += ' ';
        out += std::to_string(t[2]);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Landmark sidecar

inline LandmarkSet parse_landmarks(std::string_view text) {
    textio::LineReader reader(text);
    std::string_view line;
    LandmarkSet set;
    while (reader.next(line)) {
        auto tok = textio::split_ws(line);
        if (tok.size() != 4) throw ParseError("landmark line needs 'id x y z'", reader.line_no());
        std::uint64_t raw = 0;
        if (!textio::parse_u64(tok[0], raw)) throw ParseError("bad landmark id", reader.line_no());
        auto id = raw <= 64 ? landmark_from_int(static_cast<int>(raw)) : std::nullopt;
        if (!id) throw ParseError("unknown landmark id " + std::string(tok[0]), reader.line_no());
        double p[3];
        for (std::size_t k = 0; k < 3; ++k)
            if (!textio::parse_double(tok[k + 1], p[k]) || !std::isfinite(p[k]))
                throw ParseError("bad number '" + std::string(tok[k + 1]) + "'", reader.line_no());
        if (set.has(*id)) throw ParseError("duplicate landmark " + std::to_string(raw), reader.line_no());
        set.set(*id, {p[0], p[1], p[2]});
    }
    set.require({LandmarkId::sellion, LandmarkId::rt_infraorbitale, LandmarkId::lt_infraorbitale,
                 LandmarkId::supramenton});
    return set;
}

inline std::string serialize_landmarks(const LandmarkSet& set) {
    std::string out;
    for (const auto& [id, p] : set.entries()) {
        out += std::to_string(static_cast<int>(id));
        for (double c : {p.x, p.y, p.z}) {
            out += ' ';
            textio::append(out, c);
        }
        out += '\n';
    }
    return out;
}

}  // namespace rangeface
