#include <gtest/gtest.h>

#include <string>

#include "rangeface/facegen.hpp"
#include "rangeface/mesh.hpp"

namespace rangeface {
namespace {

constexpr const char* kTriangle =
    "rangeface-mesh v1\n"
    "vertices 3\n"
    "0 0 0 1 1 1\n"
    "1 0 0 1 1 1\n"
    "0 1 0 1 1 1\n"
    "faces 1\n"
    "0 1 2\n";

TEST(ParseMesh, MinimalFile) {
    const FaceMesh m = parse_mesh(kTriangle);
    ASSERT_EQ(m.vertices.size(), 3u);
    ASSERT_EQ(m.triangles.size(), 1u);
    EXPECT_EQ(m.frame, FrameTag::body);
    EXPECT_EQ(m.vertices[1].position, (Vec3{1, 0, 0}));
    EXPECT_EQ(m.vertices[2].color, (Color{1, 1, 1}));
    EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
}

TEST(ParseMesh, IndexOutOfRangeNamesLine) {
    const std::string text =
        "rangeface-mesh v1\nvertices 3\n0 0 0 1 1 1\n1 0 0 1 1 1\n0 1 0 1 1 1\nfaces 1\n0 1 5\n";
    try {
        parse_mesh(text);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(std::string(e.what()), "index out of range, line 7");
        EXPECT_EQ(e.line(), 7u);
    }
}

TEST(ParseMesh, RejectsGrammarViolations) {
    const char* bad[] = {
        "",
        "rangeface-mesh v2\nvertices 0\nfaces 0\n",
        "rangeface-mesh v1\nverts 0\nfaces 0\n",
        "rangeface-mesh v1\nvertices 1\n0 0 0 1 1\nfaces 0\n",
        "rangeface-mesh v1\nvertices 1\n0 0 0 1 1 1.5\nfaces 0\n",
        "rangeface-mesh v1\nvertices 1\n0 0 0 1 1 -0.1\nfaces 0\n",
        "rangeface-mesh v1\nvertices 1\n0 0 x 1 1 1\nfaces 0\n",
        "rangeface-mesh v1\nvertices 2\n0 0 0 1 1 1\nfaces 0\n",
        "rangeface-mesh v1\nvertices 1\n0 0 0 1 1 1\nfaces 1\n0 0 0\n",
        "rangeface-mesh v1\nvertices 0\nfaces 0\nextra\n",
        "rangeface-mesh v1\nvertices 3\n0 0 0 1 1 1\n1 0 0 1 1 1\n0 1 0 1 1 1\nfaces 1\n0 1\n",
        "rangeface-mesh v1\nvertices 3\n0 0 0 1 1 1\n1 0 0 1 1 1\n0 1 0 1 1 1\nfaces 1\n0 1 -2\n",
    };
    for (const char* text : bad) EXPECT_THROW(parse_mesh(text), ParseError) << text;
}

TEST(ParseMesh, ColorErrorCarriesLineNumber) {
    try {
        parse_mesh("rangeface-mesh v1\nvertices 1\n0 0 0 1 2 1\nfaces 0\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("color"), std::string::npos);
    }
}

TEST(ParseMesh, SkipsCommentsAndBlankLines) {
    const FaceMesh m = parse_mesh(std::string("# config=abc\n\n") + kTriangle);
    EXPECT_EQ(m.vertices.size(), 3u);
}

TEST(SerializeMesh, EmptyTriangleMesh) {
    FaceMesh m;
    m.vertices = {{{0, 0, 0}, {0, 0, 0}}, {{1, 0, 0}, {0.5, 0.5, 0.5}}, {{0, 1, 0}, {1, 1, 1}}};
    const std::string text = serialize_mesh(m);
    EXPECT_EQ(text, "rangeface-mesh v1\nvertices 3\n0 0 0 0 0 0\n1 0 0 0.5 0.5 0.5\n0 1 0 1 1 1\nfaces 0\n");
}

TEST(SerializeMesh, DeterministicBytes) {
    const SubjectScan s = synth_subject(random_subject_params(3));
    EXPECT_EQ(serialize_mesh(s.mesh), serialize_mesh(s.mesh));
}

TEST(SerializeMesh, RoundTripOnSyntheticMeshes) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SubjectScan s = synth_subject(random_subject_params(seed * 7919 + 1));
        CaptureParams cap;
        cap.seed = seed;
        cap.max_rotation_deg = 20;
        cap.max_translation = 50;
        cap.subsample_fraction = 0.6;
        cap.void_count = 2;
        cap.depth_noise = 0.01;
        cap.color_noise = 0.02;
        const FaceMesh m = synth_capture(s, "s", PoseTag::probe, cap).record.mesh;
        const std::string text = serialize_mesh(m);
        const FaceMesh back = parse_mesh(text);
        EXPECT_EQ(back, m) << "seed " << seed;
        // Normal form: a second pass reproduces the same bytes.
        EXPECT_EQ(serialize_mesh(back), text);
    }
}

TEST(ParseLandmarks, FourRequiredPoints) {
    const LandmarkSet lm = parse_landmarks("1 0 1 0\n2 -1 0 0\n3 1 0 0\n4 0 -2 0\n");
    EXPECT_EQ(lm.size(), 4u);
    EXPECT_EQ(lm.at(LandmarkId::sellion), (Vec3{0, 1, 0}));
    EXPECT_EQ(lm.at(LandmarkId::rt_infraorbitale), (Vec3{-1, 0, 0}));
    EXPECT_EQ(lm.at(LandmarkId::lt_infraorbitale), (Vec3{1, 0, 0}));
    EXPECT_EQ(lm.at(LandmarkId::supramenton), (Vec3{0, -2, 0}));
}

TEST(ParseLandmarks, MissingRequiredId) {
    try {
        parse_landmarks("1 0 1 0\n2 -1 0 0\n3 1 0 0\n");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_EQ(std::string(e.what()), "required landmark 4 (Supramenton) absent");
    }
}

TEST(ParseLandmarks, MissingSeveralIdsListsAll) {
    try {
        parse_landmarks("1 0 1 0\n5 0 0 0\n");
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("landmark 2"), std::string::npos);
        EXPECT_NE(msg.find("landmark 3"), std::string::npos);
        EXPECT_NE(msg.find("landmark 4"), std::string::npos);
    }
}

TEST(ParseLandmarks, DuplicateId) {
    try {
        parse_landmarks("1 0 1 0\n2 -1 0 0\n2 -1 0 0\n3 1 0 0\n4 0 -2 0\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(std::string(e.what()), "duplicate landmark 2, line 3");
    }
}

TEST(ParseLandmarks, RejectsUnknownIdAndBadLines) {
    EXPECT_THROW(parse_landmarks("9 0 0 0\n1 0 1 0\n2 -1 0 0\n3 1 0 0\n4 0 -2 0\n"), ParseError);
    EXPECT_THROW(parse_landmarks("1 0 1\n"), ParseError);
    EXPECT_THROW(parse_landmarks("1 0 1 nan\n"), ParseError);
}

TEST(ParseLandmarks, RoundTripIncludingOptionalIds) {
    const SubjectScan s = synth_subject(random_subject_params(11));
    const std::string text = serialize_landmarks(s.landmarks);
    EXPECT_EQ(parse_landmarks(text), s.landmarks);
    EXPECT_TRUE(s.landmarks.has(LandmarkId::rt_tragion));
    EXPECT_TRUE(s.landmarks.has(LandmarkId::rt_clavicale));
}

TEST(ValidateMesh, Invariants) {
    FaceMesh m = parse_mesh(kTriangle);
    EXPECT_NO_THROW(validate(m));
    m.triangles[0][2] = 3;
    EXPECT_THROW(validate(m), DataError);
    m = parse_mesh(kTriangle);
    m.vertices[0].color.g = 1.5;
    EXPECT_THROW(validate(m), DataError);
}

}  // namespace
}  // namespace rangeface
