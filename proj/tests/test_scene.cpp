// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "hrpp/bvh.hpp"
#include "hrpp/scene.hpp"
#include "test_util.hpp"

namespace hrpp {
namespace {

class QuietLog : public ::testing::Test {
 protected:
  void SetUp() override { set_log_sink({}); }
  void TearDown() override { set_log_sink(default_log_sink()); }
};

std::vector<Triangle> obj(const std::string& text) {
  std::istringstream in(text);
  return parse_obj(in);
}

ErrorKind obj_error(const std::string& text, std::string* message = nullptr) {
  try {
    obj(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return ErrorKind::IoError;
}

TEST(ParseObj, SingleTriangle) {
  const auto tris = obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  ASSERT_EQ(tris.size(), 1u);
  EXPECT_EQ(tris[0].v1, (Vec3{1, 0, 0}));
  EXPECT_EQ(tris[0].id, 0u);
}

TEST(ParseObj, QuadIsFanTriangulated) {
  const auto tris = obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  ASSERT_EQ(tris.size(), 2u);
  EXPECT_EQ(tris[0].v0, tris[1].v0);
  EXPECT_EQ(tris[1].v2, (Vec3{0, 1, 0}));
  EXPECT_EQ(tris[1].id, 1u);
}

TEST(ParseObj, NegativeIndicesAreRelative) {
  const auto a = obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n");
  const auto b = obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].v0, b[0].v0);
  EXPECT_EQ(a[0].v2, b[0].v2);
}

TEST(ParseObj, SlashFormsUseVertexIndex) {
  const auto tris = obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2/1/1 3//1\n");
  ASSERT_EQ(tris.size(), 1u);
  EXPECT_EQ(tris[0].v2, (Vec3{0, 1, 0}));
}

TEST(ParseObj, IndexZeroIsOutOfRange) {
  EXPECT_EQ(obj_error("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"), ErrorKind::IndexOutOfRange);
}

TEST(ParseObj, IndexPastEndIsOutOfRange) {
  EXPECT_EQ(obj_error("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"), ErrorKind::IndexOutOfRange);
  EXPECT_EQ(obj_error("v 0 0 0\nf -2 -1 1\n"), ErrorKind::IndexOutOfRange);
}

TEST(ParseObj, BadNumberReportsLine) {
  std::string msg;
  EXPECT_EQ(obj_error("v 0 0 0\nv 1 0 0\nv 0 abc 0\nf 1 2 3\n", &msg), ErrorKind::ParseError);
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_EQ(obj_error("v 0 0\n"), ErrorKind::ParseError);
  EXPECT_EQ(obj_error("v 0 0 0\nv 1 0 0\nf 1 2\n"), ErrorKind::ParseError);
}

TEST_F(QuietLog, UnsupportedRecordsAreSkipped) {
  const auto tris = obj("# comment\nmtllib x.mtl\no thing\ng part\ns off\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3 # tail\n");
  EXPECT_EQ(tris.size(), 1u);
}

TEST(ParseObj, RoundTripIsExact) {
  std::mt19937_64 rng(5);
  const auto tris = testing::random_soup(rng, 50, 100.f, 3.f);
  std::ostringstream os;
  write_obj(os, tris);
  const auto back = obj(os.str());
  ASSERT_EQ(back.size(), tris.size());
  for (std::size_t i = 0; i < tris.size(); ++i) {
    EXPECT_EQ(back[i].v0, tris[i].v0);
    EXPECT_EQ(back[i].v1, tris[i].v1);
    EXPECT_EQ(back[i].v2, tris[i].v2);
    EXPECT_EQ(back[i].id, tris[i].id);
  }
}

TEST(LoadObj, MissingFile) {
  try {
    load_obj("/nonexistent/mesh.obj");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FileNotFound);
  }
}

TEST(Generators, TriangleCounts) {
  EXPECT_EQ(generate_scene("grid", {{"n", 1}}).size(), 2u);
  EXPECT_EQ(generate_scene("grid", {{"n", 5}}).size(), 50u);
  // 2 s (s - 1) per sphere: s = 16 gives 480, times 16 spheres.
  EXPECT_EQ(generate_scene("spheres", {{"count", 4}, {"tessellation", 16}}).size(), 7680u);
  EXPECT_EQ(generate_scene("menger", {{"level", 0}}).size(), 12u);
  EXPECT_EQ(generate_scene("menger", {{"level", 1}}).size(), 240u);
}

TEST(Generators, NoDegenerateTriangles) {
  for (const char* name : {"grid", "spheres", "menger"}) {
    auto tris = generate_scene(name);
    EXPECT_EQ(drop_degenerate(tris), 0u) << name;
  }
}

TEST(Generators, Deterministic) {
  const auto a = generate_scene("spheres");
  const auto b = generate_scene("spheres");
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].v1, b[i].v1);
}

TEST(Generators, UnknownNameAndBadParams) {
  try {
    generate_scene("teapot");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownGenerator);
  }
  EXPECT_THROW(generate_scene("menger", {{"level", 4}}), Error);
  EXPECT_THROW(generate_scene("grid", {{"n", 0}}), Error);
}

TEST(TransformTest, TranslationShiftsBounds) {
  const auto tris = generate_scene("menger", {{"level", 0}});
  const auto moved = transformed(tris, Transform::translate({1, 2, 3}));
  Aabb a, b;
  for (const auto& t : tris) a.grow(t.bounds());
  for (const auto& t : moved) b.grow(t.bounds());
  EXPECT_EQ(b.min, (a.min + Vec3{1, 2, 3}));
  EXPECT_EQ(b.max, (a.max + Vec3{1, 2, 3}));
}

TEST(TransformTest, RotateYQuarterTurn) {
  const Vec3 p = Transform::rotate_y(90.0).apply({1, 0, 0});
  EXPECT_NEAR(p.x, 0.f, 1e-6f);
  EXPECT_NEAR(std::abs(p.z), 1.f, 1e-6f);
  EXPECT_FALSE(Transform::scale({1, 0, 1}).invertible());
}

nlohmann::json minimal_scene() {
  return nlohmann::json::parse(R"({
    "version": 1,
    "camera": {"position": [0, 0, 5], "look_at": [0, 0, 0], "resolution": [8, 6]},
    "lights": [{"position": [0, 5, 5], "intensity": [1, 1, 1]}],
    "meshes": [{"generator": "grid", "params": {"n": 2}}]
  })");
}

ErrorKind description_error(const nlohmann::json& j) {
  try {
    parse_scene_description(j);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return ErrorKind::IoError;
}

TEST(SceneDescriptionTest, MinimalSceneBuilds) {
  const Scene s = build_scene(parse_scene_description(minimal_scene()));
  EXPECT_EQ(s.triangles.size(), 8u);
  EXPECT_EQ(s.camera.width, 8u);
  EXPECT_EQ(s.camera.height, 6u);
  EXPECT_EQ(s.lights.size(), 1u);
  EXPECT_EQ(s.material_of.size(), s.triangles.size());
  for (std::size_t i = 0; i < s.triangles.size(); ++i) EXPECT_EQ(s.triangles[i].id, i);
}

TEST(SceneDescriptionTest, ValidationErrors) {
  auto j = minimal_scene();
  j["version"] = 2;
  EXPECT_EQ(description_error(j), ErrorKind::ParseError);

  j = minimal_scene();
  j["lights"] = nlohmann::json::array();
  EXPECT_EQ(description_error(j), ErrorKind::InvalidArgument);

  j = minimal_scene();
  j["meshes"] = nlohmann::json::array();
  EXPECT_EQ(description_error(j), ErrorKind::InvalidArgument);

  j = minimal_scene();
  j["lights"][0]["intensity"] = {1, -1, 1};
  EXPECT_EQ(description_error(j), ErrorKind::InvalidArgument);

  j = minimal_scene();
  j["camera"]["vertical_fov"] = 180;
  EXPECT_EQ(description_error(j), ErrorKind::InvalidArgument);

  j = minimal_scene();
  j["camera"]["resolution"] = {0, 4};
  EXPECT_EQ(description_error(j), ErrorKind::InvalidArgument);

  j = minimal_scene();
  j["meshes"][0]["transform"] = {{"scale", 0}};
  EXPECT_EQ(description_error(j), ErrorKind::InvalidArgument);

  j = minimal_scene();
  j["camera"]["position"] = {0, 1};
  EXPECT_EQ(description_error(j), ErrorKind::ParseError);

  j = minimal_scene();
  j["meshes"][0] = {{"albedo", {1, 1, 1}}};
  EXPECT_EQ(description_error(j), ErrorKind::ParseError);

  j = minimal_scene();
  j["meshes"][0]["generator"] = "teapot";
  try {
    build_scene(parse_scene_description(j));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownGenerator);
  }
}

TEST(SceneDescriptionTest, MatrixTransform) {
  auto j = minimal_scene();
  j["meshes"][0]["transform"] = {{"matrix", {1, 0, 0, 5, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1}}};
  const Scene s = build_scene(parse_scene_description(j));
  Aabb box;
  for (const auto& t : s.triangles) box.grow(t.bounds());
  EXPECT_FLOAT_EQ(box.center().x, 5.f);
}

TEST(SceneDescriptionTest, MissingFile) {
  try {
    load_scene("/nonexistent/scene.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FileNotFound);
  }
}

class BundledScenes : public ::testing::TestWithParam<const char*> {
 protected:
  void SetUp() override { set_log_sink({}); }
  void TearDown() override { set_log_sink(default_log_sink()); }
};

TEST_P(BundledScenes, LoadAndBuild) {
  const std::filesystem::path path = std::filesystem::path(HRPP_SCENES_DIR) / (std::string(GetParam()) + ".json");
  const Scene s = load_scene(path);
  EXPECT_EQ(s.name, GetParam());
  EXPECT_FALSE(s.triangles.empty());
  EXPECT_FALSE(s.lights.empty());
  const Bvh bvh = build_bvh(s.triangles);
  EXPECT_EQ(bvh.prims.size(), s.triangles.size());
}

INSTANTIATE_TEST_SUITE_P(All, BundledScenes,
                         ::testing::Values("sphere_grid", "menger2", "mirror_room", "ziggurat"));

}  // namespace
}  // namespace hrpp
