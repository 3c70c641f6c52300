#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "atroreg/mesh_io.hpp"

using namespace atroreg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "atroreg_test_mesh_io";
  fs::create_directories(dir);
  return dir;
}

const char* kTetOff =
    "OFF\n"
    "# unit tetrahedron\n"
    "4 4 6\n"
    "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
    "3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";

}  // namespace

TEST_CASE("OFF parsing") {
  std::istringstream in(kTetOff);
  const TriMesh m = read_off(in);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_faces() == 4);
  CHECK(m.faces()[3] == Face{1, 2, 3});
  CHECK(mesh_volume(m).volume == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("parse errors carry line numbers") {
  std::istringstream bad_vertex("OFF\n3 1 0\n0 0 0\n1 0 x\n0 1 0\n3 0 1 2\n");
  try {
    read_off(bad_vertex, "bad.off");
    FAIL("expected a parse error");
  } catch (const MeshIOError& e) {
    CHECK(e.line() == 4);
    CHECK(std::string(e.what()).find("bad.off") != std::string::npos);
  }

  std::istringstream quad("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  try {
    read_off(quad);
    FAIL("expected a parse error");
  } catch (const MeshIOError& e) {
    CHECK(e.line() == 7);
  }

  std::istringstream range("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n");
  CHECK_THROWS_AS(read_off(range), MeshIOError);

  std::istringstream truncated("OFF\n3 1 0\n0 0 0\n1 0 0\n");
  CHECK_THROWS_AS(read_off(truncated), MeshIOError);
}

TEST_CASE("OBJ import") {
  std::istringstream in(
      "# comment\n"
      "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
      "vn 0 0 1\n"
      "f 1 3 2\nf 1/1 2/2 4/4\nf 1//1 4//1 3//1\nf -3 -2 -1\n");
  const TriMesh m = read_obj(in);
  CHECK(m.num_vertices() == 4);
  CHECK(m.num_faces() == 4);
  CHECK(m.faces()[0] == Face{0, 2, 1});
  CHECK(m.faces()[3] == Face{1, 2, 3});
  CHECK(mesh_volume(m).volume == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("round trips") {
  const TriMesh sphere = make_icosphere(3, 1.3, Vec3(0.1, -0.2, 0.3));
  REQUIRE(sphere.num_vertices() == 642);
  for (const char* name : {"sphere.off", "sphere.vtk"}) {
    const fs::path path = scratch_dir() / name;
    save_mesh(sphere, path);
    const TriMesh back = load_mesh(path);
    REQUIRE(back.num_vertices() == sphere.num_vertices());
    CHECK(back.faces() == sphere.faces());
    double err = 0.0;
    for (std::size_t k = 0; k < back.num_vertices(); ++k)
      err = std::max(err, (back.vertex(k) - sphere.vertex(k)).norm());
    CHECK(err < 1e-9);
  }
}

TEST_CASE("VTK scalar export") {
  const TriMesh m = make_icosphere(1);
  ScalarField s(m.num_vertices());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = 0.25 * static_cast<double>(k);
  std::ostringstream out;
  write_vtk(out, m, &s, "total_normal_displacement");
  const std::string text = out.str();
  CHECK(text.rfind("# vtk DataFile Version", 0) == 0);
  CHECK(text.find("POINT_DATA 42") != std::string::npos);
  CHECK(text.find("SCALARS total_normal_displacement double 1") != std::string::npos);

  std::istringstream in(text);
  ScalarField back;
  const TriMesh m2 = read_vtk(in, "<mem>", &back);
  CHECK(m2.faces() == m.faces());
  CHECK(back == s);

  const ScalarField wrong(3, 0.0);
  CHECK_THROWS(write_vtk(out, m, &wrong));
  CHECK_THROWS(save_mesh(m, scratch_dir() / "x.off", &s));
}

TEST_CASE("load_mesh orientation policy and formats") {
  const fs::path path = scratch_dir() / "flipped.off";
  {
    std::ofstream out(path);
    out << "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n3 0 3 2\n3 1 2 3\n";
  }
  CHECK_NOTHROW(load_mesh(path, {OrientationPolicy::ignore}));
  CHECK_NOTHROW(load_mesh(path, {OrientationPolicy::warn}));
  try {
    load_mesh(path, {OrientationPolicy::require});
    FAIL("expected an orientation error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("edge") != std::string::npos);
  }
  CHECK_THROWS(load_mesh(scratch_dir() / "missing.off"));
  CHECK_THROWS(load_mesh(scratch_dir() / "mesh.stl"));
}
