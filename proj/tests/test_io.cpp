#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "s2m/error.hpp"
#include "s2m/io.hpp"
#include "support.hpp"

using namespace s2m;
namespace fs = std::filesystem;

namespace {

std::string bytes_of(const fs::path& p) { return io::read_text(p); }

}  // namespace

TEST_SUITE("io") {

TEST_CASE("cloud csv round trip at 6 decimals") {
  test::TempDir dir("io_cloud");
  const LabeledCloud c = test::random_cloud(500, 1);
  io::write_cloud_csv(dir.path() / "c.csv", c);
  const LabeledCloud back = io::read_cloud_csv(dir.path() / "c.csv");
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(norm(back.point(i) - c.point(i)) < 1e-6);
    CHECK(back.label(i) == c.label(i));
  }
  CHECK(bytes_of(dir.path() / "c.csv").rfind("x,y,z,label\n", 0) == 0);

  io::write_cloud_csv(dir.path() / "u.csv", LabeledCloud({{1, 2, 3}}));
  CHECK(bytes_of(dir.path() / "u.csv") == "x,y,z\n1.000000,2.000000,3.000000\n");
}

TEST_CASE("cloud csv parsing") {
  test::TempDir dir("io_parse");
  io::write_text(dir.path() / "ok.csv", "\xEF\xBB\xBFx, y, z\r\n1e-3, -2.5 ,3\r\n\r\n4,5,6\n");
  const LabeledCloud c = io::read_cloud_csv(dir.path() / "ok.csv");
  REQUIRE(c.size() == 2);
  CHECK(c.point(0) == Vec3{1e-3, -2.5, 3});
  CHECK_FALSE(c.has_labels());

  io::write_text(dir.path() / "bad.csv", "x,y,z\n1,2,3\n1,abc,3\n");
  try {
    io::read_cloud_csv(dir.path() / "bad.csv");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
  }
  io::write_text(dir.path() / "hdr.csv", "a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(io::read_cloud_csv(dir.path() / "hdr.csv"), IoError);
  io::write_text(dir.path() / "lab.csv", "x,y,z,label\n1,2,3,40\n");
  CHECK_THROWS_AS(io::read_cloud_csv(dir.path() / "lab.csv"), IoError);
  CHECK_THROWS_AS(io::read_cloud_csv(dir.path() / "missing.csv"), IoError);
}

TEST_CASE("pgm") {
  test::TempDir dir("io_pgm");
  BinaryMask m{5, 3, 0.7, std::vector<std::uint8_t>(15, 0)};
  m.pixels[7] = 255;
  io::write_pgm(dir.path() / "m.pgm", m);
  const std::string raw = bytes_of(dir.path() / "m.pgm");
  CHECK(raw.rfind("P5\n5 3\n255\n", 0) == 0);
  CHECK(raw.size() == 11 + 15);
  const BinaryMask back = io::read_mask_pgm(dir.path() / "m.pgm", 0.7);
  CHECK(back.pixels == m.pixels);
  CHECK(back.width == 5);

  GrayImage g{2, 2, {0.0, 0.5, 1.0, 0.2}};
  io::write_pgm(dir.path() / "g.pgm", g);
  const GrayImage gb = io::read_gray_pgm(dir.path() / "g.pgm");
  CHECK(gb.intensities[1] == 128 / 255.0);  // round(0.5·255) = 128
  CHECK(gb.intensities[3] == 51 / 255.0);
  CHECK_THROWS_AS(io::read_mask_pgm(dir.path() / "g.pgm", 1.0), IoError);  // 128 is not a mask value

  io::write_text(dir.path() / "p2.pgm", "P2\n1 1\n255\n0\n");
  CHECK_THROWS_AS(io::read_gray_pgm(dir.path() / "p2.pgm"), IoError);
}

TEST_CASE("views json") {
  const auto views = builtin_views();
  const auto back = io::views_from_json(io::views_to_json(views));
  REQUIRE(back.size() == views.size());
  for (std::size_t k = 0; k < views.size(); ++k) {
    CHECK(back[k].name == views[k].name);
    CHECK(back[k].origin == views[k].origin);
    CHECK(back[k].axis == views[k].axis);
    CHECK(back[k].up == views[k].up);
    CHECK(back[k].depth_mm == views[k].depth_mm);
  }
  const auto j = nlohmann::json::parse(io::views_to_json(views));
  for (const char* key : {"name", "origin", "axis", "up", "half_angle_deg", "depth_mm", "slab_half_thickness_mm"})
    CHECK(j[0].contains(key));
  CHECK_THROWS_AS(io::views_from_json("{}"), IoError);
  CHECK_THROWS_AS(io::views_from_json(R"([{"name":"XYZ"}])"), Error);
}

TEST_CASE("deformation artifacts") {
  test::TempDir dir("io_def");
  const DeformationSamples s{test::random_points(20, 2), test::random_points(20, 3, -5, 5)};
  io::write_samples_csv(dir.path() / "s.csv", s);
  CHECK(bytes_of(dir.path() / "s.csv").rfind("px,py,pz,vx,vy,vz\n", 0) == 0);
  const DeformationSamples sb = io::read_samples_csv(dir.path() / "s.csv");
  for (std::size_t i = 0; i < 20; ++i) CHECK(norm(sb.vectors[i] - s.vectors[i]) < 1e-6);

  const RBFField f{test::random_points(7, 4), test::random_points(7, 5), 12.5, 1e-8};
  io::write_rbf_json(dir.path() / "f.json", f);
  const RBFField fb = io::read_rbf_json(dir.path() / "f.json");
  CHECK(fb.centers == f.centers);
  CHECK(fb.coefficients == f.coefficients);
  CHECK(fb.bandwidth == f.bandwidth);
  CHECK(fb.ridge == f.ridge);

  AssignmentMatrix plan{1, 1, {1.0}, {1.0}, {1.0}, 12, true, 1e-8, 0.5};
  io::write_diagnostics_json(dir.path() / "d.json", plan);
  const auto dj = nlohmann::json::parse(bytes_of(dir.path() / "d.json"));
  CHECK(dj.at("iterations_used") == 12);
  CHECK(dj.at("converged") == true);
  CHECK(dj.contains("final_update"));
  CHECK(dj.contains("objective"));
}

TEST_CASE("grid binary layout") {
  test::TempDir dir("io_grid");
  std::vector<Vec3> v{{1, 2, 3}, {4, 5, 6}};
  const VectorGrid g(GridShape{1, 1, 2}, Aabb{{0, 0, 0}, {1, 2, 3}}, v);
  io::write_grid(dir.path() / "g.s2mf", g);
  const std::string raw = bytes_of(dir.path() / "g.s2mf");
  REQUIRE(raw.size() == 4 + 12 + 24 + 24);
  CHECK(raw.substr(0, 4) == "S2MF");
  std::uint32_t dims[3];
  std::memcpy(dims, raw.data() + 4, 12);
  CHECK(dims[0] == 1);
  CHECK(dims[1] == 1);
  CHECK(dims[2] == 2);
  float f[12];
  std::memcpy(f, raw.data() + 16, 48);
  CHECK(f[4] == 2.0f);   // maxy
  CHECK(f[6] == 1.0f);   // first vx
  CHECK(f[11] == 6.0f);  // last vz
  const VectorGrid back = io::read_grid(dir.path() / "g.s2mf");
  CHECK(back.shape() == g.shape());
  CHECK(back.values()[1] == Vec3{4, 5, 6});

  io::write_text(dir.path() / "t.s2mf", raw.substr(0, 30));
  CHECK_THROWS_AS(io::read_grid(dir.path() / "t.s2mf"), IoError);
  io::write_text(dir.path() / "m.s2mf", "XXXX" + raw.substr(4));
  CHECK_THROWS_AS(io::read_grid(dir.path() / "m.s2mf"), IoError);
}

TEST_CASE("clinical tables") {
  test::TempDir dir("io_clin");
  io::write_text(dir.path() / "p.csv", "patient_id,glps,ef\nA,-12.5,0.31\nB,,0.4\nC,-15,\n");
  const auto ps = io::read_patients_csv(dir.path() / "p.csv");
  REQUIRE(ps.size() == 3);
  CHECK(ps[0].glps == -12.5);
  CHECK(ps[0].ef == 0.31);
  CHECK_FALSE(ps[1].glps.has_value());
  CHECK_FALSE(ps[2].ef.has_value());
  io::write_text(dir.path() / "bad.csv", "patient_id,glps,ef\nA,-12.5,31\n");
  CHECK_THROWS_AS(io::read_patients_csv(dir.path() / "bad.csv"), IoError);

  io::write_text(dir.path() / "v.csv", "patient_id,edv_mm3,esv_mm3\nA,100,70\n");
  const auto vs = io::read_volumes_csv(dir.path() / "v.csv");
  REQUIRE(vs.size() == 1);
  CHECK(vs[0].esv_mm3 == 70);

  io::write_report_csv(dir.path() / "r.csv", {{"A", 100.0, 70.0, 30.0, 30.0}, {"B", {}, {}, {}, 31.0}});
  CHECK(bytes_of(dir.path() / "r.csv") ==
        "patient_id,edv_mm3,esv_mm3,sv_mm3,ef_percent\nA,100.000000,70.000000,30.000000,30.000000\nB,,,,31.000000\n");

  io::write_loss_report_json(dir.path() / "l.json", make_loss_report(-1, -2, 0.3, 10));
  const auto lj = nlohmann::json::parse(bytes_of(dir.path() / "l.json"));
  for (const char* key : {"gan_xy", "gan_yx", "cycle", "lambda", "total"}) CHECK(lj.contains(key));
}

TEST_CASE("checksums") {
  test::TempDir dir("io_sum");
  io::write_text(dir.path() / "empty", "");
  CHECK(io::file_checksum(dir.path() / "empty") == "cbf29ce484222325");
  io::write_text(dir.path() / "a", "a");
  CHECK(io::file_checksum(dir.path() / "a") == "af63dc4c8601ec8c");
  io::write_text(dir.path() / "sub/dir/x.txt", "x");  // parents are created
  CHECK(fs::exists(dir.path() / "sub/dir/x.txt"));
}

}  // TEST_SUITE
