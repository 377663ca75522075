#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oamturb/error.hpp"
#include "oamturb/io.hpp"

using namespace oamturb;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oamturb_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

} // namespace

TEST_SUITE("io") {

TEST_CASE("number formatting") {
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(0.1234567890123456) == "0.123456789012");
  CHECK(format_number(3.4594316186372973) == "3.45943161864");
  CHECK(format_number(1.5e-20) == "1.5e-20");
}

TEST_CASE("matrix round trip with sidecar") {
  const fs::path dir = scratch_dir("matrix");
  auto m = montecarlo_matrix({3, 1, 2}, {2.0}, 4, 9, GridSpec{128, 2.0, 0.5}, {});
  m = normalize(m, Normalization::erasure);
  write_matrix(dir / "m.csv", m);
  const std::string text = read_text(dir / "m.csv");
  CHECK(text.rfind("detected,-1,1,3\n", 0) == 0);
  CHECK(text.find("\nloss,") != std::string::npos);

  const CrosstalkMatrix back = read_matrix(dir / "m.csv");
  CHECK(back.modes == m.modes);
  CHECK(back.normalization == Normalization::erasure);
  CHECK(back.provenance.kind == Provenance::Kind::montecarlo);
  CHECK(back.provenance.seed == 9);
  CHECK(back.provenance.num_screens == 4);
  CHECK((back.entries - m.entries).cwiseAbs().maxCoeff() < 1e-11);
  REQUIRE(back.standard_errors);
  CHECK((*back.standard_errors - *m.standard_errors).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("measured sorter loads from the matrix format") {
  const fs::path dir = scratch_dir("sorter");
  write_text(dir / "s.csv", "detected,-1,0,1\n-1,0.9,0.05,0\n0,0.1,0.9,0.1\n1,0,0.05,0.9\n");
  const auto s = load_sorter_csv(dir / "s.csv", {3, 0, 1});
  CHECK(s.kind == SorterKind::measured);
  CHECK(s.response(1, 1) == 0.9);
  CHECK_THROWS_AS(load_sorter_csv(dir / "s.csv", {3, 0, 2}), ConfigError);
  write_text(dir / "bad.csv", "detected,-1,0,1\n-1,0.9,0.05,0\n0,0.1,0.9\n");
  CHECK_THROWS_AS(load_sorter_csv(dir / "bad.csv", {3, 0, 1}), ConfigError);
  write_text(dir / "over.csv", "detected,-1,0,1\n-1,0.9,0.5,0\n0,0.1,0.9,0.1\n1,0,0.05,0.9\n");
  CHECK_THROWS_AS(load_sorter_csv(dir / "over.csv", {3, 0, 1}), ConfigError);
  CHECK_THROWS_AS(load_sorter_csv(dir / "missing.csv", {3, 0, 1}), ConfigError);

  SorterSpec spec = SorterSpec::parse("file:" + (dir / "s.csv").string());
  CHECK(spec.build({3, 0, 1}).response(0, 0) == 0.9);
}

TEST_CASE("curve csv round trip") {
  const fs::path dir = scratch_dir("curve");
  SweepConfig c;
  const std::vector<double> s{0.0, 0.5, 2.0};
  const auto curve = capacity_sweep(c, s);
  write_curve(dir / "c.csv", curve);
  const auto t = read_curve_csv(dir / "c.csv");
  REQUIRE(t.d_over_r0.size() == 3);
  CHECK(t.d_over_r0[1] == 0.5);
  CHECK(t.capacity[2] == doctest::Approx(curve.points[2].result.capacity).epsilon(1e-11));
  CHECK(t.converged[0]);
  const auto side = nlohmann::json::parse(read_text(dir / "c.json"));
  CHECK(side.at("config").at("dimension") == 3);
  CHECK(side.at("config").at("sorter") == "sinc");
  CHECK(read_text(dir / "c.csv").rfind("d_over_r0,capacity_bits,err_lo,err_hi,converged\n", 0) == 0);
}

TEST_CASE("field and screen exports") {
  const fs::path dir = scratch_dir("images");
  const GridSpec g{64, 2.0, 0.5};
  const auto f = make_oam_mode(g, OamIndex{2});
  write_intensity_png(dir / "i.png", f);
  write_phase_png(dir / "p.png", f);
  write_field_csv(dir / "f.csv", f);
  const auto s = generate_screen(g, {3.0}, 1);
  write_screen_png(dir / "s.png", s);
  write_screen_csv(dir / "s.csv", s);

  std::ifstream png(dir / "i.png", std::ios::binary);
  char sig[8];
  png.read(sig, 8);
  CHECK(std::string(sig + 1, 3) == "PNG");

  const std::string csv = read_text(dir / "f.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 64 * 64 + 1);
  CHECK(csv.rfind("x_index,y_index,real,imag\n", 0) == 0);
  const std::string sc = read_text(dir / "s.csv");
  CHECK(std::count(sc.begin(), sc.end(), '\n') == 64 * 64 + 1);

  CHECK_THROWS(write_png_gray8(dir / "x.png", 4, 4, std::vector<std::uint8_t>(15)));
}

}
