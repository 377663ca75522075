#include <doctest.h>

#include <filesystem>

#include <fmt/format.h>

#include "oamturb/error.hpp"
#include "oamturb/experiments.hpp"
#include "oamturb/io.hpp"
#include "oamturb/svg.hpp"

using namespace oamturb;
using nlohmann::json;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("oamturb_exp_" + name);
  fs::remove_all(p);
  return p;
}

} // namespace

TEST_SUITE("experiments") {

TEST_CASE("config parsing rejects unknown keys and bad types") {
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "fig4_sweep"}, {"colour", "red"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "fig4_sweep"}, {"parameters", {{"sortr", "ideal"}}}}),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "fig4_sweep"}, {"parameters", {{"screens", 2.5}}}}),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "fig6"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"parameters", json::object()}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "fig4_sweep"}, {"parameters", {{"strengths", {1, 0.5}}}}}),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "fig4_sweep"}, {"parameters", {{"normalization", "subunital"}}}}),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(json{{"experiment", "fig4_sweep"}, {"parameters", {{"resolution", 500}}}}),
                  ConfigError);
}

TEST_CASE("config round trip and defaults") {
  const auto d4 = ExperimentConfig::defaults(ExperimentKind::fig4_sweep);
  CHECK(d4.parameters.strengths.size() == 31);
  CHECK(d4.parameters.strengths.front() == 0.0);
  CHECK(d4.parameters.sorter == "sinc");
  const auto d5 = ExperimentConfig::defaults(ExperimentKind::fig5_spacing);
  CHECK(d5.parameters.strengths.size() == 41);
  CHECK(d5.parameters.strengths[1] == doctest::Approx(0.01));

  auto cfg = ExperimentConfig::from_json(
      json{{"experiment", "fig5_spacing"}, {"seed", 7}, {"parameters", {{"strengths", "0.1:1:4:log"}, {"threads", 3}}}});
  CHECK(cfg.seed == 7);
  CHECK(cfg.parameters.strengths.size() == 4);
  CHECK(cfg.parameters.threads == 3);
  const json snap = cfg.to_json();
  CHECK_FALSE(snap.at("parameters").contains("threads"));
  const auto again = ExperimentConfig::from_json(snap);
  CHECK(again.to_json() == snap);
  CHECK(again.parameters.strengths == cfg.parameters.strengths);
}

TEST_CASE("fig4 outputs are reproducible and thread independent") {
  const fs::path a = scratch_dir("fig4a"), b = scratch_dir("fig4b");
  auto cfg = ExperimentConfig::defaults(ExperimentKind::fig4_sweep);
  cfg.parameters.strengths = {0.0, 0.3, 1.0, 3.0, 10.0};
  cfg.output_dir = a;
  cfg.parameters.threads = 1;
  CHECK(run_experiment(cfg) == 0);
  cfg.output_dir = b;
  cfg.parameters.threads = 4;
  CHECK(run_experiment(cfg) == 0);
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    if (name == "config.json") continue;
    CHECK(read_text(entry.path()) == read_text(b / name));
    ++compared;
  }
  CHECK(compared == 14);  // 5 curves + baseline, each with sidecar, crossings, svg

  const auto crossings = read_text(a / "crossings.csv");
  CHECK(crossings.rfind("curve,crossing_d_over_r0,non_monotone\n", 0) == 0);
  // sinc sorter keeps N = 3 below one bit from the start
  CHECK(crossings.find("N=3,none,0") != std::string::npos);

  // re-running from the snapshot reproduces the CSVs
  auto snap = ExperimentConfig::load(a / "config.json");
  snap.output_dir = scratch_dir("fig4c");
  run_experiment(snap);
  CHECK(read_text(a / "capacity_N7.csv") == read_text(snap.output_dir / "capacity_N7.csv"));
}

TEST_CASE("plots are derived from the CSVs") {
  const fs::path dir = scratch_dir("fig5");
  auto cfg = ExperimentConfig::defaults(ExperimentKind::fig5_spacing);
  cfg.output_dir = dir;
  const auto rep = run_fig5(cfg);
  CHECK(rep.ordering_holds);
  CHECK(rep.plateaus.back() >= 1.5);
  REQUIRE(rep.onset_ratio);
  CHECK(*rep.onset_ratio >= 5.0);

  std::vector<PlotSeries> series;
  for (int ms : {1, 2, 4}) {
    const auto t = read_curve_csv(dir / fmt::format("capacity_N3_MS{}.csv", ms));
    series.push_back({fmt::format("N=3 MS={}", ms), t.d_over_r0, t.capacity, t.err_lo, t.err_hi, false});
  }
  const auto b = read_curve_csv(dir / "polarization.csv");
  series.push_back({"polarization", b.d_over_r0, b.capacity, b.err_lo, b.err_hi, true});
  PlotSpec spec;
  spec.title = "Mode spacing, N=3 (sinc sorter)";
  CHECK(render_svg(spec, series) == read_text(dir / "fig5.svg"));
}

TEST_CASE("svg emitter basics") {
  PlotSpec spec;
  spec.title = "a < b";
  std::vector<PlotSeries> s{{"one", {0.1, 1.0, 10.0}, {1.0, 0.5, 0.1}, {0.1, 0.1, 0.0}, {0.1, 0.2, 0.0}, false}};
  const std::string svg = render_svg(spec, s);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("a &lt; b") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find(">10<") != std::string::npos);
  std::vector<PlotSeries> bad{{"x", {1.0}, {}, {}, {}, false}};
  CHECK_THROWS(render_svg(spec, bad));
}

TEST_CASE("galleries and crosstalk table") {
  auto cfg = ExperimentConfig::defaults(ExperimentKind::screen_gallery);
  cfg.parameters.resolution = 64;
  cfg.output_dir = scratch_dir("gallery");
  CHECK(run_screen_gallery(cfg).size() == 4);
  cfg.experiment = ExperimentKind::mode_gallery;
  CHECK(run_mode_gallery(cfg).size() == 2 * (4 + 5));
  cfg = ExperimentConfig::defaults(ExperimentKind::crosstalk_table);
  cfg.output_dir = scratch_dir("table");
  const auto files = run_crosstalk_table(cfg);
  const auto m = read_matrix(files.front());
  CHECK(m.modes.dimension == 11);
  CHECK(m.column_sums().isApproxToConstant(1.0, 1e-9));
}

}
