// oamturb command-line front end.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "oamturb/capacity.hpp"
#include "oamturb/error.hpp"
#include "oamturb/experiments.hpp"
#include "oamturb/field.hpp"
#include "oamturb/io.hpp"
#include "oamturb/parallel.hpp"
#include "oamturb/turbulence.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace oamturb;

namespace {

constexpr int exit_validation = 2;
constexpr int exit_config = 3;
constexpr int exit_numerical = 4;

// Flags shared by the channel / capacity / experiment subcommands. Only flags
// the user actually passed end up in the override document.
struct CommonFlags {
  std::optional<int> n, spacing, center, screens, subharmonics, resolution;
  std::optional<unsigned> threads;
  std::optional<double> d_over_r0, width, aperture;
  std::optional<std::string> method, sorter, normalize, projector, strengths;

  void attach(CLI::App* app, bool with_strengths) {
    app->add_option("--n", n, "Number of detected modes N");
    app->add_option("--spacing", spacing, "Mode spacing MS");
    app->add_option("--center", center, "Central OAM index");
    app->add_option("--method", method, "analytic | mc");
    app->add_option("--sorter", sorter, "ideal | sinc | file:<path>");
    app->add_option("--normalize", normalize, "postselect | erasure");
    app->add_option("--projector", projector, "Monte Carlo projector: oam_subspace | vortex_mode");
    app->add_option("--screens", screens, "Screens per Monte Carlo estimate");
    app->add_option("--subharmonics", subharmonics, "Low-frequency compensation levels (0 = plain FFT)");
    app->add_option("--resolution", resolution, "Grid resolution in pixels (power of two)");
    app->add_option("--width", width, "Physical grid width in meters");
    app->add_option("--aperture", aperture, "Aperture radius in meters");
    app->add_option("--d-over-r0", d_over_r0, "Turbulence strength D/r0");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)");
    if (with_strengths) app->add_option("--strengths", strengths, "Strength grid lo:hi:count:log|lin");
  }

  json overrides() const {
    json j = json::object();
    if (n) j["dimension"] = *n;
    if (spacing) j["spacing"] = *spacing;
    if (center) j["center"] = *center;
    if (method) j["method"] = *method == "mc" ? std::string("montecarlo") : *method;
    if (sorter) j["sorter"] = *sorter;
    if (normalize) j["normalization"] = *normalize;
    if (projector) j["projector"] = *projector;
    if (screens) j["screens"] = *screens;
    if (subharmonics) j["subharmonics"] = *subharmonics;
    if (resolution) j["resolution"] = *resolution;
    if (width) j["physical_width"] = *width;
    if (aperture) j["aperture_radius"] = *aperture;
    if (d_over_r0) j["d_over_r0"] = *d_over_r0;
    if (threads) j["threads"] = *threads;
    if (strengths) j["strengths"] = *strengths;
    return j;
  }
};

ExperimentConfig build_config(ExperimentKind kind, const std::string& config_path, const CommonFlags& flags,
                              std::optional<std::uint64_t> seed, const std::string& out) {
  ExperimentConfig cfg = ExperimentConfig::defaults(kind);
  if (!config_path.empty()) {
    cfg = ExperimentConfig::load(config_path);
    if (cfg.experiment != kind)
      throw ConfigError(fmt::format("config is for experiment '{}', not '{}'", to_string(cfg.experiment), to_string(kind)));
  }
  apply_overrides(cfg, flags.overrides());
  if (seed) cfg.seed = *seed;
  if (!out.empty()) cfg.output_dir = out;
  cfg.validate();
  return cfg;
}

void print_files(const std::vector<fs::path>& files) {
  for (const auto& f : files) fmt::print("wrote {}\n", f.string());
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulate OAM channels through thin-phase Kolmogorov turbulence"};
  app.require_subcommand(1);

  // screen
  auto* screen = app.add_subcommand("screen", "Generate one phase screen (PNG of wrapped phase or CSV)");
  double screen_strength = 0.0;
  int screen_resolution = 512, screen_subharmonics = 3;
  double screen_width = 2.0, screen_aperture = 0.5;
  std::uint64_t screen_seed = 1;
  std::string screen_out;
  screen->add_option("--d-over-r0", screen_strength, "Turbulence strength D/r0")->required();
  screen->add_option("--resolution", screen_resolution, "Grid resolution in pixels");
  screen->add_option("--width", screen_width, "Physical grid width in meters");
  screen->add_option("--aperture", screen_aperture, "Aperture radius in meters");
  screen->add_option("--seed", screen_seed, "Random seed");
  screen->add_option("--subharmonics", screen_subharmonics, "Low-frequency compensation levels (0 = plain FFT)");
  screen->add_option("--out", screen_out, "Output path (.png or .csv)")->required();

  // mode
  auto* mode = app.add_subcommand("mode", "Render an OAM or ANG mode");
  std::optional<int> mode_oam, mode_ang;
  int mode_n = 11, mode_resolution = 512;
  double mode_width = 2.0, mode_aperture = 0.5;
  std::string mode_kind = "intensity", mode_out;
  auto* oam_opt = mode->add_option("--oam", mode_oam, "OAM index l");
  auto* ang_opt = mode->add_option("--ang", mode_ang, "ANG index n (needs --n)");
  oam_opt->excludes(ang_opt);
  mode->add_option("--n", mode_n, "ANG dimension N (odd)");
  mode->add_option("--resolution", mode_resolution, "Grid resolution in pixels");
  mode->add_option("--width", mode_width, "Physical grid width in meters");
  mode->add_option("--aperture", mode_aperture, "Aperture radius in meters");
  mode->add_option("--kind", mode_kind, "PNG content: intensity | phase")->check(CLI::IsMember({"intensity", "phase"}));
  mode->add_option("--out", mode_out, "Output path (.png or .csv)")->required();

  // crosstalk / capacity
  auto* crosstalk = app.add_subcommand("crosstalk", "Crosstalk matrix after sorter and normalization");
  CommonFlags xt_flags;
  std::optional<std::uint64_t> xt_seed;
  std::string xt_out;
  xt_flags.attach(crosstalk, false);
  crosstalk->add_option("--seed", xt_seed, "Monte Carlo seed");
  crosstalk->add_option("--out", xt_out, "Output CSV (a JSON sidecar is written next to it)")->required();

  auto* capacity = app.add_subcommand("capacity", "Capacity curve over a strength grid");
  CommonFlags cap_flags;
  std::optional<std::uint64_t> cap_seed;
  std::string cap_out;
  cap_flags.attach(capacity, true);
  capacity->add_option("--seed", cap_seed, "Monte Carlo seed");
  capacity->add_option("--out", cap_out, "Output CSV (a JSON sidecar is written next to it)")->required();

  // experiments
  struct ExperimentCommand {
    CLI::App* app;
    ExperimentKind kind;
    CommonFlags flags;
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
  };
  std::vector<ExperimentCommand> experiments;
  experiments.reserve(3);
  for (auto [name, kind, help] : {std::tuple{"fig4", ExperimentKind::fig4_sweep, "Capacity curves for N = 3..11"},
                                  std::tuple{"fig5", ExperimentKind::fig5_spacing, "Mode-spacing curves for N = 3"},
                                  std::tuple{"validate", ExperimentKind::validation,
                                             "Run every statistical and numerical check; JSON report"}}) {
    experiments.push_back({app.add_subcommand(name, help), kind, {}, {}, {}, {}});
    auto& e = experiments.back();
    e.flags.attach(e.app, true);
    e.app->add_option("--config", e.config, "Experiment config JSON")->check(CLI::ExistingFile);
    e.app->add_option("--out", e.out, "Output directory");
    e.app->add_option("--seed", e.seed, "Random seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config;
  }

  try {
    if (screen->parsed()) {
      const GridSpec grid{screen_resolution, screen_width, screen_aperture};
      const PhaseScreen s = generate_screen(grid, {screen_strength}, screen_seed, {screen_subharmonics});
      const fs::path out = screen_out;
      if (out.extension() == ".png") write_screen_png(out, s);
      else if (out.extension() == ".csv") write_screen_csv(out, s);
      else throw ConfigError("screen --out must end in .png or .csv");
      if (s.under_resolved()) fmt::print(stderr, "warning: r0 spans fewer than 2 pixels; screen is under-resolved\n");
      print_files({out});
    } else if (mode->parsed()) {
      if (!mode_oam && !mode_ang) throw ConfigError("mode needs --oam or --ang");
      const GridSpec grid{mode_resolution, mode_width, mode_aperture};
      const ComplexField f = mode_oam ? make_oam_mode(grid, OamIndex{*mode_oam}) : make_ang_mode(grid, AngIndex{*mode_ang, mode_n});
      const fs::path out = mode_out;
      if (out.extension() == ".png") {
        if (mode_kind == "phase") write_phase_png(out, f);
        else write_intensity_png(out, f);
      } else if (out.extension() == ".csv") {
        write_field_csv(out, f);
      } else {
        throw ConfigError("mode --out must end in .png or .csv");
      }
      print_files({out});
    } else if (crosstalk->parsed()) {
      const ExperimentConfig cfg = build_config(ExperimentKind::crosstalk_table, "", xt_flags, xt_seed, "");
      const auto& p = cfg.parameters;
      const CrosstalkMatrix m = channel_matrix(cfg.sweep(p.dimension, p.spacing), p.d_over_r0, resolve_threads(p.threads));
      write_matrix(xt_out, m);
      print_files({xt_out, sidecar_path(xt_out)});
    } else if (capacity->parsed()) {
      ExperimentConfig cfg = build_config(ExperimentKind::fig4_sweep, "", cap_flags, cap_seed, "");
      const auto& p = cfg.parameters;
      const CapacityCurve curve = capacity_sweep(cfg.sweep(p.dimension, p.spacing), p.strengths);
      write_curve(cap_out, curve);
      for (const auto& pt : curve.points)
        fmt::print("D/r0={:<10} C={:.6f}{}\n", format_number(pt.d_over_r0), pt.result.capacity,
                   pt.result.converged ? "" : " (not converged)");
      print_files({cap_out, sidecar_path(cap_out)});
    } else {
      for (auto& e : experiments) {
        if (!e.app->parsed()) continue;
        const ExperimentConfig cfg = build_config(e.kind, e.config, e.flags, e.seed, e.out);
        const int code = run_experiment(cfg);
        if (e.kind == ExperimentKind::validation) {
          const json report = json::parse(read_text(cfg.output_dir / "validation.json"));
          for (const auto& c : report.at("checks"))
            fmt::print("{} {}/{} measured={:.6g} threshold={:.6g}{}\n", c.at("passed").get<bool>() ? "PASS" : "FAIL",
                       c.at("module").get<std::string>(), c.at("name").get<std::string>(), c.at("measured").get<double>(),
                       c.at("threshold").get<double>(), c.at("known_failure").get<bool>() ? " (known unattainable)" : "");
        }
        fmt::print("outputs in {}\n", cfg.output_dir.string());
        return code == 0 ? 0 : exit_validation;
      }
    }
  } catch (const ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return exit_config;
  } catch (const NumericalError& e) {
    fmt::print(stderr, "numerical error: {}\n", e.what());
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "invalid input: {}\n", e.what());
    return exit_config;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
