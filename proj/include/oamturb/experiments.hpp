#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oamturb/capacity.hpp"

namespace oamturb {

enum class ExperimentKind { fig4_sweep, fig5_spacing, screen_gallery, mode_gallery, crosstalk_table, validation };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment(std::string_view text);

/// Every tunable of every experiment. Keys absent from a config document keep
/// these defaults; experiment-specific defaults (sorter, grid) are applied by
/// ExperimentConfig::defaults.
struct ExperimentParameters {
  std::vector<int> dimensions{3, 5, 7, 9, 11};
  std::vector<int> spacings{1, 2, 4};
  int dimension = 3;
  int spacing = 1;
  int center = 0;
  std::string sorter = "sinc";
  std::string normalization = "postselected";
  std::string method = "analytic";
  std::string projector = "oam_subspace";
  std::vector<double> strengths;  ///< explicit D/r0 grid; empty = experiment default
  int screens = 20;
  int subharmonics = 3;
  int resolution = 512;
  double physical_width = 2.0;
  double aperture_radius = 0.5;
  double quad_tol = 1e-8;
  double ba_tol = 1e-9;
  int ba_max_iter = 10000;
  double d_over_r0 = 5.12;
  std::vector<double> gallery_strengths{5.12, 10.25};
  std::vector<int> oam_indices{0, 1, 2, 5};
  int ang_dimension = 5;
  unsigned threads = 0;  ///< never affects outputs, so it is not part of the snapshot
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::fig4_sweep;
  ExperimentParameters parameters;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";

  /// Defaults for a given experiment (fig4: sinc sorter, {0} + 30 log points
  /// on [0.1, 30]; fig5: N = 3, {0} + 40 log points on [0.01, 30]; validation:
  /// 200 screens, N = 11).
  static ExperimentConfig defaults(ExperimentKind kind);
  /// Overlays a JSON document on defaults(kind of the document). Unknown keys
  /// and wrongly typed values raise ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& doc);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Fully resolved document: feeding it back to from_json reproduces the run.
  nlohmann::json to_json() const;

  void validate() const;
  /// SweepConfig for one (N, MS) pair built from the shared parameters.
  SweepConfig sweep(int dimension, int spacing) const;
  GridSpec grid() const;
};

/// Applies a partial "parameters" object (e.g. from CLI flags) on top of cfg.
void apply_overrides(ExperimentConfig& cfg, const nlohmann::json& parameters);

struct CrossingRow {
  std::string label;
  std::optional<double> d_over_r0;
  bool non_monotone = false;
};

struct Fig4Result {
  std::vector<CapacityCurve> curves;
  CapacityCurve baseline;
  std::vector<CrossingRow> crossings;
  std::vector<std::filesystem::path> files;
};

struct Fig5Report {
  std::vector<CapacityCurve> curves;  ///< in order of parameters.spacings
  CapacityCurve baseline;
  bool ordering_holds = false;        ///< C(MS_{k+1}) >= C(MS_k) - eps at every point
  double worst_ordering_violation = 0.0;
  std::vector<double> plateaus;       ///< capacity at the lowest strength
  std::vector<std::optional<double>> onsets;  ///< first drop below 0.95 * plateau
  std::optional<double> onset_ratio;          ///< onset(last) / onset(first)
  nlohmann::json to_json() const;
  std::vector<std::filesystem::path> files;
};

/// Analytic (or MC) capacity curves for every N, the polarization baseline,
/// 1-bit crossings and a log-x SVG re-plotted from the written CSVs.
Fig4Result run_fig4(const ExperimentConfig& cfg);

/// Mode-spacing curves for N = parameters.dimension and every spacing.
Fig5Report run_fig5(const ExperimentConfig& cfg);

/// Wrapped-phase PNG and raw CSV for each gallery strength.
std::vector<std::filesystem::path> run_screen_gallery(const ExperimentConfig& cfg);

/// Intensity and phase PNGs of OAM modes and of every ANG mode of one dimension.
std::vector<std::filesystem::path> run_mode_gallery(const ExperimentConfig& cfg);

/// Crosstalk matrix (after sorter and normalization) at parameters.d_over_r0.
std::vector<std::filesystem::path> run_crosstalk_table(const ExperimentConfig& cfg);

struct ValidationCheck {
  std::string module;
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string detail;
  /// Set for checks recorded as unattainable: they still count as failures.
  bool known_failure = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  nlohmann::json montecarlo_table;
  bool all_passed() const;
  nlohmann::json to_json() const;
};

/// Runs the turbulence, channel and capacity invariants and writes
/// validation.json. Any failed check makes all_passed() false.
ValidationReport run_validation(const ExperimentConfig& cfg);

/// Dispatches on cfg.experiment and writes config.json into the output dir.
/// Returns the process exit code contribution (0, or 2 for failed validation).
int run_experiment(const ExperimentConfig& cfg);

} // namespace oamturb
