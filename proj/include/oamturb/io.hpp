#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "oamturb/capacity.hpp"
#include "oamturb/channel.hpp"
#include "oamturb/field.hpp"
#include "oamturb/turbulence.hpp"

namespace oamturb {

namespace fs = std::filesystem;

/// Fixed 12-significant-digit rendering used for every CSV number.
std::string format_number(double value);

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& doc);

/// 8-bit grayscale PNG; `pixels` holds `height` rows of `width` bytes, top row first.
void write_png_gray8(const fs::path& path, int width, int height, std::span<const std::uint8_t> pixels);

/// Intensity scaled to the field maximum, top row = +y.
void write_intensity_png(const fs::path& path, const ComplexField& field);
/// arg in (-pi, pi] mapped linearly onto 0..255.
void write_phase_png(const fs::path& path, const ComplexField& field);
/// resolution^2 rows of x_index,y_index,real,imag.
void write_field_csv(const fs::path& path, const ComplexField& field);

/// Phase wrapped to [0, 2 pi) mapped onto 0..255.
void write_screen_png(const fs::path& path, const PhaseScreen& screen);
/// Unwrapped phase as x_index,y_index,phase.
void write_screen_csv(const fs::path& path, const PhaseScreen& screen);

/// `<stem>.json` next to a CSV output.
fs::path sidecar_path(const fs::path& csv_path);

/// Header `detected,<sent indices>`; one row per detected index, plus `loss`
/// under erasure normalization.
void write_matrix_csv(const fs::path& path, const CrosstalkMatrix& matrix);
nlohmann::json matrix_sidecar(const CrosstalkMatrix& matrix);
/// CSV plus sidecar.
void write_matrix(const fs::path& csv_path, const CrosstalkMatrix& matrix);

struct MatrixTable {
  std::vector<int> sent;
  std::vector<int> detected;
  bool loss_row = false;
  Eigen::MatrixXd values;
};

MatrixTable read_matrix_csv(const fs::path& path);
/// Reconstructs a matrix written by write_matrix (requires the sidecar).
CrosstalkMatrix read_matrix(const fs::path& csv_path);

/// Measured sorter response in the matrix CSV format. Sent and detected
/// indices must both equal modes.indices(); a loss row is rejected.
SorterModel load_sorter_csv(const fs::path& path, const ModeSet& modes);

/// d_over_r0,capacity_bits,err_lo,err_hi,converged
void write_curve_csv(const fs::path& path, const CapacityCurve& curve);
nlohmann::json sweep_config_json(const SweepConfig& config);
nlohmann::json curve_sidecar(const CapacityCurve& curve);
void write_curve(const fs::path& csv_path, const CapacityCurve& curve);

struct CurveTable {
  std::vector<double> d_over_r0;
  std::vector<double> capacity;
  std::vector<double> err_lo;
  std::vector<double> err_hi;
  std::vector<bool> converged;
};

CurveTable read_curve_csv(const fs::path& path);

} // namespace oamturb
