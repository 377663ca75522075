#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "oamturb/grid.hpp"

namespace oamturb {

/// Dimensionless turbulence strength D/r0. Zero is the identity channel.
struct TurbulenceStrength {
  double d_over_r0 = 0.0;

  void validate() const;
  bool is_identity() const { return d_over_r0 == 0.0; }
  /// Fried parameter r0 in meters for the aperture diameter D = 2R of `grid`.
  double fried_r0(const GridSpec& grid) const;
};

enum class Spectrum { kolmogorov };

struct ScreenSynthesisOptions {
  /// 0 selects plain FFT filtering with no low-frequency compensation.
  int subharmonic_levels = 3;
  Spectrum spectrum = Spectrum::kolmogorov;

  void validate() const;
  bool operator==(const ScreenSynthesisOptions&) const = default;
};

/// Coefficient of the Kolmogorov phase structure function, D(r) = 6.88 (r/r0)^{5/3}.
inline constexpr double kolmogorov_structure_coefficient = 6.88;

/// Coefficient c of the phase PSD c r0^{-5/3} f^{-11/3} (f in cycles per
/// meter) whose structure function is exactly 6.88 (r/r0)^{5/3}; c ~ 0.02288.
double kolmogorov_psd_coefficient();

double kolmogorov_structure_function(double separation, double r0);

/// Real phase sample (radians) on a grid, row-major with row = y index.
class PhaseScreen {
public:
  PhaseScreen(const GridSpec& grid, std::vector<double> phase, TurbulenceStrength strength, std::uint64_t seed,
              ScreenSynthesisOptions options);

  /// The D/r0 = 0 screen (phi = 0 everywhere).
  static PhaseScreen zero(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  std::span<const double> phase() const { return phase_; }
  double at(int ix, int iy) const {
    return phase_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid_.resolution) +
                  static_cast<std::size_t>(ix)];
  }
  TurbulenceStrength strength() const { return strength_; }
  std::uint64_t seed() const { return seed_; }
  const ScreenSynthesisOptions& options() const { return options_; }

  /// Phase wrapped into [0, 2 pi).
  std::vector<double> wrapped() const;

  /// Bilinear interpolation at physical coordinates (x, y), clamped to the
  /// outermost sample centers.
  double sample(double x, double y) const;

  /// True when r0 spans fewer than two pixels.
  bool under_resolved() const;

private:
  GridSpec grid_;
  std::vector<double> phase_;
  TurbulenceStrength strength_;
  std::uint64_t seed_;
  ScreenSynthesisOptions options_;
};

/// Draws a zero-mean Kolmogorov screen by spectral filtering of white complex
/// Gaussian noise, with low-frequency compensation when
/// opts.subharmonic_levels > 0. The result is a pure function of the
/// arguments. Throws for d_over_r0 <= 0.
PhaseScreen generate_screen(const GridSpec& grid, TurbulenceStrength strength, std::uint64_t seed,
                            const ScreenSynthesisOptions& opts = {});

/// Independent seed for member `index` of an ensemble rooted at `seed`.
std::uint64_t ensemble_seed(std::uint64_t seed, std::uint64_t index);

/// Pixel-pair selection for structure-function estimates.
enum class PairBinning {
  annulus,  ///< every offset whose length is within half a pixel of the separation
  x_axis,   ///< offsets (+-s, 0) only
  y_axis,   ///< offsets (0, +-s) only
};

struct StructureSample {
  double separation = 0.0;  ///< meters
  double value = 0.0;       ///< mean squared phase difference, rad^2
  double pairs = 0.0;       ///< ordered pixel pairs contributing, summed over screens
};

/// Streaming ensemble estimator of <[phi(r1) - phi(r2)]^2>.
///
/// Sums over all pixel pairs at every offset are accumulated in the Fourier
/// domain on a zero-padded 2n x 2n grid, so each screen costs one FFT and the
/// result equals the brute-force pair average exactly.
class StructureFunctionEstimator {
public:
  explicit StructureFunctionEstimator(const GridSpec& grid);
  ~StructureFunctionEstimator();
  StructureFunctionEstimator(StructureFunctionEstimator&&) noexcept;
  StructureFunctionEstimator& operator=(StructureFunctionEstimator&&) noexcept;

  void add(const PhaseScreen& screen);
  void add(std::span<const double> phase);

  std::size_t screen_count() const;

  /// Separations in meters within (0, physical_width / 2].
  std::vector<StructureSample> evaluate(std::span<const double> separations,
                                        PairBinning binning = PairBinning::annulus) const;

private:
  struct State;
  std::unique_ptr<State> state_;
};

/// One-shot ensemble structure function. Throws on an empty ensemble, mixed
/// grids, or separations outside the grid.
std::vector<StructureSample> structure_function(std::span<const PhaseScreen> screens,
                                                std::span<const double> separations,
                                                PairBinning binning = PairBinning::annulus);

} // namespace oamturb
