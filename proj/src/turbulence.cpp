#include "oamturb/turbulence.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "fft.hpp"
#include "oamturb/quadrature.hpp"

namespace oamturb {

namespace {

using detail::FftBuffer;
using detail::FftSign;
using std::numbers::pi;

// FFT cells with max(|kx|, |ky|) <= kLowRing are replaced by explicit
// components when low-frequency compensation is enabled.
constexpr int kLowRing = 2;
constexpr int kCellSubdivisions = 64;

/// PSD mass of the unit-spacing cell centred on (a, b), tabulated on a
/// kCellSubdivisions^2 sub-grid. f^{-11/3} is scale free, so a cell of spacing
/// h carries h^{-5/3} times the unit-cell mass and shares its shape.
struct CellTable {
  double total = 0.0;
  std::vector<double> cumulative;
};

const CellTable& cell_table(int a, int b) {
  constexpr int width = 2 * kLowRing + 1;
  static const std::array<CellTable, width * width> tables = [] {
    std::array<CellTable, width * width> out;
    const double step = 1.0 / kCellSubdivisions;
    for (int cb = -kLowRing; cb <= kLowRing; ++cb) {
      for (int ca = -kLowRing; ca <= kLowRing; ++ca) {
        if (ca == 0 && cb == 0) continue;
        CellTable& t = out[(cb + kLowRing) * width + (ca + kLowRing)];
        t.cumulative.reserve(kCellSubdivisions * kCellSubdivisions);
        double acc = 0.0;
        for (int sy = 0; sy < kCellSubdivisions; ++sy) {
          const double fy = cb - 0.5 + (sy + 0.5) * step;
          for (int sx = 0; sx < kCellSubdivisions; ++sx) {
            const double fx = ca - 0.5 + (sx + 0.5) * step;
            acc += std::pow(fx * fx + fy * fy, -11.0 / 6.0) * step * step;
            t.cumulative.push_back(acc);
          }
        }
        t.total = acc;
      }
    }
    return out;
  }();
  return tables[(b + kLowRing) * width + (a + kLowRing)];
}

/// Integral of cos(t)^{-1/3} over [0, pi/4]; enters the closed-form
/// quadratic moment of f^{-11/3} over a square centred on the origin.
double tilt_angle_integral() {
  static const double value = GaussLegendreRule::make(32).integrate(
      [](double t) { return std::pow(std::cos(t), -1.0 / 3.0); }, 0.0, pi / 4.0);
  return value;
}

struct Component {
  double fx, fy;
  std::complex<double> amplitude;
};

class ScreenSynthesizer {
public:
  ScreenSynthesizer(const GridSpec& grid, double psd_scale, std::uint64_t seed)
      : grid_(grid), psd_scale_(psd_scale), rng_(seed) {}

  std::vector<double> fft_band(bool skip_low_ring) {
    const int n = grid_.resolution;
    const double df = 1.0 / grid_.physical_width;
    FftBuffer spectrum(static_cast<std::size_t>(n) * n);
    for (int iy = 0; iy < n; ++iy) {
      const int ky = iy < n / 2 ? iy : iy - n;
      for (int ix = 0; ix < n; ++ix) {
        const int kx = ix < n / 2 ? ix : ix - n;
        if (kx == 0 && ky == 0) continue;
        if (skip_low_ring && std::max(std::abs(kx), std::abs(ky)) <= kLowRing) continue;
        const double f = df * std::hypot(kx, ky);
        const double amp = std::sqrt(psd_scale_ * std::pow(f, -11.0 / 3.0)) * df;
        const double re = gauss_(rng_);
        const double im = gauss_(rng_);
        spectrum[static_cast<std::size_t>(iy) * n + ix] = {re * amp, im * amp};
      }
    }
    detail::fft2d_inplace(spectrum, n, n, FftSign::backward);
    std::vector<double> phase(spectrum.size());
    for (std::size_t i = 0; i < phase.size(); ++i) phase[i] = spectrum[i].real();
    return phase;
  }

  /// Cell (a, b) of spacing h: exact cell power, frequency drawn from the
  /// PSD restricted to the cell.
  Component cell_component(int a, int b, double spacing) {
    const CellTable& table = cell_table(a, b);
    const double target = uniform_(rng_) * table.total;
    const auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), target);
    const auto sub = std::min<std::ptrdiff_t>(it - table.cumulative.begin(),
                                              static_cast<std::ptrdiff_t>(table.cumulative.size()) - 1);
    const int sx = static_cast<int>(sub % kCellSubdivisions);
    const int sy = static_cast<int>(sub / kCellSubdivisions);
    const double step = 1.0 / kCellSubdivisions;
    const double ux = uniform_(rng_);
    const double uy = uniform_(rng_);
    const double fx = (a - 0.5 + (sx + ux) * step) * spacing;
    const double fy = (b - 0.5 + (sy + uy) * step) * spacing;
    const double power = psd_scale_ * std::pow(spacing, -5.0 / 3.0) * table.total;
    const double re = gauss_(rng_);
    const double im = gauss_(rng_);
    return {fx, fy, std::complex<double>(re, im) * std::sqrt(power)};
  }

  void add_component(std::vector<double>& phase, const Component& c) const {
    const int n = grid_.resolution;
    std::vector<std::complex<double>> ex(n), ey(n);
    for (int i = 0; i < n; ++i) {
      const double x = grid_.coordinate(i);
      ex[i] = std::polar(1.0, 2.0 * pi * c.fx * x);
      ey[i] = std::polar(1.0, 2.0 * pi * c.fy * x);
    }
    for (int iy = 0; iy < n; ++iy) {
      const std::complex<double> row = c.amplitude * ey[iy];
      double* out = phase.data() + static_cast<std::size_t>(iy) * n;
      for (int ix = 0; ix < n; ++ix) out[ix] += row.real() * ex[ix].real() - row.imag() * ex[ix].imag();
    }
  }

  /// Random tilt carrying the quadratic PSD moment of the innermost square
  /// cell of spacing h (half-width h/2) that no component covers.
  void add_tilt(std::vector<double>& phase, double spacing) {
    const double half = 0.5 * spacing;
    const double variance = psd_scale_ * 12.0 * std::cbrt(half) * tilt_angle_integral();
    const double sigma = std::sqrt(variance);
    const double tx = gauss_(rng_) * sigma;
    const double ty = gauss_(rng_) * sigma;
    const int n = grid_.resolution;
    for (int iy = 0; iy < n; ++iy) {
      const double y = grid_.coordinate(iy);
      double* out = phase.data() + static_cast<std::size_t>(iy) * n;
      for (int ix = 0; ix < n; ++ix) out[ix] += 2.0 * pi * (tx * grid_.coordinate(ix) + ty * y);
    }
  }

private:
  GridSpec grid_;
  double psd_scale_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_;
  std::uniform_real_distribution<double> uniform_;
};

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

void TurbulenceStrength::validate() const {
  if (!(d_over_r0 >= 0.0) || !std::isfinite(d_over_r0))
    throw std::invalid_argument("turbulence strength D/r0 must be finite and non-negative");
}

double TurbulenceStrength::fried_r0(const GridSpec& grid) const {
  validate();
  if (is_identity()) return std::numeric_limits<double>::infinity();
  return grid.aperture_diameter() / d_over_r0;
}

void ScreenSynthesisOptions::validate() const {
  if (subharmonic_levels < 0 || subharmonic_levels > 8)
    throw std::invalid_argument("subharmonic_levels must lie in [0, 8]");
}

double kolmogorov_psd_coefficient() {
  // Structure function of c f^{-11/3}: 4 pi c (2 pi r)^{5/3} I with
  // I = int_0^inf u^{-8/3} (1 - J0(u)) du = -Gamma(-5/6) / (2^{8/3} Gamma(11/6)).
  static const double value = [] {
    const double integral = -std::tgamma(-5.0 / 6.0) / (std::pow(2.0, 8.0 / 3.0) * std::tgamma(11.0 / 6.0));
    return kolmogorov_structure_coefficient / (4.0 * pi * std::pow(2.0 * pi, 5.0 / 3.0) * integral);
  }();
  return value;
}

double kolmogorov_structure_function(double separation, double r0) {
  return kolmogorov_structure_coefficient * std::pow(std::abs(separation) / r0, 5.0 / 3.0);
}

PhaseScreen::PhaseScreen(const GridSpec& grid, std::vector<double> phase, TurbulenceStrength strength,
                         std::uint64_t seed, ScreenSynthesisOptions options)
    : grid_(grid), phase_(std::move(phase)), strength_(strength), seed_(seed), options_(options) {
  grid_.validate();
  strength_.validate();
  if (phase_.size() != static_cast<std::size_t>(grid_.resolution) * static_cast<std::size_t>(grid_.resolution))
    throw std::invalid_argument("PhaseScreen: phase array does not match grid resolution");
}

PhaseScreen PhaseScreen::zero(const GridSpec& grid) {
  return PhaseScreen(grid,
                     std::vector<double>(static_cast<std::size_t>(grid.resolution) * grid.resolution, 0.0),
                     TurbulenceStrength{0.0}, 0, ScreenSynthesisOptions{});
}

std::vector<double> PhaseScreen::wrapped() const {
  std::vector<double> out(phase_.size());
  for (std::size_t i = 0; i < phase_.size(); ++i) {
    double w = std::fmod(phase_[i], 2.0 * pi);
    if (w < 0.0) w += 2.0 * pi;
    if (w >= 2.0 * pi) w = 0.0;
    out[i] = w;
  }
  return out;
}

double PhaseScreen::sample(double x, double y) const {
  const int n = grid_.resolution;
  const double h = grid_.pixel_size();
  const double u = std::clamp(x / h + 0.5 * n - 0.5, 0.0, n - 1.0);
  const double v = std::clamp(y / h + 0.5 * n - 0.5, 0.0, n - 1.0);
  const int i0 = std::min(static_cast<int>(u), n - 2);
  const int j0 = std::min(static_cast<int>(v), n - 2);
  const double tx = u - i0;
  const double ty = v - j0;
  const double p00 = at(i0, j0), p10 = at(i0 + 1, j0);
  const double p01 = at(i0, j0 + 1), p11 = at(i0 + 1, j0 + 1);
  return (1.0 - ty) * ((1.0 - tx) * p00 + tx * p10) + ty * ((1.0 - tx) * p01 + tx * p11);
}

bool PhaseScreen::under_resolved() const {
  if (strength_.is_identity()) return false;
  return strength_.fried_r0(grid_) < 2.0 * grid_.pixel_size();
}

PhaseScreen generate_screen(const GridSpec& grid, TurbulenceStrength strength, std::uint64_t seed,
                            const ScreenSynthesisOptions& opts) {
  grid.validate();
  strength.validate();
  opts.validate();
  if (strength.is_identity())
    throw std::invalid_argument("generate_screen: D/r0 = 0 is the identity channel; use PhaseScreen::zero");

  const double r0 = strength.fried_r0(grid);
  const double psd_scale = kolmogorov_psd_coefficient() * std::pow(r0, -5.0 / 3.0);
  const bool compensate = opts.subharmonic_levels > 0;

  ScreenSynthesizer synth(grid, psd_scale, seed);
  std::vector<double> phase = synth.fft_band(compensate);

  if (compensate) {
    const double df = 1.0 / grid.physical_width;
    std::vector<Component> components;
    for (int b = -kLowRing; b <= kLowRing; ++b)
      for (int a = -kLowRing; a <= kLowRing; ++a)
        if (a != 0 || b != 0) components.push_back(synth.cell_component(a, b, df));
    double spacing = df;
    for (int level = 1; level <= opts.subharmonic_levels; ++level) {
      spacing /= 3.0;
      for (int b = -1; b <= 1; ++b)
        for (int a = -1; a <= 1; ++a)
          if (a != 0 || b != 0) components.push_back(synth.cell_component(a, b, spacing));
    }
    for (const auto& c : components) synth.add_component(phase, c);
    synth.add_tilt(phase, spacing);
  }

  double mean = 0.0;
  for (double v : phase) mean += v;
  mean /= static_cast<double>(phase.size());
  for (double& v : phase) v -= mean;

  return PhaseScreen(grid, std::move(phase), strength, seed, opts);
}

std::uint64_t ensemble_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// --- structure function -----------------------------------------------------

struct StructureFunctionEstimator::State {
  GridSpec grid;
  int n = 0;
  int padded = 0;
  FftBuffer work;
  std::vector<std::complex<double>> sum_square_spectrum;  // sum over screens of FFT(phi^2)
  std::vector<double> sum_power_spectrum;                 // sum over screens of |FFT(phi)|^2
  std::size_t screens = 0;

  explicit State(const GridSpec& g)
      : grid(g), n(g.resolution), padded(2 * g.resolution),
        work(static_cast<std::size_t>(padded) * padded),
        sum_square_spectrum(work.size()), sum_power_spectrum(work.size(), 0.0) {}
};

StructureFunctionEstimator::StructureFunctionEstimator(const GridSpec& grid) {
  grid.validate();
  state_ = std::make_unique<State>(grid);
}

StructureFunctionEstimator::~StructureFunctionEstimator() = default;
StructureFunctionEstimator::StructureFunctionEstimator(StructureFunctionEstimator&&) noexcept = default;
StructureFunctionEstimator& StructureFunctionEstimator::operator=(StructureFunctionEstimator&&) noexcept = default;

std::size_t StructureFunctionEstimator::screen_count() const { return state_->screens; }

void StructureFunctionEstimator::add(const PhaseScreen& screen) {
  if (screen.grid().resolution != state_->grid.resolution || screen.grid().physical_width != state_->grid.physical_width)
    throw std::invalid_argument("structure_function: screens must share one grid");
  add(screen.phase());
}

void StructureFunctionEstimator::add(std::span<const double> phase) {
  State& s = *state_;
  if (phase.size() != static_cast<std::size_t>(s.n) * s.n)
    throw std::invalid_argument("structure_function: phase array does not match grid");
  s.work.fill_zero();
  for (int iy = 0; iy < s.n; ++iy)
    for (int ix = 0; ix < s.n; ++ix) {
      const double v = phase[static_cast<std::size_t>(iy) * s.n + ix];
      s.work[static_cast<std::size_t>(iy) * s.padded + ix] = {v, v * v};
    }
  detail::fft2d_inplace(s.work, s.padded, s.padded, FftSign::forward);
  // phi and phi^2 are real, so one complex transform carries both spectra.
  const int m = s.padded;
  for (int ky = 0; ky < m; ++ky) {
    const int nky = (m - ky) % m;
    for (int kx = 0; kx < m; ++kx) {
      const int nkx = (m - kx) % m;
      const auto z = s.work[static_cast<std::size_t>(ky) * m + kx];
      const auto zm = std::conj(s.work[static_cast<std::size_t>(nky) * m + nkx]);
      const auto phi = 0.5 * (z + zm);
      const auto sq = (z - zm) / std::complex<double>(0.0, 2.0);
      const std::size_t k = static_cast<std::size_t>(ky) * m + kx;
      s.sum_power_spectrum[k] += std::norm(phi);
      s.sum_square_spectrum[k] += sq;
    }
  }
  ++s.screens;
}

std::vector<StructureSample> StructureFunctionEstimator::evaluate(std::span<const double> separations,
                                                                  PairBinning binning) const {
  const State& s = *state_;
  if (s.screens == 0) throw std::invalid_argument("structure_function: empty ensemble");
  const double h = s.grid.pixel_size();
  for (double sep : separations)
    if (!(sep > 0.0) || sep > 0.5 * s.grid.physical_width)
      throw std::invalid_argument("structure_function: separation outside (0, physical_width/2]");

  const int m = s.padded;
  const int n = s.n;

  FftBuffer mask(static_cast<std::size_t>(m) * m);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) mask[static_cast<std::size_t>(iy) * m + ix] = 1.0;
  detail::fft2d_inplace(mask, m, m, FftSign::forward);

  // numerator(tau) = sum_x m(x) m(x+tau) [phi(x) - phi(x+tau)]^2, summed over screens
  FftBuffer numerator(mask.size());
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const double cross = 2.0 * (std::conj(s.sum_square_spectrum[k]) * mask[k]).real();
    numerator[k] = cross - 2.0 * s.sum_power_spectrum[k];
  }
  detail::fft2d_inplace(numerator, m, m, FftSign::backward);
  const double scale = 1.0 / (static_cast<double>(m) * m);

  auto value_at = [&](int tx, int ty) {
    const int ux = (tx + m) % m;
    const int uy = (ty + m) % m;
    return numerator[static_cast<std::size_t>(uy) * m + ux].real() * scale;
  };
  auto count_at = [&](int tx, int ty) {
    return static_cast<double>(n - std::abs(tx)) * static_cast<double>(n - std::abs(ty));
  };

  std::vector<StructureSample> out;
  out.reserve(separations.size());
  for (double sep : separations) {
    const double px = sep / h;
    double num = 0.0;
    double pairs = 0.0;
    auto take = [&](int tx, int ty) {
      if (std::abs(tx) >= n || std::abs(ty) >= n) return;
      num += value_at(tx, ty);
      pairs += count_at(tx, ty);
    };
    if (binning == PairBinning::annulus) {
      const int reach = static_cast<int>(std::ceil(px + 0.5));
      for (int ty = -reach; ty <= reach; ++ty)
        for (int tx = -reach; tx <= reach; ++tx)
          if (std::abs(std::hypot(tx, ty) - px) <= 0.5) take(tx, ty);
    } else {
      const int lag = static_cast<int>(std::lround(px));
      if (lag >= 1) {
        if (binning == PairBinning::x_axis) {
          take(lag, 0);
          take(-lag, 0);
        } else {
          take(0, lag);
          take(0, -lag);
        }
      }
    }
    if (pairs == 0.0)
      throw std::invalid_argument("structure_function: no pixel pairs at separation " + std::to_string(sep));
    const double total_pairs = pairs * static_cast<double>(s.screens);
    out.push_back({sep, num / total_pairs, total_pairs});
  }
  return out;
}

std::vector<StructureSample> structure_function(std::span<const PhaseScreen> screens,
                                                std::span<const double> separations, PairBinning binning) {
  if (screens.empty()) throw std::invalid_argument("structure_function: empty ensemble");
  StructureFunctionEstimator estimator(screens.front().grid());
  for (const auto& screen : screens) estimator.add(screen);
  return estimator.evaluate(separations, binning);
}

} // namespace oamturb
