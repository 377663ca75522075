#include "oamturb/field.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "oamturb/turbulence.hpp"

namespace oamturb {

namespace {

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (a.resolution != b.resolution || a.physical_width != b.physical_width)
    throw std::invalid_argument(std::string(what) + ": grid shape mismatch");
}

std::size_t sample_count(const GridSpec& grid) {
  return static_cast<std::size_t>(grid.resolution) * static_cast<std::size_t>(grid.resolution);
}

void normalize_power(ComplexField& field) {
  const double p = field.power();
  if (p <= 0.0) throw std::invalid_argument("mode has no samples inside the aperture");
  const double scale = 1.0 / std::sqrt(p);
  for (auto& v : field.samples()) v *= scale;
}

} // namespace

ComplexField::ComplexField(const GridSpec& grid) : ComplexField(grid, std::vector<Complex>(sample_count(grid))) {}

ComplexField::ComplexField(const GridSpec& grid, std::vector<Complex> samples)
    : grid_(grid), samples_(std::move(samples)) {
  grid_.validate();
  if (samples_.size() != sample_count(grid_))
    throw std::invalid_argument("ComplexField: sample count does not match grid resolution");
}

double ComplexField::power() const {
  double sum = 0.0;
  for (const auto& v : samples_) sum += std::norm(v);
  return sum * grid_.pixel_area();
}

std::vector<double> ComplexField::intensity() const {
  std::vector<double> out(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) out[i] = std::norm(samples_[i]);
  return out;
}

std::vector<double> ComplexField::phase() const {
  std::vector<double> out(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i)
    out[i] = samples_[i] == Complex{} ? 0.0 : std::arg(samples_[i]);
  return out;
}

ComplexField make_oam_mode(const GridSpec& grid, OamIndex l) {
  ComplexField field(grid);
  const int n = grid.resolution;
  const double radius2 = grid.aperture_radius * grid.aperture_radius;
  for (int iy = 0; iy < n; ++iy) {
    const double y = grid.coordinate(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double x = grid.coordinate(ix);
      if (x * x + y * y > radius2) continue;
      field.at(ix, iy) = std::polar(1.0, l.l * std::atan2(y, x));
    }
  }
  normalize_power(field);
  return field;
}

std::vector<int> ang_components(int dimension) {
  if (dimension < 1 || dimension % 2 == 0)
    throw std::invalid_argument("ANG basis is defined for odd dimension only, got " + std::to_string(dimension));
  const int half = (dimension - 1) / 2;
  std::vector<int> ls;
  for (int l = -half; l <= half; ++l) ls.push_back(l);
  return ls;
}

ComplexField make_ang_mode(const GridSpec& grid, AngIndex n) {
  const auto ls = ang_components(n.dimension);
  if (n.n < 0 || n.n >= n.dimension)
    throw std::invalid_argument("ANG index must lie in [0, N)");

  ComplexField field(grid);
  const int res = grid.resolution;
  const double radius2 = grid.aperture_radius * grid.aperture_radius;
  const double twopi_n_over_dim = 2.0 * std::numbers::pi * n.n / n.dimension;
  for (int iy = 0; iy < res; ++iy) {
    const double y = grid.coordinate(iy);
    for (int ix = 0; ix < res; ++ix) {
      const double x = grid.coordinate(ix);
      if (x * x + y * y > radius2) continue;
      const double theta = std::atan2(y, x);
      Complex sum{};
      for (int l : ls) sum += std::polar(1.0, l * theta + twopi_n_over_dim * l);
      field.at(ix, iy) = sum;
    }
  }
  // Components share one aperture, so normalizing the sum equals the
  // 1/sqrt(N) prefactor applied to unit-power components up to sampling error.
  normalize_power(field);
  return field;
}

ComplexField apply_phase(const ComplexField& field, std::span<const double> phase) {
  if (phase.size() != field.samples().size())
    throw std::invalid_argument("apply_phase: phase map shape mismatch");
  ComplexField out = field;
  auto samples = out.samples();
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i] *= std::polar(1.0, phase[i]);
  return out;
}

ComplexField apply_phase(const ComplexField& field, const PhaseScreen& screen) {
  require_same_grid(field.grid(), screen.grid(), "apply_phase");
  return apply_phase(field, screen.phase());
}

Complex overlap(const ComplexField& a, const ComplexField& b) {
  require_same_grid(a.grid(), b.grid(), "overlap");
  const auto sa = a.samples();
  const auto sb = b.samples();
  Complex sum{};
  for (std::size_t i = 0; i < sa.size(); ++i) sum += std::conj(sa[i]) * sb[i];
  return sum * a.grid().pixel_area();
}

} // namespace oamturb
