#pragma once

#include <complex>
#include <span>
#include <vector>

#include "oamturb/grid.hpp"

namespace oamturb {

class PhaseScreen;

using Complex = std::complex<double>;

/// OAM quantum number l (units of hbar per photon).
struct OamIndex {
  int l = 0;
};

/// Index n of an angular (ANG) mode built from `dimension` OAM components.
struct AngIndex {
  int n = 0;
  int dimension = 11;
};

/// Complex amplitude sampled on a GridSpec, row-major with row = y index.
///
/// Index (ix, iy) maps to the point (grid.coordinate(ix), grid.coordinate(iy)),
/// so row 0 is the most negative y.
class ComplexField {
public:
  explicit ComplexField(const GridSpec& grid);
  ComplexField(const GridSpec& grid, std::vector<Complex> samples);

  const GridSpec& grid() const { return grid_; }
  std::span<const Complex> samples() const { return samples_; }
  std::span<Complex> samples() { return samples_; }

  const Complex& at(int ix, int iy) const { return samples_[index(ix, iy)]; }
  Complex& at(int ix, int iy) { return samples_[index(ix, iy)]; }

  /// Sum of |amplitude|^2 times pixel area.
  double power() const;

  std::vector<double> intensity() const;
  /// arg(amplitude) in (-pi, pi]; zero where the amplitude vanishes.
  std::vector<double> phase() const;

private:
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid_.resolution) +
           static_cast<std::size_t>(ix);
  }

  GridSpec grid_;
  std::vector<Complex> samples_;
};

/// A0 W(r/R) exp(i l theta), with A0 fixed so the sampled power is 1.
ComplexField make_oam_mode(const GridSpec& grid, OamIndex l);

/// (1/sqrt N) sum_l Psi_OAM^l exp(i 2 pi n l / N) over the symmetric set
/// l = -(N-1)/2 .. (N-1)/2. Only odd N is defined; even N throws.
ComplexField make_ang_mode(const GridSpec& grid, AngIndex n);

/// OAM indices that make up the ANG basis of dimension N.
std::vector<int> ang_components(int dimension);

/// Pointwise multiplication by exp(i phi). Power is unchanged.
ComplexField apply_phase(const ComplexField& field, const PhaseScreen& screen);
ComplexField apply_phase(const ComplexField& field, std::span<const double> phase);

/// Projection amplitude sum conj(a) b dA. For unit-power fields |<a,b>|^2 is
/// the probability of detecting a given b.
Complex overlap(const ComplexField& a, const ComplexField& b);

} // namespace oamturb
