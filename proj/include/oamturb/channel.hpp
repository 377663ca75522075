#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oamturb/grid.hpp"
#include "oamturb/turbulence.hpp"

namespace oamturb {

/// Detected OAM index set: dimension N, center index, spacing MS.
struct ModeSet {
  int dimension = 3;
  int center = 0;
  int spacing = 1;

  void validate() const;
  /// center + MS (i - floor((N-1)/2)) for i = 0..N-1; symmetric for odd N.
  std::vector<int> indices() const;
  bool operator==(const ModeSet&) const = default;
};

enum class Normalization { subunital, postselected, erasure };

std::string_view to_string(Normalization n);
Normalization parse_normalization(std::string_view text);

struct Provenance {
  enum class Kind { analytic, montecarlo, measured };
  Kind kind = Kind::analytic;
  int num_screens = 0;
  std::uint64_t seed = 0;
  std::string projector;
  int subharmonic_levels = 0;
};

std::string_view to_string(Provenance::Kind k);

/// Conditional probabilities P[d|s]: rows are detected modes (plus a trailing
/// loss row under erasure normalization), columns are sent modes.
struct CrosstalkMatrix {
  ModeSet modes;
  TurbulenceStrength strength;
  Eigen::MatrixXd entries;
  std::optional<Eigen::MatrixXd> standard_errors;
  Normalization normalization = Normalization::subunital;
  Provenance provenance;

  bool has_loss_row() const { return entries.rows() == entries.cols() + 1; }
  Eigen::VectorXd column_sums() const { return entries.colwise().sum().transpose(); }

  /// Checks entry range and the column-sum rule of the normalization tag.
  void validate(double tol = 1e-9) const;
};

struct QuadratureOptions {
  double abs_tol = 1e-8;
  int radial_nodes = 128;
  int max_subintervals = 4000;

  void validate() const;
};

struct CrosstalkIntegral {
  double value = 0.0;
  double error_estimate = 0.0;
  int subintervals = 0;
  bool converged = false;
};

/// Raw quadrature of
///   (1/pi) int_0^1 rho drho int_0^{2 pi} dtheta
///       exp[-3.44 (D/r0)^{5/3} (rho sin(theta/2))^{5/3}] cos(delta theta)
/// using symmetry about theta = pi, adaptive Gauss-Kronrod in theta and
/// Gauss-Legendre in rho. No range checks on the result.
CrosstalkIntegral crosstalk_integral(int delta, TurbulenceStrength strength, const QuadratureOptions& quad = {});

/// Probability of detecting OAM s + delta when s was sent. Throws
/// NumericalError when the quadrature misses quad.abs_tol or the value falls
/// outside [0, 1] by more than that tolerance.
double analytic_crosstalk(int delta, TurbulenceStrength strength, const QuadratureOptions& quad = {});

/// entries(i, j) = analytic_crosstalk(l_i - l_j); subunital, Toeplitz.
CrosstalkMatrix analytic_matrix(const ModeSet& modes, TurbulenceStrength strength,
                                const QuadratureOptions& quad = {}, unsigned threads = 1);

enum class Projector {
  /// Probability of OAM d summed over all radial orders within the aperture
  /// (angular Fourier analysis on rings). Same quantity as the analytic integral.
  oam_subspace,
  /// |<Psi_d, e^{i phi} Psi_s>|^2 with uniform-amplitude vortex modes.
  vortex_mode,
};

std::string_view to_string(Projector p);
Projector parse_projector(std::string_view text);

struct MonteCarloOptions {
  Projector projector = Projector::oam_subspace;
  int radial_samples = 64;
  /// 0 selects max(256, next power of two >= 4 max|delta|).
  int angular_samples = 0;
  unsigned threads = 0;
};

/// Per-screen crosstalk matrices |projection|^2, one per screen k with seed
/// ensemble_seed(seed, k). Order is by k regardless of threading.
std::vector<Eigen::MatrixXd> montecarlo_trials(const ModeSet& modes, TurbulenceStrength strength, int num_screens,
                                               std::uint64_t seed, const GridSpec& grid,
                                               const ScreenSynthesisOptions& opts, const MonteCarloOptions& mc = {});

/// Ensemble mean of montecarlo_trials with per-entry standard errors.
CrosstalkMatrix montecarlo_matrix(const ModeSet& modes, TurbulenceStrength strength, int num_screens,
                                  std::uint64_t seed, const GridSpec& grid, const ScreenSynthesisOptions& opts,
                                  const MonteCarloOptions& mc = {});

enum class SorterKind { ideal, sinc_binned, measured };

std::string_view to_string(SorterKind k);

/// Response S[d_out | d_true] of the mode sorter over a detected mode set.
struct SorterModel {
  SorterKind kind = SorterKind::ideal;
  Eigen::MatrixXd response;

  static SorterModel ideal(const ModeSet& modes);
  /// Mode l lands as a unit-normalized sinc^2 spot centred on bin l; S[d|t]
  /// is the fraction falling into the unit-width bin of detected mode d.
  static SorterModel sinc_binned(const ModeSet& modes);
  static SorterModel measured(Eigen::MatrixXd response);

  /// Entries in [0, 1] and column sums <= 1.
  void validate() const;
};

/// entries_out = S * entries_in. Requires an N x N matrix (no loss row).
CrosstalkMatrix apply_sorter(const CrosstalkMatrix& matrix, const SorterModel& sorter);

/// postselected divides each column by its sum; erasure appends a loss row
/// holding 1 - column sum; subunital returns the input unchanged.
CrosstalkMatrix normalize(const CrosstalkMatrix& matrix, Normalization policy);

} // namespace oamturb
