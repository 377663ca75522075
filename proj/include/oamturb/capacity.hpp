#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oamturb/channel.hpp"

namespace oamturb {

/// Probabilities P_s of sending each mode.
struct InputDistribution {
  std::vector<double> probabilities;

  static InputDistribution uniform(int n);
  void validate() const;
};

enum class Objective { mutual_information, paper_literal };

struct CapacityResult {
  double capacity = 0.0;     ///< bits per photon
  double upper_bound = 0.0;  ///< max_s D(W(.|s) || q) at the last iterate
  InputDistribution optimal_input;
  int iterations = 0;
  bool converged = false;
  Objective objective = Objective::mutual_information;
};

/// I(X;Y) in bits for a column-stochastic channel W(d, s) = P[d|s], with
/// 0 log 0 = 0. The raw overload checks column sums; the CrosstalkMatrix
/// overload rejects subunital matrices.
double mutual_information(const Eigen::MatrixXd& channel, std::span<const double> input);
double mutual_information(const CrosstalkMatrix& matrix, const InputDistribution& input);

/// Channel capacity via Blahut-Arimoto from a uniform start. Stops when the
/// bracket max_s D_s - log2 sum_s p_s 2^{D_s} drops below tol; otherwise
/// returns the best iterate with converged = false after max_iter steps.
CapacityResult blahut_arimoto(const Eigen::MatrixXd& channel, double tol = 1e-9, int max_iter = 10000);
CapacityResult blahut_arimoto(const CrosstalkMatrix& matrix, double tol = 1e-9, int max_iter = 10000);

/// H(X) + sum_s P_s sum_d P_ds log2 P_ds at the given input, i.e. H(X) - H(Y|X).
/// Equals I(X;Y) only when H(X) = H(Y).
double paper_literal_capacity(const Eigen::MatrixXd& channel, std::span<const double> input);
double paper_literal_capacity(const CrosstalkMatrix& matrix, const InputDistribution& input);

enum class Method { analytic, montecarlo };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

/// Sorter selection that can be resolved against any mode set.
struct SorterSpec {
  SorterKind kind = SorterKind::sinc_binned;
  std::string path;  ///< CSV file for SorterKind::measured

  SorterModel build(const ModeSet& modes) const;
  std::string label() const;
  static SorterSpec parse(std::string_view text);  ///< ideal | sinc | file:<path>
};

struct SweepConfig {
  int dimension = 3;
  int spacing = 1;
  int center = 0;
  SorterSpec sorter;
  Normalization normalization = Normalization::postselected;
  Method method = Method::analytic;
  QuadratureOptions quadrature;
  GridSpec grid;
  ScreenSynthesisOptions screen_options;
  MonteCarloOptions montecarlo;
  int num_screens = 20;
  std::uint64_t seed = 1;
  double ba_tol = 1e-9;
  int ba_max_iter = 10000;
  unsigned threads = 0;

  ModeSet modes() const { return {dimension, center, spacing}; }
};

/// Crosstalk matrix for one strength: turbulence channel (analytic or MC),
/// then sorter, then normalization.
CrosstalkMatrix channel_matrix(const SweepConfig& config, double d_over_r0, unsigned threads = 1);

struct CurvePoint {
  double d_over_r0 = 0.0;
  CapacityResult result;
  double err_lo = 0.0;  ///< capacity minus lower end of the MC error interval
  double err_hi = 0.0;  ///< upper end minus capacity
  double paper_literal = 0.0;  ///< literal objective at the optimal input
};

struct CapacityCurve {
  std::string label;
  std::vector<CurvePoint> points;
  std::optional<SweepConfig> config;  ///< empty for the polarization baseline
};

/// Capacity versus D/r0 for one channel configuration. Strengths must be
/// strictly increasing. MC curves carry asymmetric error bars from
/// perturbing each matrix entry by one standard error.
CapacityCurve capacity_sweep(const SweepConfig& config, std::span<const double> strengths);

/// Two-dimensional noiseless channel: 1 bit at every strength.
CapacityCurve polarization_baseline(std::span<const double> strengths);

struct Crossing {
  std::optional<double> d_over_r0;
  bool non_monotone = false;  ///< the curve climbs back to the level after crossing
};

/// First strength where capacity drops strictly below `level`, linearly
/// interpolated between grid points. Empty if the curve never starts at or
/// above the level and then falls below it.
Crossing find_crossing(const CapacityCurve& curve, double level);

std::vector<double> strength_grid(double lo, double hi, int count, bool logarithmic);
/// Parses "lo:hi:count:log" or "lo:hi:count:lin".
std::vector<double> parse_strength_grid(std::string_view text);

} // namespace oamturb
