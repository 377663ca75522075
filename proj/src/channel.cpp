#include "oamturb/channel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

#include "fft.hpp"
#include "oamturb/error.hpp"
#include "oamturb/field.hpp"
#include "oamturb/parallel.hpp"
#include "oamturb/quadrature.hpp"

namespace oamturb {

namespace {

using std::numbers::pi;

const GaussLegendreRule& cached_rule(int order) {
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> rules;
  std::lock_guard lock(mutex);
  auto it = rules.find(order);
  if (it == rules.end()) it = rules.emplace(order, GaussLegendreRule::make(order)).first;
  return it->second;
}

int max_abs_delta(const std::vector<int>& ls) {
  const auto [lo, hi] = std::minmax_element(ls.begin(), ls.end());
  return *hi - *lo;
}

} // namespace

// --- ModeSet / enums --------------------------------------------------------

void ModeSet::validate() const {
  if (dimension < 2) throw std::invalid_argument("mode set dimension must be >= 2");
  if (spacing < 1) throw std::invalid_argument("mode spacing must be >= 1");
}

std::vector<int> ModeSet::indices() const {
  validate();
  std::vector<int> out(dimension);
  const int offset = (dimension - 1) / 2;
  for (int i = 0; i < dimension; ++i) out[i] = center + spacing * (i - offset);
  return out;
}

std::string_view to_string(Normalization n) {
  switch (n) {
    case Normalization::subunital: return "subunital";
    case Normalization::postselected: return "postselected";
    case Normalization::erasure: return "erasure";
  }
  return "?";
}

Normalization parse_normalization(std::string_view text) {
  if (text == "subunital" || text == "none") return Normalization::subunital;
  if (text == "postselected" || text == "postselect") return Normalization::postselected;
  if (text == "erasure") return Normalization::erasure;
  throw ConfigError("unknown normalization '" + std::string(text) + "'");
}

std::string_view to_string(Provenance::Kind k) {
  switch (k) {
    case Provenance::Kind::analytic: return "analytic";
    case Provenance::Kind::montecarlo: return "montecarlo";
    case Provenance::Kind::measured: return "measured";
  }
  return "?";
}

std::string_view to_string(Projector p) {
  return p == Projector::oam_subspace ? "oam_subspace" : "vortex_mode";
}

Projector parse_projector(std::string_view text) {
  if (text == "oam_subspace" || text == "oam") return Projector::oam_subspace;
  if (text == "vortex_mode" || text == "vortex") return Projector::vortex_mode;
  throw ConfigError("unknown projector '" + std::string(text) + "'");
}

std::string_view to_string(SorterKind k) {
  switch (k) {
    case SorterKind::ideal: return "ideal";
    case SorterKind::sinc_binned: return "sinc_binned";
    case SorterKind::measured: return "measured";
  }
  return "?";
}

void CrosstalkMatrix::validate(double tol) const {
  const auto n = static_cast<Eigen::Index>(modes.dimension);
  if (entries.cols() != n) throw std::invalid_argument("crosstalk matrix column count differs from mode set");
  const bool loss = normalization == Normalization::erasure;
  if (entries.rows() != n + (loss ? 1 : 0)) throw std::invalid_argument("crosstalk matrix row count is inconsistent");
  if (entries.minCoeff() < -tol || entries.maxCoeff() > 1.0 + tol)
    throw std::invalid_argument("crosstalk entries must lie in [0, 1]");
  const Eigen::VectorXd sums = column_sums();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (normalization == Normalization::subunital && sums(j) > 1.0 + tol)
      throw std::invalid_argument("subunital column sum exceeds 1");
    if (normalization != Normalization::subunital && std::abs(sums(j) - 1.0) > tol)
      throw std::invalid_argument("normalized column does not sum to 1");
  }
}

void QuadratureOptions::validate() const {
  if (!(abs_tol > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
  if (radial_nodes < 2) throw std::invalid_argument("quadrature radial_nodes must be >= 2");
  if (max_subintervals < 1) throw std::invalid_argument("quadrature max_subintervals must be >= 1");
}

// --- analytic path ----------------------------------------------------------

CrosstalkIntegral crosstalk_integral(int delta, TurbulenceStrength strength, const QuadratureOptions& quad) {
  strength.validate();
  quad.validate();
  if (strength.is_identity()) return {delta == 0 ? 1.0 : 0.0, 0.0, 0, true};

  const double a = 3.44 * std::pow(strength.d_over_r0, 5.0 / 3.0);
  const GaussLegendreRule& rule = cached_rule(quad.radial_nodes);

  auto radial = [&](double theta) {
    const double s53 = std::pow(std::sin(0.5 * theta), 5.0 / 3.0);
    return rule.integrate(
        [&](double rho) { return rho * std::exp(-a * std::pow(rho, 5.0 / 3.0) * s53); }, 0.0, 1.0);
  };
  auto integrand = [&](double theta) { return radial(theta) * std::cos(delta * theta); };

  // Integrand is even about theta = pi; the |sin(theta/2)|^{5/3} kink sits at
  // the theta = 0 breakpoint. Start with at most one oscillation per panel.
  const int panels = std::max(8, std::abs(delta));
  std::vector<double> breaks(panels + 1);
  for (int i = 0; i <= panels; ++i) breaks[i] = pi * i / panels;

  const double scale = 2.0 / pi;
  const auto r = integrate_adaptive(integrand, breaks, quad.abs_tol / scale, quad.max_subintervals);
  return {scale * r.value, scale * r.error_estimate, r.subintervals, r.converged};
}

double analytic_crosstalk(int delta, TurbulenceStrength strength, const QuadratureOptions& quad) {
  const auto r = crosstalk_integral(delta, strength, quad);
  if (!r.converged)
    throw NumericalError("crosstalk quadrature did not reach tolerance " + std::to_string(quad.abs_tol) +
                             " (achieved " + std::to_string(r.error_estimate) + ")",
                         r.error_estimate);
  if (r.value < -quad.abs_tol || r.value > 1.0 + quad.abs_tol)
    throw NumericalError("crosstalk quadrature left [0, 1]: " + std::to_string(r.value), r.error_estimate);
  return std::clamp(r.value, 0.0, 1.0);
}

CrosstalkMatrix analytic_matrix(const ModeSet& modes, TurbulenceStrength strength, const QuadratureOptions& quad,
                                unsigned threads) {
  const auto ls = modes.indices();
  const int n = modes.dimension;
  const int span = max_abs_delta(ls);

  // Toeplitz: one integral per |delta|.
  std::vector<double> by_delta(span + 1, 0.0);
  parallel_for(by_delta.size(), threads,
               [&](std::size_t d) { by_delta[d] = analytic_crosstalk(static_cast<int>(d), strength, quad); });

  CrosstalkMatrix out;
  out.modes = modes;
  out.strength = strength;
  out.entries.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.entries(i, j) = by_delta[std::abs(ls[i] - ls[j])];
  out.normalization = Normalization::subunital;
  out.provenance = {Provenance::Kind::analytic, 0, 0, "", 0};
  return out;
}

// --- Monte Carlo path -------------------------------------------------------

namespace {

/// Angular spectrum p(k) = sum_j w_j |c_k(rho_j)|^2 of exp(i phi) on a polar
/// grid inside the aperture; c_k is the k-th angular Fourier coefficient on
/// ring j and w_j = 2 rho_j / N_rho is the midpoint weight of 2 rho d rho.
class RingProjector {
public:
  RingProjector(const GridSpec& grid, int radial, int angular)
      : radial_(radial), angular_(angular), buffer_(static_cast<std::size_t>(radial) * angular) {
    xs_.resize(buffer_.size());
    ys_.resize(buffer_.size());
    for (int j = 0; j < radial; ++j) {
      const double r = (j + 0.5) / radial * grid.aperture_radius;
      for (int m = 0; m < angular; ++m) {
        const double theta = 2.0 * pi * m / angular;
        xs_[static_cast<std::size_t>(j) * angular + m] = r * std::cos(theta);
        ys_[static_cast<std::size_t>(j) * angular + m] = r * std::sin(theta);
      }
    }
  }

  /// Fills p(k) for k in [-(angular/2), angular/2); index with spectrum(k).
  void run(const PhaseScreen* screen) {
    for (std::size_t i = 0; i < buffer_.size(); ++i)
      buffer_[i] = screen ? std::polar(1.0, screen->sample(xs_[i], ys_[i])) : std::complex<double>(1.0, 0.0);
    detail::fft1d_batch_inplace(buffer_, angular_, radial_, detail::FftSign::forward);
    power_.assign(angular_, 0.0);
    const double norm = 1.0 / (static_cast<double>(angular_) * angular_);
    for (int j = 0; j < radial_; ++j) {
      const double w = 2.0 * (j + 0.5) / (static_cast<double>(radial_) * radial_);
      for (int m = 0; m < angular_; ++m)
        power_[m] += w * std::norm(buffer_[static_cast<std::size_t>(j) * angular_ + m]) * norm;
    }
  }

  double spectrum(int k) const { return power_[((k % angular_) + angular_) % angular_]; }

private:
  int radial_;
  int angular_;
  detail::FftBuffer buffer_;
  std::vector<double> xs_, ys_;
  std::vector<double> power_;
};

} // namespace

std::vector<Eigen::MatrixXd> montecarlo_trials(const ModeSet& modes, TurbulenceStrength strength, int num_screens,
                                               std::uint64_t seed, const GridSpec& grid,
                                               const ScreenSynthesisOptions& opts, const MonteCarloOptions& mc) {
  grid.validate();
  strength.validate();
  opts.validate();
  if (num_screens < 1) throw std::invalid_argument("montecarlo_matrix needs at least one screen");
  if (grid.aperture_radius < 8.0 * grid.pixel_size())
    throw std::invalid_argument("montecarlo_matrix: aperture spans fewer than 8 pixels in radius");
  if (mc.radial_samples < 1) throw std::invalid_argument("montecarlo radial_samples must be positive");

  const auto ls = modes.indices();
  const int n = modes.dimension;
  const int span = max_abs_delta(ls);
  int angular = mc.angular_samples;
  if (angular == 0) angular = std::max(256, static_cast<int>(std::bit_ceil(static_cast<unsigned>(4 * span + 1))));
  if (angular <= 2 * span) throw std::invalid_argument("montecarlo angular_samples must exceed 2 max|delta|");

  std::vector<ComplexField> vortex;
  if (mc.projector == Projector::vortex_mode)
    for (int l : ls) vortex.push_back(make_oam_mode(grid, OamIndex{l}));

  std::vector<Eigen::MatrixXd> trials(num_screens);
  parallel_for(static_cast<std::size_t>(num_screens), mc.threads, [&](std::size_t k) {
    std::optional<PhaseScreen> screen;
    if (!strength.is_identity()) screen = generate_screen(grid, strength, ensemble_seed(seed, k), opts);

    Eigen::MatrixXd m(n, n);
    if (mc.projector == Projector::oam_subspace) {
      RingProjector projector(grid, mc.radial_samples, angular);
      projector.run(screen ? &*screen : nullptr);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = projector.spectrum(ls[i] - ls[j]);
    } else {
      for (int j = 0; j < n; ++j) {
        const ComplexField distorted = screen ? apply_phase(vortex[j], *screen) : vortex[j];
        for (int i = 0; i < n; ++i) m(i, j) = std::norm(overlap(vortex[i], distorted));
      }
    }
    trials[k] = std::move(m);
  });
  return trials;
}

CrosstalkMatrix montecarlo_matrix(const ModeSet& modes, TurbulenceStrength strength, int num_screens,
                                  std::uint64_t seed, const GridSpec& grid, const ScreenSynthesisOptions& opts,
                                  const MonteCarloOptions& mc) {
  const auto trials = montecarlo_trials(modes, strength, num_screens, seed, grid, opts, mc);
  const int n = modes.dimension;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : trials) mean += t;
  mean /= static_cast<double>(trials.size());
  Eigen::MatrixXd se = Eigen::MatrixXd::Zero(n, n);
  if (trials.size() > 1) {
    for (const auto& t : trials) se += (t - mean).cwiseAbs2();
    se /= static_cast<double>(trials.size() - 1);
    se = (se / static_cast<double>(trials.size())).cwiseSqrt();
  }

  CrosstalkMatrix out;
  out.modes = modes;
  out.strength = strength;
  out.entries = mean.cwiseMax(0.0).cwiseMin(1.0);
  out.standard_errors = se;
  out.normalization = Normalization::subunital;
  out.provenance = {Provenance::Kind::montecarlo, num_screens, seed, std::string(to_string(mc.projector)),
                    opts.subharmonic_levels};
  return out;
}

// --- sorter and normalization -------------------------------------------------

SorterModel SorterModel::ideal(const ModeSet& modes) {
  modes.validate();
  return {SorterKind::ideal, Eigen::MatrixXd::Identity(modes.dimension, modes.dimension)};
}

SorterModel SorterModel::sinc_binned(const ModeSet& modes) {
  const auto ls = modes.indices();
  const int n = modes.dimension;
  const GaussLegendreRule& rule = cached_rule(32);
  auto sinc2 = [](double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    const double s = std::sin(pi * x) / (pi * x);
    return s * s;
  };
  Eigen::MatrixXd s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double offset = ls[i] - ls[j];
      s(i, j) = rule.integrate(sinc2, offset - 0.5, offset + 0.5);
    }
  return {SorterKind::sinc_binned, s};
}

SorterModel SorterModel::measured(Eigen::MatrixXd response) {
  SorterModel model{SorterKind::measured, std::move(response)};
  model.validate();
  return model;
}

void SorterModel::validate() const {
  if (response.rows() != response.cols() || response.rows() < 1)
    throw std::invalid_argument("sorter response must be a non-empty square matrix");
  if (response.minCoeff() < 0.0 || response.maxCoeff() > 1.0 + 1e-9)
    throw std::invalid_argument("sorter response entries must lie in [0, 1]");
  if ((response.colwise().sum().array() > 1.0 + 1e-9).any())
    throw std::invalid_argument("sorter response columns must sum to at most 1");
}

CrosstalkMatrix apply_sorter(const CrosstalkMatrix& matrix, const SorterModel& sorter) {
  sorter.validate();
  if (matrix.has_loss_row() || matrix.normalization == Normalization::erasure)
    throw std::invalid_argument("apply_sorter: apply the sorter before erasure normalization");
  if (sorter.response.rows() != matrix.entries.rows())
    throw std::invalid_argument("apply_sorter: sorter and matrix dimensions differ");

  CrosstalkMatrix out = matrix;
  out.entries = sorter.response * matrix.entries;
  if (matrix.standard_errors)
    out.standard_errors = (sorter.response.cwiseAbs2() * matrix.standard_errors->cwiseAbs2()).cwiseSqrt();
  const bool stochastic = ((sorter.response.colwise().sum().array() - 1.0).abs() <= 1e-9).all();
  out.normalization = matrix.normalization == Normalization::postselected && stochastic ? Normalization::postselected
                                                                                         : Normalization::subunital;
  return out;
}

CrosstalkMatrix normalize(const CrosstalkMatrix& matrix, Normalization policy) {
  if (matrix.has_loss_row() || matrix.normalization == Normalization::erasure)
    throw std::invalid_argument("normalize: input already carries a loss row");
  CrosstalkMatrix out = matrix;
  const Eigen::VectorXd sums = matrix.column_sums();
  switch (policy) {
    case Normalization::subunital:
      break;
    case Normalization::postselected:
      for (Eigen::Index j = 0; j < sums.size(); ++j) {
        if (!(sums(j) > 0.0))
          throw std::invalid_argument("normalize: column " + std::to_string(j) + " lost all power");
        out.entries.col(j) /= sums(j);
        if (out.standard_errors) out.standard_errors->col(j) /= sums(j);
      }
      break;
    case Normalization::erasure: {
      if ((sums.array() > 1.0 + 1e-9).any()) throw std::invalid_argument("normalize: column sum exceeds 1");
      const auto n = matrix.entries.cols();
      out.entries.conservativeResize(n + 1, n);
      out.entries.row(n) = (1.0 - sums.array()).max(0.0).matrix().transpose();
      if (out.standard_errors) {
        Eigen::MatrixXd se(n + 1, n);
        se.topRows(n) = *matrix.standard_errors;
        se.row(n) = matrix.standard_errors->cwiseAbs2().colwise().sum().cwiseSqrt();
        out.standard_errors = se;
      }
      break;
    }
  }
  out.normalization = policy == Normalization::subunital ? matrix.normalization : policy;
  return out;
}

} // namespace oamturb
