#include "oamturb/capacity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "oamturb/error.hpp"
#include "oamturb/io.hpp"
#include "oamturb/parallel.hpp"

namespace oamturb {

namespace {

constexpr double column_sum_tol = 1e-9;

void require_stochastic(const Eigen::MatrixXd& w) {
  if (w.cols() < 1 || w.rows() < 1) throw std::invalid_argument("channel matrix is empty");
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const double v = w(i, j);
      if (!(v >= -column_sum_tol && v <= 1.0 + column_sum_tol))
        throw std::invalid_argument(fmt::format("channel entry ({}, {}) = {} outside [0, 1]", i, j, v));
      sum += v;
    }
    if (std::abs(sum - 1.0) > column_sum_tol)
      throw std::invalid_argument(
          fmt::format("channel column {} sums to {}; normalize the matrix before computing capacity", j, sum));
  }
}

void require_input(std::span<const double> p, Eigen::Index n) {
  if (static_cast<Eigen::Index>(p.size()) != n)
    throw std::invalid_argument("input distribution length does not match the channel");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument("input probabilities must be non-negative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("input probabilities must sum to 1 within 1e-12");
}

void require_normalized(const CrosstalkMatrix& m) {
  if (m.normalization == Normalization::subunital)
    throw std::invalid_argument("capacity needs a normalized matrix (postselected or erasure); got subunital");
}

double xlog2x_ratio(double w, double q) { return w > 0.0 ? w * std::log2(w / q) : 0.0; }

// D(W(.|s) || q) for every column.
Eigen::VectorXd divergences(const Eigen::MatrixXd& w, const Eigen::VectorXd& q) {
  Eigen::VectorXd d(w.cols());
  for (Eigen::Index s = 0; s < w.cols(); ++s) {
    double acc = 0.0;
    for (Eigen::Index r = 0; r < w.rows(); ++r) acc += xlog2x_ratio(w(r, s), q(r));
    d(s) = acc;
  }
  return d;
}

// Newton step on the face of the simplex spanned by the current support,
// limited to stay feasible and backtracked until mutual information improves.
std::optional<Eigen::VectorXd> newton_candidate(const Eigen::MatrixXd& w, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                                                const Eigen::VectorXd& d, double current) {
  std::vector<Eigen::Index> support;
  const double floor = 1e-12 * p.maxCoeff();
  for (Eigen::Index s = 0; s < p.size(); ++s)
    if (p(s) > floor) support.push_back(s);
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k < 2) return std::nullopt;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a; b < k; ++b) {
      double h = 0.0;
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        if (q(r) > 0.0) h += w(r, support[a]) * w(r, support[b]) / q(r);
      kkt(a, b) = kkt(b, a) = -h / std::numbers::ln2;
    }
    kkt(a, k) = kkt(k, a) = 1.0;
    rhs(a) = -d(support[a]);
  }
  const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  Eigen::VectorXd step = Eigen::VectorXd::Zero(p.size());
  for (Eigen::Index a = 0; a < k; ++a) step(support[a]) = sol(a);
  if (!step.allFinite()) return std::nullopt;

  double t = 1.0;
  for (Eigen::Index s = 0; s < p.size(); ++s)
    if (step(s) < 0.0) t = std::min(t, 0.999 * p(s) / -step(s));
  for (int halving = 0; halving < 30; ++halving, t *= 0.5) {
    Eigen::VectorXd cand = (p + t * step).cwiseMax(0.0);
    cand /= cand.sum();
    const Eigen::VectorXd qc = w * cand;
    if (cand.dot(divergences(w, qc)) > current) return cand;
  }
  return std::nullopt;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

InputDistribution InputDistribution::uniform(int n) {
  if (n < 1) throw std::invalid_argument("input distribution needs at least one symbol");
  return {std::vector<double>(static_cast<std::size_t>(n), 1.0 / n)};
}

void InputDistribution::validate() const { require_input(probabilities, static_cast<Eigen::Index>(probabilities.size())); }

double mutual_information(const Eigen::MatrixXd& channel, std::span<const double> input) {
  require_stochastic(channel);
  require_input(input, channel.cols());
  const Eigen::Map<const Eigen::VectorXd> p(input.data(), static_cast<Eigen::Index>(input.size()));
  const Eigen::VectorXd q = channel * p;
  return p.dot(divergences(channel, q));
}

double mutual_information(const CrosstalkMatrix& matrix, const InputDistribution& input) {
  require_normalized(matrix);
  return mutual_information(matrix.entries, input.probabilities);
}

CapacityResult blahut_arimoto(const Eigen::MatrixXd& channel, double tol, int max_iter) {
  require_stochastic(channel);
  if (!(tol > 0.0)) throw std::invalid_argument("Blahut-Arimoto tolerance must be positive");
  if (max_iter < 1) throw std::invalid_argument("Blahut-Arimoto needs at least one iteration");

  const Eigen::Index n = channel.cols();
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  CapacityResult result;
  double upper = std::numeric_limits<double>::infinity();
  // Over-relaxed step p * 2^{mu D}: kept only when it beats the plain update,
  // so every iterate is at least as good as plain Blahut-Arimoto. Near-useless
  // channels otherwise need far more than max_iter steps.
  double mu = 2.0;
  int it = 0;
  while (it < max_iter) {
    ++it;
    const Eigen::VectorXd d = divergences(channel, channel * p);
    // 2^{D_s} shifted by the max to keep the sum well scaled
    const double dmax = d.maxCoeff();
    const Eigen::ArrayXd shifted = (d.array() - dmax) * std::numbers::ln2;
    const Eigen::VectorXd c = shifted.exp().matrix();
    const double z = p.dot(c);
    const double lower = dmax + std::log2(z);
    upper = dmax;
    if (upper - lower < tol) {
      result.converged = true;
      break;
    }
    // candidates: plain step, over-relaxed step, Newton step; keep the best
    const Eigen::VectorXd plain = p.cwiseProduct(c) / z;
    Eigen::VectorXd fast = p.array() * (mu * shifted).exp();
    fast = (fast / fast.sum()).cwiseMax(1e-250);
    fast /= fast.sum();
    const Eigen::VectorXd q_plain = channel * plain;
    const Eigen::VectorXd q_fast = channel * fast;
    const double i_plain = plain.dot(divergences(channel, q_plain));
    const double i_fast = fast.dot(divergences(channel, q_fast));
    double best;
    if (i_fast >= i_plain) {
      p = fast;
      best = i_fast;
      mu = std::min(mu * 2.0, 64.0);
    } else {
      p = plain;
      best = i_plain;
      mu = std::max(mu / 2.0, 2.0);
    }
    const Eigen::VectorXd q = channel * p;
    if (auto polished = newton_candidate(channel, p, q, divergences(channel, q), best)) p = *polished;
  }
  // renormalize against drift so the result validates exactly
  p /= p.sum();
  result.optimal_input.probabilities = to_vector(p);
  result.capacity = mutual_information(channel, result.optimal_input.probabilities);
  result.upper_bound = std::max(upper, result.capacity);
  result.iterations = it;
  return result;
}

CapacityResult blahut_arimoto(const CrosstalkMatrix& matrix, double tol, int max_iter) {
  require_normalized(matrix);
  return blahut_arimoto(matrix.entries, tol, max_iter);
}

double paper_literal_capacity(const Eigen::MatrixXd& channel, std::span<const double> input) {
  require_stochastic(channel);
  require_input(input, channel.cols());
  double h_x = 0.0;
  double neg_h_y_given_x = 0.0;
  for (Eigen::Index s = 0; s < channel.cols(); ++s) {
    const double ps = input[static_cast<std::size_t>(s)];
    if (ps <= 0.0) continue;
    h_x -= ps * std::log2(ps);
    for (Eigen::Index d = 0; d < channel.rows(); ++d) {
      const double w = channel(d, s);
      if (w > 0.0) neg_h_y_given_x += ps * w * std::log2(w);
    }
  }
  return h_x + neg_h_y_given_x;
}

double paper_literal_capacity(const CrosstalkMatrix& matrix, const InputDistribution& input) {
  require_normalized(matrix);
  return paper_literal_capacity(matrix.entries, input.probabilities);
}

// --- configuration helpers --------------------------------------------------

std::string_view to_string(Method m) { return m == Method::analytic ? "analytic" : "montecarlo"; }

Method parse_method(std::string_view text) {
  if (text == "analytic") return Method::analytic;
  if (text == "montecarlo" || text == "mc") return Method::montecarlo;
  throw ConfigError(fmt::format("unknown method '{}' (expected analytic or montecarlo)", text));
}

SorterModel SorterSpec::build(const ModeSet& modes) const {
  switch (kind) {
    case SorterKind::ideal: return SorterModel::ideal(modes);
    case SorterKind::sinc_binned: return SorterModel::sinc_binned(modes);
    case SorterKind::measured: return load_sorter_csv(path, modes);
  }
  throw std::logic_error("unhandled sorter kind");
}

std::string SorterSpec::label() const {
  switch (kind) {
    case SorterKind::ideal: return "ideal";
    case SorterKind::sinc_binned: return "sinc";
    case SorterKind::measured: return "file:" + path;
  }
  return {};
}

SorterSpec SorterSpec::parse(std::string_view text) {
  if (text == "ideal") return {SorterKind::ideal, {}};
  if (text == "sinc" || text == "sinc_binned") return {SorterKind::sinc_binned, {}};
  if (text.starts_with("file:") && text.size() > 5) return {SorterKind::measured, std::string(text.substr(5))};
  throw ConfigError(fmt::format("unknown sorter '{}' (expected ideal, sinc or file:<path>)", text));
}

CrosstalkMatrix channel_matrix(const SweepConfig& config, double d_over_r0, unsigned threads) {
  const ModeSet modes = config.modes();
  modes.validate();
  const TurbulenceStrength strength{d_over_r0};
  strength.validate();
  CrosstalkMatrix raw;
  if (config.method == Method::analytic) {
    raw = analytic_matrix(modes, strength, config.quadrature, threads);
  } else {
    MonteCarloOptions mc = config.montecarlo;
    mc.threads = threads;
    raw = montecarlo_matrix(modes, strength, config.num_screens, config.seed, config.grid, config.screen_options, mc);
  }
  return normalize(apply_sorter(raw, config.sorter.build(modes)), config.normalization);
}

namespace {

// Capacity of the raw (subunital) matrix after sorter and normalization.
double capacity_of(const CrosstalkMatrix& raw, const SorterModel& sorter, const SweepConfig& config) {
  return blahut_arimoto(normalize(apply_sorter(raw, sorter), config.normalization), config.ba_tol, config.ba_max_iter)
      .capacity;
}

CurvePoint sweep_point(const SweepConfig& config, const SorterModel& sorter, double d_over_r0, unsigned threads) {
  const ModeSet modes = config.modes();
  const TurbulenceStrength strength{d_over_r0};
  CrosstalkMatrix raw;
  if (config.method == Method::analytic) {
    raw = analytic_matrix(modes, strength, config.quadrature, threads);
  } else {
    MonteCarloOptions mc = config.montecarlo;
    mc.threads = threads;
    raw = montecarlo_matrix(modes, strength, config.num_screens, config.seed, config.grid, config.screen_options, mc);
  }
  const CrosstalkMatrix channel = normalize(apply_sorter(raw, sorter), config.normalization);

  CurvePoint point;
  point.d_over_r0 = d_over_r0;
  point.result = blahut_arimoto(channel, config.ba_tol, config.ba_max_iter);
  point.paper_literal = paper_literal_capacity(channel, point.result.optimal_input);

  if (raw.standard_errors) {
    // shift one entry at a time by +-SE and keep the extreme capacities
    const double c0 = point.result.capacity;
    double lo = c0, hi = c0;
    const Eigen::MatrixXd& se = *raw.standard_errors;
    for (Eigen::Index i = 0; i < se.rows(); ++i) {
      for (Eigen::Index j = 0; j < se.cols(); ++j) {
        if (!(se(i, j) > 0.0)) continue;
        for (double sign : {-1.0, 1.0}) {
          CrosstalkMatrix shifted = raw;
          shifted.standard_errors.reset();
          shifted.entries(i, j) = std::clamp(raw.entries(i, j) + sign * se(i, j), 0.0, 1.0);
          // keep the column physically admissible
          const double col = shifted.entries.col(j).sum();
          if (col > 1.0) shifted.entries.col(j) /= col;
          if (shifted.entries.col(j).sum() <= 0.0) continue;
          const double c = capacity_of(shifted, sorter, config);
          lo = std::min(lo, c);
          hi = std::max(hi, c);
        }
      }
    }
    point.err_lo = c0 - lo;
    point.err_hi = hi - c0;
  }
  return point;
}

} // namespace

CapacityCurve capacity_sweep(const SweepConfig& config, std::span<const double> strengths) {
  config.modes().validate();
  if (strengths.empty()) throw std::invalid_argument("capacity sweep needs at least one strength");
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    TurbulenceStrength{strengths[i]}.validate();
    if (i > 0 && !(strengths[i] > strengths[i - 1]))
      throw std::invalid_argument("capacity sweep strengths must be strictly increasing");
  }
  const SorterModel sorter = config.sorter.build(config.modes());

  CapacityCurve curve;
  curve.label = fmt::format("N={} MS={}", config.dimension, config.spacing);
  curve.config = config;
  curve.points.resize(strengths.size());
  // points in parallel; each point single-threaded so work never nests
  const unsigned threads = resolve_threads(config.threads);
  if (strengths.size() >= threads || config.method == Method::analytic) {
    parallel_for(strengths.size(), threads,
                 [&](std::size_t i) { curve.points[i] = sweep_point(config, sorter, strengths[i], 1); });
  } else {
    for (std::size_t i = 0; i < strengths.size(); ++i)
      curve.points[i] = sweep_point(config, sorter, strengths[i], threads);
  }
  return curve;
}

CapacityCurve polarization_baseline(std::span<const double> strengths) {
  const Eigen::Matrix2d identity = Eigen::Matrix2d::Identity();
  const CapacityResult r = blahut_arimoto(identity);
  CapacityCurve curve;
  curve.label = "polarization";
  for (double s : strengths) {
    TurbulenceStrength{s}.validate();
    CurvePoint p;
    p.d_over_r0 = s;
    p.result = r;
    p.paper_literal = r.capacity;
    curve.points.push_back(p);
  }
  return curve;
}

Crossing find_crossing(const CapacityCurve& curve, double level) {
  const auto& pts = curve.points;
  if (pts.size() < 2) throw std::invalid_argument("find_crossing needs at least two points");
  Crossing out;
  if (pts.front().result.capacity < level) return out;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double c0 = pts[i - 1].result.capacity;
    const double c1 = pts[i].result.capacity;
    if (c0 >= level && c1 < level) {
      const double t = (c0 - level) / (c0 - c1);
      const double x0 = pts[i - 1].d_over_r0;
      out.d_over_r0 = x0 + t * (pts[i].d_over_r0 - x0);
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        if (pts[j].result.capacity >= level) out.non_monotone = true;
      return out;
    }
  }
  return out;
}

std::vector<double> strength_grid(double lo, double hi, int count, bool logarithmic) {
  if (count < 1) throw ConfigError("strength grid count must be >= 1");
  if (!(lo >= 0.0) || !(hi >= lo)) throw ConfigError("strength grid needs 0 <= lo <= hi");
  if (count == 1) return {lo};
  if (!(hi > lo)) throw ConfigError("strength grid with several points needs lo < hi");
  if (logarithmic && !(lo > 0.0)) throw ConfigError("logarithmic strength grid needs lo > 0");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    out[i] = logarithmic ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo);
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> parse_strength_grid(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto colon = text.find(':', start);
    parts.push_back(text.substr(start, colon == std::string_view::npos ? std::string_view::npos : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 4) throw ConfigError(fmt::format("strength grid '{}' must look like lo:hi:count:log", text));
  auto number = [&](std::string_view s) {
    try {
      std::size_t used = 0;
      const std::string str(s);
      const double v = std::stod(str, &used);
      if (used != str.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("strength grid '{}': '{}' is not a number", text, s));
    }
  };
  const double lo = number(parts[0]);
  const double hi = number(parts[1]);
  int count = 0;
  const auto [ptr, ec] = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), count);
  if (ec != std::errc{} || ptr != parts[2].data() + parts[2].size())
    throw ConfigError(fmt::format("strength grid '{}': count '{}' is not an integer", text, parts[2]));
  bool logarithmic;
  if (parts[3] == "log") logarithmic = true;
  else if (parts[3] == "lin") logarithmic = false;
  else throw ConfigError(fmt::format("strength grid '{}': spacing must be log or lin", text));
  return strength_grid(lo, hi, count, logarithmic);
}

} // namespace oamturb
