#pragma once

#include <functional>
#include <span>
#include <vector>

namespace oamturb {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  static GaussLegendreRule make(int order);

  /// Integral of f over [a, b].
  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) sum += weights[i] * f(mid + half * nodes[i]);
    return sum * half;
  }
};

struct AdaptiveResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int subintervals = 0;
  bool converged = false;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration of f over the sorted
/// breakpoints. The interval with the largest error estimate is bisected
/// until the summed estimate drops below abs_tol or max_subintervals is hit.
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, std::span<const double> breakpoints,
                                  double abs_tol, int max_subintervals = 2000);

} // namespace oamturb
