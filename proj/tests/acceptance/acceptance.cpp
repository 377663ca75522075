// Acceptance suite: one PASS/FAIL line per criterion.
//
//   oamturb_acceptance --criterion 3
//   oamturb_acceptance            (all criteria)

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <thread>

#include "oamturb/capacity.hpp"
#include "oamturb/channel.hpp"
#include "oamturb/experiments.hpp"
#include "oamturb/io.hpp"
#include "oamturb/turbulence.hpp"

using namespace oamturb;
using std::numbers::pi;

namespace {

struct Outcome {
  bool passed;
  std::string summary;
};

void detail(const std::string& line) { fmt::print("    {}\n", line); }

// --- 1 ---------------------------------------------------------------------
Outcome identity_limit() {
  double worst = 0.0;
  for (int n : {3, 5, 7, 9, 11}) {
    SweepConfig c;
    c.dimension = n;
    c.sorter = SorterSpec::parse("ideal");
    const std::vector<double> s{1e-3};
    const double cap = capacity_sweep(c, s).points[0].result.capacity;
    detail(fmt::format("N={:2d}  C={:.6f}  log2 N={:.6f}", n, cap, std::log2(n)));
    worst = std::max(worst, std::abs(cap - std::log2(n)));
  }
  return {worst <= 1e-3, fmt::format("max |C - log2 N| = {:.2e} (tol 1e-3)", worst)};
}

// --- 2 ---------------------------------------------------------------------
// Polar midpoint rule on a 4096 x 4096 grid over [0,1] x [0, 2 pi).
std::vector<double> riemann_oracle(double d_over_r0, const std::vector<int>& deltas) {
  constexpr int m = 4096;
  const double a = 3.44 * std::pow(d_over_r0, 5.0 / 3.0);
  std::vector<double> out(deltas.size(), 0.0);
  for (int j = 0; j < m; ++j) {
    const double th = (j + 0.5) * 2 * pi / m;
    const double s = std::abs(std::sin(th / 2));
    double inner = 0.0;
    for (int i = 0; i < m; ++i) {
      const double rho = (i + 0.5) / m;
      inner += rho * std::exp(-a * std::pow(rho * s, 5.0 / 3.0));
    }
    for (std::size_t k = 0; k < deltas.size(); ++k) out[k] += inner * std::cos(deltas[k] * th);
  }
  for (double& v : out) v *= (1.0 / m) * (2 * pi / m) / pi;
  return out;
}

Outcome crosstalk_correctness() {
  const std::vector<int> deltas{0, 1, 2, 5};
  double worst = 0.0;
  for (double s : {1.0, 5.12, 10.25}) {
    const auto ref = riemann_oracle(s, deltas);
    for (std::size_t k = 0; k < deltas.size(); ++k) {
      const double got = analytic_crosstalk(deltas[k], {s});
      worst = std::max(worst, std::abs(got - ref[k]));
      detail(fmt::format("D/r0={:<5} delta={}  quadrature={:.10f}  riemann={:.10f}", s, deltas[k], got, ref[k]));
    }
  }
  double worst_sum = 1.0, worst_at = 0.0;
  for (double s : {0.5, 1.0, 2.0, 5.0, 10.0}) {
    double sum = analytic_crosstalk(0, {s});
    for (int d = 1; d <= 50; ++d) sum += 2 * analytic_crosstalk(d, {s});
    detail(fmt::format("D/r0={:<5} sum_(|delta|<=50) P = {:.6f}", s, sum));
    if (sum < worst_sum) {
      worst_sum = sum;
      worst_at = s;
    }
  }
  const bool ok = worst <= 1e-6 && worst_sum >= 0.999;
  return {ok, fmt::format("max |quadrature - riemann| = {:.2e} (tol 1e-6); min completeness = {:.6f} at D/r0={} "
                          "(need >= 0.999)",
                          worst, worst_sum, worst_at)};
}

// --- 3 ---------------------------------------------------------------------
Outcome screen_statistics() {
  const GridSpec grid;  // 512 x 512
  const ScreenSynthesisOptions opts{3};
  const double d = grid.aperture_diameter();
  std::vector<double> seps;
  for (int i = 0; i < 10; ++i) seps.push_back(d * 0.05 * std::pow(10.0, i / 9.0));

  auto ensemble = [&](double strength, std::uint64_t seed) {
    StructureFunctionEstimator est(grid);
    for (int k = 0; k < 200; ++k) est.add(generate_screen(grid, {strength}, ensemble_seed(seed, k), opts));
    return est.evaluate(seps);
  };
  // independent seeds: with shared seeds the two ensembles are scaled copies
  const auto strong = ensemble(10.25, 1);
  const auto weak = ensemble(5.12, 2);
  const double r0 = TurbulenceStrength{10.25}.fried_r0(grid);
  const double expected_ratio = std::pow(10.25 / 5.12, 5.0 / 3.0);
  double worst_fit = 0.0, worst_ratio = 0.0;
  for (std::size_t i = 0; i < seps.size(); ++i) {
    const double theory = kolmogorov_structure_function(seps[i], r0);
    const double fit = strong[i].value / theory - 1.0;
    const double ratio = strong[i].value / weak[i].value / expected_ratio - 1.0;
    worst_fit = std::max(worst_fit, std::abs(fit));
    worst_ratio = std::max(worst_ratio, std::abs(ratio));
    detail(fmt::format("r/D={:.3f}  D(r)/theory={:.4f}  scaling ratio/expected={:.4f}", seps[i] / d, 1 + fit, 1 + ratio));
  }
  return {worst_fit <= 0.10 && worst_ratio <= 0.05,
          fmt::format("max fit error {:.2f}% (tol 10%), max scaling error {:.2f}% (tol 5%)", 100 * worst_fit,
                      100 * worst_ratio)};
}

// --- 4 ---------------------------------------------------------------------
Outcome mc_agreement() {
  const ModeSet ms{11, 0, 1};
  const TurbulenceStrength strength{5.12};
  const GridSpec grid;
  const int m = 200;
  const auto trials = montecarlo_trials(ms, strength, m, 1, grid, {3});
  const auto an = analytic_matrix(ms, strength);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(11, 11), var = Eigen::MatrixXd::Zero(11, 11);
  for (const auto& t : trials) mean += t;
  mean /= m;
  for (const auto& t : trials) var += (t - mean).cwiseAbs2();
  const Eigen::MatrixXd se = (var / (m - 1.0) / m).cwiseSqrt();
  const Eigen::MatrixXd z = (mean - an.entries).cwiseQuotient(se);
  for (int delta = 0; delta <= 10; ++delta)
    detail(fmt::format("delta={:2d}  analytic={:.5f}  mc={:.5f} +- {:.5f}  z={:+.2f}", delta, an.entries(delta, 0),
                       mean(delta, 0), se(delta, 0), z(delta, 0)));

  std::vector<double> dev;
  for (const auto& t : trials) dev.push_back((t - an.entries).mean());
  double md = 0.0;
  for (double v : dev) md += v;
  md /= m;
  double sd = 0.0;
  for (double v : dev) sd += (v - md) * (v - md);
  const double sigma = std::sqrt(sd / (m - 1.0) / m);
  const double worst = z.cwiseAbs().maxCoeff();
  return {worst <= 3.0 && std::abs(md) <= sigma,
          fmt::format("max |z| = {:.2f} over 121 entries (tol 3); mean signed deviation {:.2e}, sigma {:.2e}", worst, md,
                      sigma)};
}

// --- 5 ---------------------------------------------------------------------
Outcome capacity_decay() {
  const auto grid = ExperimentConfig::defaults(ExperimentKind::fig4_sweep).parameters.strengths;
  bool ok = true;
  std::string notes;
  for (int n : {3, 5, 7, 9, 11}) {
    SweepConfig c;
    c.dimension = n;
    c.sorter = SorterSpec::parse("ideal");
    const auto curve = capacity_sweep(c, grid);
    double rise = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i)
      rise = std::max(rise, curve.points[i].result.capacity - curve.points[i - 1].result.capacity);
    const std::vector<double> ten{10.0};
    const double at10 = capacity_sweep(c, ten).points[0].result.capacity;
    const auto x = find_crossing(curve, 1.0);
    const bool this_ok = rise <= 1e-9 && at10 < 1.0 && x.d_over_r0.has_value();
    ok = ok && this_ok;
    detail(fmt::format("N={:2d} ideal: max rise {:.1e}, C(10)={:.4f}, 1-bit crossing at D/r0={}", n, rise, at10,
                       x.d_over_r0 ? fmt::format("{:.4f}", *x.d_over_r0) : std::string("none")));
    c.sorter = SorterSpec::parse("sinc");
    const auto sx = find_crossing(capacity_sweep(c, grid), 1.0);
    detail(fmt::format("      sinc (info): 1-bit crossing at D/r0={}",
                       sx.d_over_r0 ? fmt::format("{:.4f}", *sx.d_over_r0) : std::string("none, starts below 1 bit")));
    notes += this_ok ? "" : fmt::format(" N={} failed", n);
  }
  return {ok, "non-increasing, below 1 bit at D/r0=10, finite 1-bit crossing for every N (ideal sorter)" + notes};
}

// --- 6 ---------------------------------------------------------------------
Outcome spacing_mitigation() {
  const auto grid = ExperimentConfig::defaults(ExperimentKind::fig5_spacing).parameters.strengths;
  std::vector<CapacityCurve> curves;
  for (int ms : {1, 2, 4}) {
    SweepConfig c;
    c.dimension = 3;
    c.spacing = ms;
    c.sorter = SorterSpec::parse("ideal");
    curves.push_back(capacity_sweep(c, grid));
  }
  double worst = 0.0;
  for (std::size_t k = 1; k < 3; ++k)
    for (std::size_t i = 0; i < grid.size(); ++i)
      worst = std::max(worst, curves[k - 1].points[i].result.capacity - curves[k].points[i].result.capacity);
  const double low = curves[2].points[1].result.capacity;  // first non-zero strength
  std::vector<double> onset;
  for (int k = 0; k < 3; ++k) {
    const double plateau = curves[k].points.front().result.capacity;
    const auto x = find_crossing(curves[k], 0.95 * plateau);
    onset.push_back(x.d_over_r0.value_or(NAN));
    detail(fmt::format("MS={}: plateau {:.4f}, onset (5% drop) at D/r0={:.4f}", 1 << k, plateau, onset.back()));
  }
  const double ratio = onset[2] / onset[0];
  detail(fmt::format("MS=4 at D/r0={}: {:.4f} bits", grid[1], low));
  return {worst <= 1e-9 && low >= 1.5 && ratio >= 5.0,
          fmt::format("ordering violation {:.1e}, MS=4 low-turbulence {:.4f} (>= 1.5), onset ratio {:.2f} (>= 5)", worst,
                      low, ratio)};
}

// --- 7 ---------------------------------------------------------------------
Eigen::MatrixXd random_stochastic(std::mt19937_64& rng, int rows, int cols) {
  std::exponential_distribution<double> e(1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) m(i, j) = e(rng);
    m.col(j) /= m.col(j).sum();
  }
  return m;
}

double entropy(const Eigen::VectorXd& v) {
  double h = 0.0;
  for (double x : v)
    if (x > 0) h -= x * std::log2(x);
  return h;
}

Outcome blahut_arimoto_correctness() {
  std::mt19937_64 rng(20240601);
  double circ = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng() % 12);
    const Eigen::MatrixXd col = random_stochastic(rng, n, 1);
    Eigen::MatrixXd w(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) w(i, j) = col((i - j + n) % n, 0);
    circ = std::max(circ, std::abs(blahut_arimoto(w).capacity - (std::log2(n) - entropy(col.col(0)))));
  }
  double grid = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd w = random_stochastic(rng, 3, 3);
    double best = 0.0;
    for (int a = 0; a <= 1000; ++a)
      for (int b = 0; a + b <= 1000; ++b) {
        const Eigen::Vector3d p(a / 1000.0, b / 1000.0, (1000 - a - b) / 1000.0);
        double hyx = 0.0;
        for (int s = 0; s < 3; ++s) hyx += p(s) * entropy(w.col(s));
        best = std::max(best, entropy(w * p) - hyx);
      }
    grid = std::max(grid, std::abs(blahut_arimoto(w).capacity - best));
  }
  double dpi = -INFINITY;
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng() % 10);
    const Eigen::MatrixXd w = random_stochastic(rng, n, n);
    const Eigen::MatrixXd s = random_stochastic(rng, n, n);
    dpi = std::max(dpi, blahut_arimoto(Eigen::MatrixXd(s * w)).capacity - blahut_arimoto(w).capacity);
  }
  detail(fmt::format("circulant max error {:.2e}; simplex grid max gap {:.2e}; max C(SW) - C(W) {:.2e}", circ, grid, dpi));
  return {circ <= 1e-9 && grid <= 1e-3 && dpi <= 2e-9,
          fmt::format("circulant {:.1e} (1e-9), grid {:.1e} (1e-3), data processing {:.1e} (<= 0)", circ, grid, dpi)};
}

// --- 8 ---------------------------------------------------------------------
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "oamturb_acceptance_determinism";
  fs::remove_all(root);
  auto cfg = ExperimentConfig::defaults(ExperimentKind::fig4_sweep);
  const unsigned wide = std::max(4u, std::thread::hardware_concurrency());
  cfg.output_dir = root / "serial";
  cfg.parameters.threads = 1;
  run_experiment(cfg);
  cfg.output_dir = root / "parallel";
  cfg.parameters.threads = wide;
  run_experiment(cfg);
  int files = 0, same = 0;
  for (const auto& e : fs::directory_iterator(root / "serial")) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    same += read_text(e.path()) == read_text(root / "parallel" / e.path().filename());
  }
  detail(fmt::format("threads 1 vs {}: {} of {} CSV files byte-identical", wide, same, files));
  return {files > 0 && same == files, fmt::format("{}/{} CSVs identical", same, files)};
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"oamturb acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "identity limit", 5, identity_limit},
      {2, "crosstalk integral correctness", 60, crosstalk_correctness},
      {3, "screen statistics", 180, screen_statistics},
      {4, "MC/analytic channel agreement", 300, mc_agreement},
      {5, "capacity decay and vanishing", 30, capacity_decay},
      {6, "mode-spacing mitigation", 30, spacing_mitigation},
      {7, "Blahut-Arimoto correctness", 0, blahut_arimoto_correctness},
      {8, "determinism", 0, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s == 0 || secs < c.budget_s;
    const bool ok = o.passed && in_time;
    failures += !ok;
    fmt::print("{} criterion {}: {} | {} | {:.1f} s{}\n", ok ? "PASS" : "FAIL", c.id, c.title, o.summary, secs,
               c.budget_s > 0 ? fmt::format(" (budget {:.0f} s)", c.budget_s) : std::string());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
