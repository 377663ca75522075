#include <doctest.h>

#include <cmath>
#include <random>

#include "oamturb/capacity.hpp"
#include "oamturb/error.hpp"

using namespace oamturb;

namespace {

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

// I(X;Y) = H(Y) - H(Y|X), written independently of the library.
double mi_oracle(const Eigen::MatrixXd& w, const Eigen::Vector3d& p) {
  double hyx = 0.0;
  for (int s = 0; s < 3; ++s) hyx += p(s) * entropy(w.col(s));
  return entropy(w * p) - hyx;
}

CrosstalkMatrix tagged(Eigen::MatrixXd m, Normalization n) {
  CrosstalkMatrix c;
  c.modes = {static_cast<int>(m.cols()), 0, 1};
  c.entries = std::move(m);
  c.normalization = n;
  return c;
}

CapacityCurve curve_of(std::vector<std::pair<double, double>> pts) {
  CapacityCurve c;
  for (auto [x, y] : pts) {
    CurvePoint p;
    p.d_over_r0 = x;
    p.result.capacity = y;
    c.points.push_back(p);
  }
  return c;
}

} // namespace

TEST_SUITE("capacity") {

TEST_CASE("mutual information closed forms") {
  const auto id = tagged(Eigen::MatrixXd::Identity(11, 11), Normalization::postselected);
  CHECK(mutual_information(id, InputDistribution::uniform(11)) == doctest::Approx(std::log2(11.0)).epsilon(1e-14));
  CHECK(mutual_information(id, InputDistribution::uniform(11)) == doctest::Approx(3.4594).epsilon(1e-5));

  const auto flat = tagged(Eigen::MatrixXd::Constant(4, 4, 0.25), Normalization::postselected);
  CHECK(std::abs(mutual_information(flat, {{0.1, 0.2, 0.3, 0.4}})) < 1e-15);

  Eigen::Matrix2d bsc;
  bsc << 0.89, 0.11, 0.11, 0.89;
  const double hb = -0.11 * std::log2(0.11) - 0.89 * std::log2(0.89);
  const double mi = mutual_information(tagged(bsc, Normalization::postselected), InputDistribution::uniform(2));
  CHECK(std::abs(mi - (1.0 - hb)) < 1e-12);
  CHECK(std::abs(mi - 0.5) < 1e-4);
}

TEST_CASE("input and matrix preconditions") {
  const auto sub = tagged(Eigen::MatrixXd::Identity(3, 3) * 0.9, Normalization::subunital);
  CHECK_THROWS(mutual_information(sub, InputDistribution::uniform(3)));
  CHECK_THROWS(blahut_arimoto(sub));
  CHECK_THROWS(paper_literal_capacity(sub, InputDistribution::uniform(3)));
  const Eigen::MatrixXd raw = Eigen::MatrixXd::Identity(3, 3) * 0.9;
  CHECK_THROWS(blahut_arimoto(raw));
  const auto ok = tagged(Eigen::MatrixXd::Identity(3, 3), Normalization::postselected);
  CHECK_THROWS(mutual_information(ok, {{0.5, 0.5}}));
  CHECK_THROWS(mutual_information(ok, {{0.5, 0.6, -0.1}}));
  CHECK_THROWS(mutual_information(ok, {{0.3, 0.3, 0.3}}));
  CHECK_THROWS(InputDistribution::uniform(0));
  CHECK_THROWS(blahut_arimoto(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)), 0.0));
}

TEST_CASE("blahut-arimoto on identity") {
  for (int n : {2, 3, 11}) {
    const auto r = blahut_arimoto(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
    CHECK(r.converged);
    CHECK(r.capacity == doctest::Approx(std::log2(double(n))).epsilon(1e-12));
    for (double p : r.optimal_input.probabilities) CHECK(p == doctest::Approx(1.0 / n));
    CHECK(r.objective == Objective::mutual_information);
  }
}

TEST_CASE("blahut-arimoto matches the circulant closed form") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng() % 10);
    const Eigen::MatrixXd col = random_stochastic(rng, n, 1);
    Eigen::MatrixXd w(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) w(i, j) = col((i - j + n) % n, 0);
    const auto r = blahut_arimoto(w);
    REQUIRE(r.converged);
    CHECK(std::abs(r.capacity - (std::log2(double(n)) - entropy(col.col(0)))) < 1e-9);
    CHECK(std::abs(r.upper_bound - r.capacity) <= 1e-9);
    // the literal H(X) - H(Y|X) expansion agrees when H(X) = H(Y)
    const auto c = tagged(w, Normalization::postselected);
    CHECK(std::abs(paper_literal_capacity(c, InputDistribution::uniform(n)) -
                   mutual_information(c, InputDistribution::uniform(n))) < 1e-12);
  }
}

TEST_CASE("blahut-arimoto matches a simplex grid search") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd w = random_stochastic(rng, 3, 3);
    double best = 0.0;
    const int steps = 1000;
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; a + b <= steps; ++b) {
        const Eigen::Vector3d p(a / double(steps), b / double(steps), (steps - a - b) / double(steps));
        best = std::max(best, mi_oracle(w, p));
      }
    const auto r = blahut_arimoto(w);
    CHECK(r.converged);
    CHECK(r.capacity >= best - 1e-12);
    CHECK(r.capacity - best < 1e-3);
  }
}

TEST_CASE("data processing inequality") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng() % 8);
    const Eigen::MatrixXd w = random_stochastic(rng, n, n);
    const Eigen::MatrixXd s = random_stochastic(rng, n, n);
    CHECK(blahut_arimoto(Eigen::MatrixXd(s * w)).capacity <= blahut_arimoto(w).capacity + 2e-9);
  }
}

TEST_CASE("iteration cap returns best so far") {
  Eigen::Matrix3d w;
  w << 0.9, 0.05, 0.3, 0.05, 0.9, 0.3, 0.05, 0.05, 0.4;
  const auto r = blahut_arimoto(Eigen::MatrixXd(w), 1e-12, 1);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.capacity > 0.0);
  CHECK(r.capacity <= r.upper_bound);
}

TEST_CASE("literal H(X) - H(Y|X) objective") {
  const auto id = tagged(Eigen::MatrixXd::Identity(3, 3), Normalization::postselected);
  CHECK(paper_literal_capacity(id, InputDistribution::uniform(3)) == doctest::Approx(1.585).epsilon(1e-3));
  const auto flat = tagged(Eigen::MatrixXd::Constant(3, 3, 1.0 / 3), Normalization::postselected);
  CHECK(std::abs(paper_literal_capacity(flat, InputDistribution::uniform(3))) < 1e-15);
  // differs from I(X;Y) once H(X) != H(Y): a channel that merges two inputs
  Eigen::Matrix3d merge;
  merge << 1, 1, 0, 0, 0, 0, 0, 0, 1;
  const auto m = tagged(merge, Normalization::postselected);
  CHECK(paper_literal_capacity(m, InputDistribution::uniform(3)) == doctest::Approx(std::log2(3.0)));
  CHECK(mutual_information(m, InputDistribution::uniform(3)) < std::log2(3.0) - 0.5);
}

TEST_CASE("polarization baseline") {
  const std::vector<double> s{0.0, 1.0, 10.0, 100.0};
  const auto b = polarization_baseline(s);
  REQUIRE(b.points.size() == 4);
  for (const auto& p : b.points) CHECK(p.result.capacity == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(find_crossing(b, 1.0).d_over_r0.has_value());
}

TEST_CASE("find crossing") {
  const auto falling = curve_of({{0.0, 1.585}, {1.0, 1.2}, {2.0, 0.8}, {3.0, 0.2}});
  const auto x = find_crossing(falling, 1.0);
  REQUIRE(x.d_over_r0);
  CHECK(*x.d_over_r0 == doctest::Approx(1.5));
  CHECK_FALSE(x.non_monotone);
  CHECK_FALSE(find_crossing(falling, 0.1).d_over_r0);   // always above
  CHECK_FALSE(find_crossing(falling, 2.0).d_over_r0);   // always below
  const auto wiggly = curve_of({{0.0, 2.0}, {1.0, 0.9}, {2.0, 1.1}, {3.0, 0.5}});
  const auto w = find_crossing(wiggly, 1.0);
  REQUIRE(w.d_over_r0);
  CHECK(*w.d_over_r0 == doctest::Approx(1.0 / 1.1 * 1.0).epsilon(1e-12));
  CHECK(w.non_monotone);
  CHECK_THROWS(find_crossing(curve_of({{0.0, 1.0}}), 0.5));
}

TEST_CASE("strength grids") {
  const auto g = parse_strength_grid("0.1:30:30:log");
  REQUIRE(g.size() == 30);
  CHECK(g.front() == 0.1);
  CHECK(g.back() == 30.0);
  CHECK(g[1] / g[0] == doctest::Approx(g[29] / g[28]));
  CHECK(parse_strength_grid("0:1:3:lin") == std::vector<double>{0.0, 0.5, 1.0});
  CHECK_THROWS_AS(parse_strength_grid("0:1:3:log"), ConfigError);
  CHECK_THROWS_AS(parse_strength_grid("1:0.5:3:lin"), ConfigError);
  CHECK_THROWS_AS(parse_strength_grid("1:2:x:lin"), ConfigError);
  CHECK_THROWS_AS(parse_strength_grid("1:2:3"), ConfigError);
}

TEST_CASE("sorter spec parsing") {
  CHECK(SorterSpec::parse("ideal").kind == SorterKind::ideal);
  CHECK(SorterSpec::parse("sinc").kind == SorterKind::sinc_binned);
  const auto f = SorterSpec::parse("file:m.csv");
  CHECK(f.kind == SorterKind::measured);
  CHECK(f.path == "m.csv");
  CHECK_THROWS_AS(SorterSpec::parse("file:"), ConfigError);
  CHECK_THROWS_AS(SorterSpec::parse("gaussian"), ConfigError);
}

TEST_CASE("analytic sweeps") {
  SweepConfig c;
  c.dimension = 11;
  c.sorter = SorterSpec::parse("ideal");
  const std::vector<double> s{0.0, 0.1, 1.0, 10.0};
  const auto curve = capacity_sweep(c, s);
  CHECK(curve.points[0].result.capacity == doctest::Approx(3.4594316).epsilon(1e-7));
  CHECK(std::abs(curve.points[0].result.capacity - std::log2(11.0)) < 1e-6);
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(curve.points[i].result.capacity <= curve.points[i - 1].result.capacity);
  CHECK(curve.points[3].result.capacity < 1.0);

  c.sorter = SorterSpec::parse("sinc");
  CHECK(capacity_sweep(c, s).points[0].result.capacity < 3.46);

  c.dimension = 3;
  c.spacing = 4;
  CHECK(capacity_sweep(c, s).points[0].result.capacity >= 1.5);

  const std::vector<double> bad{1.0, 1.0};
  CHECK_THROWS(capacity_sweep(c, bad));
  const std::vector<double> neg{-1.0};
  CHECK_THROWS(capacity_sweep(c, neg));
}

TEST_CASE("every dimension drops below one bit at D/r0 = 10") {
  for (int n : {3, 5, 7, 9, 11}) {
    SweepConfig c;
    c.dimension = n;
    const std::vector<double> s{10.0};
    CHECK(capacity_sweep(c, s).points[0].result.capacity < 1.0);
  }
}

TEST_CASE("monte carlo sweeps carry error bars") {
  SweepConfig c;
  c.dimension = 3;
  c.method = Method::montecarlo;
  c.grid = {256, 2.0, 0.5};
  c.num_screens = 10;
  c.threads = 2;
  const std::vector<double> s{1.0, 4.0};
  const auto a = capacity_sweep(c, s);
  c.threads = 1;
  const auto b = capacity_sweep(c, s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(a.points[i].err_lo >= 0.0);
    CHECK(a.points[i].err_hi >= 0.0);
    CHECK(a.points[i].err_lo + a.points[i].err_hi > 0.0);
    CHECK(a.points[i].result.capacity == b.points[i].result.capacity);
    CHECK(a.points[i].err_hi == b.points[i].err_hi);
  }
}

}
