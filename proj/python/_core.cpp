#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "oamturb/capacity.hpp"
#include "oamturb/channel.hpp"
#include "oamturb/error.hpp"
#include "oamturb/experiments.hpp"
#include "oamturb/field.hpp"
#include "oamturb/turbulence.hpp"

namespace py = pybind11;
using namespace oamturb;

namespace {

GridSpec make_grid(int resolution, double width, double aperture) {
  GridSpec g{resolution, width, aperture};
  g.validate();
  return g;
}

py::array_t<double> as_image(const GridSpec& g, std::span<const double> v) {
  py::array_t<double> out({g.resolution, g.resolution});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<std::complex<double>> as_image(const ComplexField& f) {
  const int n = f.grid().resolution;
  py::array_t<std::complex<double>> out({n, n});
  std::copy(f.samples().begin(), f.samples().end(), out.mutable_data());
  return out;
}

PhaseScreen screen_from_array(const GridSpec& g, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(0) != g.resolution || a.shape(1) != g.resolution)
    throw std::invalid_argument("phase array must be resolution x resolution");
  return PhaseScreen(g, std::vector<double>(a.data(), a.data() + a.size()), {1.0}, 0, {});
}

CrosstalkMatrix wrap_matrix(const Eigen::MatrixXd& entries, int spacing, int center) {
  CrosstalkMatrix m;
  m.modes = {static_cast<int>(entries.cols()), center, spacing};
  m.entries = entries;
  return m;
}

py::dict to_dict(const CapacityResult& r) {
  py::dict d;
  d["capacity"] = r.capacity;
  d["upper_bound"] = r.upper_bound;
  d["optimal_input"] = r.optimal_input.probabilities;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "OAM channel capacity under Kolmogorov phase turbulence";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("psd_coefficient", &kolmogorov_psd_coefficient);
  m.def("kolmogorov_structure_function", &kolmogorov_structure_function, py::arg("separation"), py::arg("r0"));

  m.def(
      "generate_screen",
      [](double d_over_r0, std::uint64_t seed, int resolution, double width, double aperture, int subharmonics) {
        const GridSpec g = make_grid(resolution, width, aperture);
        const PhaseScreen s = generate_screen(g, {d_over_r0}, seed, {subharmonics});
        return as_image(g, s.phase());
      },
      py::arg("d_over_r0"), py::arg("seed") = 1, py::arg("resolution") = 512, py::arg("width") = 2.0,
      py::arg("aperture") = 0.5, py::arg("subharmonics") = 3,
      "Kolmogorov phase screen in radians, indexed [y, x].");

  m.def("ensemble_seed", &ensemble_seed, py::arg("seed"), py::arg("index"));

  m.def(
      "structure_function",
      [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& phases,
         const std::vector<double>& separations, double width, std::string_view binning) {
        if (phases.empty()) throw std::invalid_argument("need at least one screen");
        const GridSpec g = make_grid(static_cast<int>(phases.front().shape(0)), width, width / 4);
        StructureFunctionEstimator est(g);
        for (const auto& p : phases) est.add(screen_from_array(g, p));
        PairBinning b = PairBinning::annulus;
        if (binning == "x_axis") b = PairBinning::x_axis;
        else if (binning == "y_axis") b = PairBinning::y_axis;
        else if (binning != "annulus") throw std::invalid_argument("binning must be annulus, x_axis or y_axis");
        std::vector<double> out;
        for (const auto& s : est.evaluate(separations, b)) out.push_back(s.value);
        return out;
      },
      py::arg("phases"), py::arg("separations"), py::arg("width") = 2.0, py::arg("binning") = "annulus");

  m.def(
      "oam_mode",
      [](int l, int resolution, double width, double aperture) {
        return as_image(make_oam_mode(make_grid(resolution, width, aperture), OamIndex{l}));
      },
      py::arg("l"), py::arg("resolution") = 512, py::arg("width") = 2.0, py::arg("aperture") = 0.5);
  m.def(
      "ang_mode",
      [](int n, int dimension, int resolution, double width, double aperture) {
        return as_image(make_ang_mode(make_grid(resolution, width, aperture), AngIndex{n, dimension}));
      },
      py::arg("n"), py::arg("dimension"), py::arg("resolution") = 512, py::arg("width") = 2.0,
      py::arg("aperture") = 0.5);

  m.def(
      "crosstalk", [](int delta, double d_over_r0, double tol) { return analytic_crosstalk(delta, {d_over_r0}, {tol}); },
      py::arg("delta"), py::arg("d_over_r0"), py::arg("tol") = 1e-8,
      "Probability of detecting OAM s + delta when s was sent.");
  m.def(
      "analytic_matrix",
      [](int dimension, double d_over_r0, int spacing, int center) {
        return analytic_matrix({dimension, center, spacing}, {d_over_r0}).entries;
      },
      py::arg("dimension"), py::arg("d_over_r0"), py::arg("spacing") = 1, py::arg("center") = 0);
  m.def(
      "montecarlo_matrix",
      [](int dimension, double d_over_r0, int screens, std::uint64_t seed, int spacing, int center, int resolution,
         std::string_view projector, unsigned threads) {
        MonteCarloOptions mc;
        mc.projector = parse_projector(projector);
        mc.threads = threads;
        const auto r = montecarlo_matrix({dimension, center, spacing}, {d_over_r0}, screens, seed,
                                         make_grid(resolution, 2.0, 0.5), {3}, mc);
        return py::make_tuple(r.entries, *r.standard_errors);
      },
      py::arg("dimension"), py::arg("d_over_r0"), py::arg("screens") = 20, py::arg("seed") = 1,
      py::arg("spacing") = 1, py::arg("center") = 0, py::arg("resolution") = 512,
      py::arg("projector") = "oam_subspace", py::arg("threads") = 0,
      "Ensemble mean crosstalk and per-entry standard errors.");

  m.def(
      "sorter_response",
      [](std::string_view kind, int dimension, int spacing) {
        const ModeSet ms{dimension, 0, spacing};
        return SorterSpec::parse(kind).build(ms).response;
      },
      py::arg("kind"), py::arg("dimension"), py::arg("spacing") = 1);
  m.def(
      "normalize",
      [](const Eigen::MatrixXd& entries, std::string_view policy) {
        return normalize(wrap_matrix(entries, 1, 0), parse_normalization(policy)).entries;
      },
      py::arg("entries"), py::arg("policy") = "postselected");

  m.def(
      "mutual_information",
      [](const Eigen::MatrixXd& channel, const std::vector<double>& input) { return mutual_information(channel, input); },
      py::arg("channel"), py::arg("input"));
  m.def(
      "blahut_arimoto",
      [](const Eigen::MatrixXd& channel, double tol, int max_iter) {
        return to_dict(blahut_arimoto(channel, tol, max_iter));
      },
      py::arg("channel"), py::arg("tol") = 1e-9, py::arg("max_iter") = 10000);

  m.def(
      "capacity_curve",
      [](const std::vector<double>& strengths, int dimension, int spacing, std::string_view sorter,
         std::string_view normalization, std::string_view method, int screens, std::uint64_t seed, int resolution,
         unsigned threads) {
        SweepConfig c;
        c.dimension = dimension;
        c.spacing = spacing;
        c.sorter = SorterSpec::parse(sorter);
        c.normalization = parse_normalization(normalization);
        c.method = parse_method(method);
        c.num_screens = screens;
        c.seed = seed;
        c.grid.resolution = resolution;
        c.threads = threads;
        const auto curve = capacity_sweep(c, strengths);
        py::dict d;
        std::vector<double> cap, lo, hi;
        std::vector<bool> conv;
        for (const auto& p : curve.points) {
          cap.push_back(p.result.capacity);
          lo.push_back(p.err_lo);
          hi.push_back(p.err_hi);
          conv.push_back(p.result.converged);
        }
        d["label"] = curve.label;
        d["d_over_r0"] = strengths;
        d["capacity"] = cap;
        d["err_lo"] = lo;
        d["err_hi"] = hi;
        d["converged"] = conv;
        return d;
      },
      py::arg("strengths"), py::arg("dimension") = 3, py::arg("spacing") = 1, py::arg("sorter") = "sinc",
      py::arg("normalization") = "postselected", py::arg("method") = "analytic", py::arg("screens") = 20,
      py::arg("seed") = 1, py::arg("resolution") = 512, py::arg("threads") = 0);

  m.def("strength_grid", &parse_strength_grid, py::arg("spec"), "Parse 'lo:hi:count:log|lin'.");

  m.def(
      "run_experiment",
      [](const std::string& config_json, const std::filesystem::path& out) {
        auto cfg = ExperimentConfig::from_json(nlohmann::json::parse(config_json));
        cfg.output_dir = out;
        py::gil_scoped_release release;
        return run_experiment(cfg);
      },
      py::arg("config_json"), py::arg("out"),
      "Run an experiment from a JSON config string; returns the process exit status.");
}
