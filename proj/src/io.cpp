#include "oamturb/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "oamturb/error.hpp"

namespace oamturb {

namespace {

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(split_csv_line(line));
  }
  return rows;
}

double parse_double(const std::string& text, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("'{}': '{}' is not a number", path.string(), text));
}

int parse_int(const std::string& text, const fs::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError(fmt::format("'{}': '{}' is not an integer", path.string(), text));
}

std::uint8_t to_byte(double unit) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(unit, 0.0, 1.0) * 255.0));
}

// values stored bottom row first (iy = 0 is most negative y); PNG wants +y on top
std::vector<std::uint8_t> flip_rows(std::span<const double> values, int n, double scale, double offset) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(n) * n);
  for (int row = 0; row < n; ++row) {
    const int iy = n - 1 - row;
    for (int ix = 0; ix < n; ++ix)
      px[static_cast<std::size_t>(row) * n + ix] = to_byte((values[static_cast<std::size_t>(iy) * n + ix] + offset) * scale);
  }
  return px;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows > 0 ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  return m;
}

Provenance::Kind parse_provenance_kind(const std::string& s) {
  if (s == "analytic") return Provenance::Kind::analytic;
  if (s == "montecarlo") return Provenance::Kind::montecarlo;
  if (s == "measured") return Provenance::Kind::measured;
  throw ConfigError(fmt::format("unknown provenance kind '{}'", s));
}

} // namespace

std::string format_number(double value) {
  if (value == 0.0) value = 0.0;  // no "-0"
  return fmt::format("{:.12g}", value);
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error(fmt::format("failed writing '{}'", path.string()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_png_gray8(const fs::path& path, int width, int height, std::span<const std::uint8_t> pixels) {
  if (width <= 0 || height <= 0 || pixels.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("png: pixel buffer does not match dimensions");
  ensure_parent(path);
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(fmt::format("libpng failed writing '{}'", path.string()));
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int row = 0; row < height; ++row)
    png_write_row(png, const_cast<png_bytep>(pixels.data() + static_cast<std::size_t>(row) * width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_intensity_png(const fs::path& path, const ComplexField& field) {
  const auto intensity = field.intensity();
  const double peak = *std::max_element(intensity.begin(), intensity.end());
  const int n = field.grid().resolution;
  write_png_gray8(path, n, n, flip_rows(intensity, n, peak > 0.0 ? 1.0 / peak : 0.0, 0.0));
}

void write_phase_png(const fs::path& path, const ComplexField& field) {
  using std::numbers::pi;
  const int n = field.grid().resolution;
  write_png_gray8(path, n, n, flip_rows(field.phase(), n, 1.0 / (2.0 * pi), pi));
}

void write_field_csv(const fs::path& path, const ComplexField& field) {
  const int n = field.grid().resolution;
  std::string text = "x_index,y_index,real,imag\n";
  text.reserve(static_cast<std::size_t>(n) * n * 40);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      const Complex v = field.at(ix, iy);
      fmt::format_to(std::back_inserter(text), "{},{},{},{}\n", ix, iy, format_number(v.real()),
                     format_number(v.imag()));
    }
  write_text(path, text);
}

void write_screen_png(const fs::path& path, const PhaseScreen& screen) {
  using std::numbers::pi;
  const int n = screen.grid().resolution;
  write_png_gray8(path, n, n, flip_rows(screen.wrapped(), n, 1.0 / (2.0 * pi), 0.0));
}

void write_screen_csv(const fs::path& path, const PhaseScreen& screen) {
  const int n = screen.grid().resolution;
  std::string text = "x_index,y_index,phase\n";
  text.reserve(static_cast<std::size_t>(n) * n * 28);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix)
      fmt::format_to(std::back_inserter(text), "{},{},{}\n", ix, iy, format_number(screen.at(ix, iy)));
  write_text(path, text);
}

fs::path sidecar_path(const fs::path& csv_path) {
  fs::path p = csv_path;
  return p.replace_extension(".json");
}

void write_matrix_csv(const fs::path& path, const CrosstalkMatrix& matrix) {
  const auto ls = matrix.modes.indices();
  if (matrix.entries.cols() != static_cast<Eigen::Index>(ls.size()))
    throw std::invalid_argument("matrix columns do not match its mode set");
  std::string text = "detected";
  for (int l : ls) text += fmt::format(",{}", l);
  text += '\n';
  for (Eigen::Index i = 0; i < matrix.entries.rows(); ++i) {
    text += i < static_cast<Eigen::Index>(ls.size()) ? std::to_string(ls[i]) : std::string("loss");
    for (Eigen::Index j = 0; j < matrix.entries.cols(); ++j) text += "," + format_number(matrix.entries(i, j));
    text += '\n';
  }
  write_text(path, text);
}

nlohmann::json matrix_sidecar(const CrosstalkMatrix& matrix) {
  nlohmann::json j;
  j["mode_set"] = {{"dimension", matrix.modes.dimension},
                   {"center", matrix.modes.center},
                   {"spacing", matrix.modes.spacing},
                   {"indices", matrix.modes.indices()}};
  j["strength"] = {{"d_over_r0", matrix.strength.d_over_r0}};
  j["normalization"] = std::string(to_string(matrix.normalization));
  j["provenance"] = {{"kind", std::string(to_string(matrix.provenance.kind))},
                     {"num_screens", matrix.provenance.num_screens},
                     {"seed", matrix.provenance.seed},
                     {"projector", matrix.provenance.projector},
                     {"subharmonic_levels", matrix.provenance.subharmonic_levels}};
  j["standard_errors"] = matrix.standard_errors ? matrix_to_json(*matrix.standard_errors) : nlohmann::json(nullptr);
  return j;
}

void write_matrix(const fs::path& csv_path, const CrosstalkMatrix& matrix) {
  write_matrix_csv(csv_path, matrix);
  write_json(sidecar_path(csv_path), matrix_sidecar(matrix));
}

MatrixTable read_matrix_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  if (rows.empty() || rows[0].empty() || rows[0][0] != "detected")
    throw ConfigError(fmt::format("'{}': expected a header starting with 'detected'", path.string()));
  MatrixTable table;
  for (std::size_t k = 1; k < rows[0].size(); ++k) table.sent.push_back(parse_int(rows[0][k], path));
  const auto cols = static_cast<Eigen::Index>(table.sent.size());
  if (cols == 0) throw ConfigError(fmt::format("'{}': no sent-mode columns", path.string()));
  table.values.resize(static_cast<Eigen::Index>(rows.size() - 1), cols);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (static_cast<Eigen::Index>(row.size()) != cols + 1)
      throw ConfigError(fmt::format("'{}': row {} has {} cells, expected {}", path.string(), r + 1, row.size(), cols + 1));
    if (row[0] == "loss") {
      if (r + 1 != rows.size()) throw ConfigError(fmt::format("'{}': loss row must come last", path.string()));
      table.loss_row = true;
    } else {
      table.detected.push_back(parse_int(row[0], path));
    }
    for (Eigen::Index c = 0; c < cols; ++c)
      table.values(static_cast<Eigen::Index>(r - 1), c) = parse_double(row[static_cast<std::size_t>(c) + 1], path);
  }
  return table;
}

CrosstalkMatrix read_matrix(const fs::path& csv_path) {
  const MatrixTable table = read_matrix_csv(csv_path);
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(read_text(sidecar_path(csv_path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("'{}': {}", sidecar_path(csv_path).string(), e.what()));
  }
  CrosstalkMatrix m;
  try {
    m.modes = {side.at("mode_set").at("dimension").get<int>(), side.at("mode_set").at("center").get<int>(),
               side.at("mode_set").at("spacing").get<int>()};
    m.strength = {side.at("strength").at("d_over_r0").get<double>()};
    m.normalization = parse_normalization(side.at("normalization").get<std::string>());
    const auto& prov = side.at("provenance");
    m.provenance = {parse_provenance_kind(prov.at("kind").get<std::string>()), prov.at("num_screens").get<int>(),
                    prov.at("seed").get<std::uint64_t>(), prov.at("projector").get<std::string>(),
                    prov.at("subharmonic_levels").get<int>()};
    if (!side.at("standard_errors").is_null()) m.standard_errors = matrix_from_json(side.at("standard_errors"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("'{}': {}", sidecar_path(csv_path).string(), e.what()));
  }
  if (table.sent != m.modes.indices() || table.detected != m.modes.indices())
    throw ConfigError(fmt::format("'{}': indices do not match the sidecar mode set", csv_path.string()));
  m.entries = table.values;
  m.validate(1e-9);
  return m;
}

SorterModel load_sorter_csv(const fs::path& path, const ModeSet& modes) {
  const MatrixTable table = read_matrix_csv(path);
  if (table.loss_row) throw ConfigError(fmt::format("'{}': a sorter response cannot have a loss row", path.string()));
  const auto ls = modes.indices();
  if (table.sent != ls || table.detected != ls)
    throw ConfigError(fmt::format("'{}': sorter indices do not match the detected mode set", path.string()));
  try {
    return SorterModel::measured(table.values);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("'{}': {}", path.string(), e.what()));
  }
}

void write_curve_csv(const fs::path& path, const CapacityCurve& curve) {
  std::string text = "d_over_r0,capacity_bits,err_lo,err_hi,converged\n";
  for (const auto& p : curve.points)
    text += fmt::format("{},{},{},{},{}\n", format_number(p.d_over_r0), format_number(p.result.capacity),
                        format_number(p.err_lo), format_number(p.err_hi), p.result.converged ? 1 : 0);
  write_text(path, text);
}

nlohmann::json sweep_config_json(const SweepConfig& c) {
  return {{"dimension", c.dimension},
          {"spacing", c.spacing},
          {"center", c.center},
          {"sorter", c.sorter.label()},
          {"normalization", std::string(to_string(c.normalization))},
          {"method", std::string(to_string(c.method))},
          {"quadrature",
           {{"abs_tol", c.quadrature.abs_tol},
            {"radial_nodes", c.quadrature.radial_nodes},
            {"max_subintervals", c.quadrature.max_subintervals}}},
          {"grid",
           {{"resolution", c.grid.resolution},
            {"physical_width", c.grid.physical_width},
            {"aperture_radius", c.grid.aperture_radius}}},
          {"subharmonics", c.screen_options.subharmonic_levels},
          {"projector", std::string(to_string(c.montecarlo.projector))},
          {"radial_samples", c.montecarlo.radial_samples},
          {"angular_samples", c.montecarlo.angular_samples},
          {"screens", c.num_screens},
          {"seed", c.seed},
          {"ba_tol", c.ba_tol},
          {"ba_max_iter", c.ba_max_iter}};
}

nlohmann::json curve_sidecar(const CapacityCurve& curve) {
  nlohmann::json j;
  j["label"] = curve.label;
  j["config"] = curve.config ? sweep_config_json(*curve.config) : nlohmann::json(nullptr);
  j["objective"] = "mutual_information";
  auto iterations = nlohmann::json::array();
  auto literal = nlohmann::json::array();
  for (const auto& p : curve.points) {
    iterations.push_back(p.result.iterations);
    if (std::abs(p.paper_literal - p.result.capacity) > 1e-6)
      literal.push_back({{"d_over_r0", p.d_over_r0},
                         {"mutual_information", p.result.capacity},
                         {"paper_literal", p.paper_literal}});
  }
  j["iterations"] = std::move(iterations);
  j["paper_literal_differences"] = std::move(literal);
  return j;
}

void write_curve(const fs::path& csv_path, const CapacityCurve& curve) {
  write_curve_csv(csv_path, curve);
  write_json(sidecar_path(csv_path), curve_sidecar(curve));
}

CurveTable read_curve_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  const std::vector<std::string> header{"d_over_r0", "capacity_bits", "err_lo", "err_hi", "converged"};
  if (rows.empty() || rows[0] != header)
    throw ConfigError(fmt::format("'{}': unexpected curve header", path.string()));
  CurveTable t;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw ConfigError(fmt::format("'{}': row {} has {} cells", path.string(), r + 1, rows[r].size()));
    t.d_over_r0.push_back(parse_double(rows[r][0], path));
    t.capacity.push_back(parse_double(rows[r][1], path));
    t.err_lo.push_back(parse_double(rows[r][2], path));
    t.err_hi.push_back(parse_double(rows[r][3], path));
    t.converged.push_back(rows[r][4] == "1");
  }
  return t;
}

} // namespace oamturb
