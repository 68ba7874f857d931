#include "cdp/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cdp::io {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError("bad number: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError("bad unsigned integer: '" + s + "'");
  return v;
}

Index parse_index(const std::string& s) {
  Index v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError("bad integer: '" + s + "'");
  return v;
}

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) parts.push_back(trim(item));
  return parts;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> parts;
  std::istringstream is(s);
  std::string item;
  while (is >> item) parts.push_back(item);
  return parts;
}
}  // namespace

std::string format_shape(const GridShape& shape) {
  std::string out;
  for (std::size_t a = 0; a < shape.dims.size(); ++a) {
    if (a) out += ' ';
    out += std::to_string(shape.dims[a]);
  }
  return out;
}

GridShape parse_shape(const std::string& s) {
  std::vector<Index> dims;
  for (const auto& tok : split_ws(s)) dims.push_back(parse_index(tok));
  if (dims.empty()) throw ParseError("shape: no dims given");
  try {
    return GridShape(dims);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("shape: ") + e.what());
  }
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_double(tok));
  return out;
}

std::vector<Index> parse_index_list(const std::string& s) {
  std::vector<Index> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_index(tok));
  return out;
}

const std::string* TextDoc::find(const std::string& key) const {
  for (const auto& [k, v] : fields)
    if (k == key) return &v;
  return nullptr;
}

const std::string& TextDoc::at(const std::string& key) const {
  const std::string* v = find(key);
  if (v == nullptr) throw ParseError("missing field '" + key + "'");
  return *v;
}

TextDoc read_doc(std::istream& in) {
  TextDoc doc;
  std::string line;
  bool in_data = false;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (in_data) {
      doc.rows.push_back(t);
      continue;
    }
    if (t == "data:") {
      in_data = true;
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected 'key = value' line, got '" + t + "'");
    doc.fields.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return doc;
}

void write_vector_file(std::ostream& out, const VectorFile& file) {
  out << "shape = " << format_shape(file.shape) << "\n";
  out << "kind = " << file.kind << "\n";
  out << "seed = " << file.seed << "\n";
  for (const auto& [k, v] : file.extras) out << k << " = " << v << "\n";
  out << "data:\n";
  for (Index k = 0; k < file.values.size(); ++k)
    out << k << ", " << format_double(file.values[k].real()) << ", "
        << format_double(file.values[k].imag()) << "\n";
}

VectorFile read_vector_file(std::istream& in) {
  const TextDoc doc = read_doc(in);
  VectorFile file;
  file.shape = parse_shape(doc.at("shape"));
  file.kind = doc.at("kind");
  file.seed = parse_u64(doc.at("seed"));
  for (const auto& [k, v] : doc.fields)
    if (k != "shape" && k != "kind" && k != "seed") file.extras[k] = v;
  const Index n = file.shape.size();
  if (static_cast<Index>(doc.rows.size()) != n)
    throw ParseError("vector file: expected " + std::to_string(n) + " rows, got " +
                     std::to_string(doc.rows.size()));
  file.values.resize(n);
  for (const auto& row : doc.rows) {
    const auto parts = split(row, ',');
    if (parts.size() != 3) throw ParseError("vector file: bad row '" + row + "'");
    const Index idx = parse_index(parts[0]);
    if (idx < 0 || idx >= n) throw ParseError("vector file: index out of range");
    file.values[idx] = Complex(parse_double(parts[1]), parse_double(parts[2]));
  }
  return file;
}

void save_vector_file(const std::filesystem::path& path, const VectorFile& file) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
  write_vector_file(out, file);
}

VectorFile load_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return read_vector_file(in);
}

VectorFile to_vector_file(const CrystalSignal<double>& x, const std::string& kind,
                          std::uint64_t seed) {
  VectorFile file{x.shape, kind, seed, {}, x.values};
  file.extras["sparsity"] = std::to_string(x.sparsity);
  return file;
}

VectorFile to_vector_file(const CodedAperture<double>& a, std::uint64_t seed) {
  return VectorFile{a.shape, to_string(a.kind), seed, {}, a.values};
}

VectorFile to_vector_file(const RegionPartition& p) {
  VectorFile file{p.shape, "contiguous-blocks", 0, {}, CVec<double>::Zero(p.shape.size())};
  file.extras["regions"] = std::to_string(p.count);
  for (Index k = 0; k < file.values.size(); ++k)
    file.values[k] = Complex(static_cast<double>(p.membership[static_cast<std::size_t>(k)]), 0.0);
  return file;
}

CrystalSignal<double> signal_from_file(const VectorFile& file) {
  CrystalSignal<double> x{file.shape, file.values, 0};
  if (const auto it = file.extras.find("sparsity"); it != file.extras.end())
    x.sparsity = parse_index(it->second);
  else
    x.sparsity = fourier_support_count(x);
  return x;
}

CodedAperture<double> aperture_from_file(const VectorFile& file) {
  CodedAperture<double> a{file.shape, file.values, parse_aperture_kind(file.kind)};
  detail::validate_aperture(a);
  return a;
}

RegionPartition partition_from_file(const VectorFile& file) {
  const auto it = file.extras.find("regions");
  if (it == file.extras.end()) throw ParseError("partition file: missing 'regions'");
  const Index count = parse_index(it->second);
  std::vector<std::int32_t> membership(static_cast<std::size_t>(file.values.size()));
  for (Index k = 0; k < file.values.size(); ++k) {
    const double r = file.values[k].real();
    membership[static_cast<std::size_t>(k)] = static_cast<std::int32_t>(std::lround(r));
  }
  return make_custom_partition(file.shape, count, std::move(membership));
}

void write_measurement_file(std::ostream& out, const MeasurementFile& file) {
  const auto& r = file.recipe;
  out << "shape = " << format_shape(r.shape) << "\n";
  out << "R = " << r.regions << "\n";
  out << "P = " << r.distances.size() << "\n";
  out << "distances =";
  for (double z : r.distances) out << ' ' << format_double(z);
  out << "\n";
  const NoiseInfo<double> noise =
      file.noise.value_or(NoiseInfo<double>{std::numeric_limits<double>::infinity(), 0.0, 0});
  out << "snr_db = " << format_double(noise.snr_db) << "\n";
  out << "sigma = " << format_double(noise.sigma) << "\n";
  out << "seed = " << noise.seed << "\n";
  out << "flattening = i,p,r\n";
  out << "ensemble = " << to_string(r.kind) << "\n";
  out << "aperture_mode = " << to_string(r.mode) << "\n";
  out << "aperture_seed = " << r.seed << "\n";
  out << "wavelength = " << format_double(r.wavelength) << "\n";
  out << "ensemble_id = " << r.id() << "\n";
  out << "data:\n";
  for (Index k = 0; k < file.values.size(); ++k) out << format_double(file.values[k]) << "\n";
}

MeasurementFile read_measurement_file(std::istream& in) {
  const TextDoc doc = read_doc(in);
  MeasurementFile file;
  file.recipe.shape = parse_shape(doc.at("shape"));
  file.recipe.regions = parse_index(doc.at("R"));
  file.recipe.distances = parse_double_list(doc.at("distances"));
  if (static_cast<Index>(file.recipe.distances.size()) != parse_index(doc.at("P")))
    throw ParseError("measurement file: P does not match the distance list");
  file.recipe.kind = parse_aperture_kind(doc.at("ensemble"));
  file.recipe.mode = parse_aperture_mode(doc.at("aperture_mode"));
  file.recipe.seed = parse_u64(doc.at("aperture_seed"));
  file.recipe.wavelength = parse_double(doc.at("wavelength"));
  if (doc.at("flattening") != "i,p,r")
    throw ParseError("measurement file: unsupported flattening order");
  const double snr = parse_double(doc.at("snr_db"));
  if (!(std::isinf(snr) && snr > 0))
    file.noise = NoiseInfo<double>{snr, parse_double(doc.at("sigma")), parse_u64(doc.at("seed"))};
  const Index m = file.recipe.shape.size() * file.recipe.regions *
                  static_cast<Index>(file.recipe.distances.size());
  if (static_cast<Index>(doc.rows.size()) != m)
    throw ParseError("measurement file: expected " + std::to_string(m) + " values");
  file.values.resize(m);
  for (Index k = 0; k < m; ++k) {
    file.values[k] = parse_double(doc.rows[static_cast<std::size_t>(k)]);
    if (file.values[k] < 0) throw ParseError("measurement file: negative intensity");
  }
  return file;
}

void save_measurement_file(const std::filesystem::path& path, const MeasurementFile& file) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
  write_measurement_file(out, file);
}

MeasurementFile load_measurement_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return read_measurement_file(in);
}

MeasurementFile to_measurement_file(const MeasurementSet<double>& g,
                                    const SensingEnsemble<double>& ens) {
  if (!ens.recipe.has_value())
    throw ParseError("to_measurement_file: ensemble has no recipe (custom parts)");
  return MeasurementFile{*ens.recipe, g.noise, g.values};
}

MeasurementSet<double> measurements_from_file(const MeasurementFile& file) {
  return MeasurementSet<double>{file.recipe.id(), file.values, file.noise};
}

void write_report(std::ostream& out, const SolverParams<double>& params,
                  const ReconstructionReport<double>& report, const GridShape& shape) {
  out << "tau = " << format_double(params.tau) << "\n";
  out << "gamma = " << format_double(params.gamma) << "\n";
  out << "gamma1 = " << format_double(params.gamma1) << "\n";
  out << "mu0 = " << format_double(params.mu0) << "\n";
  out << "iterations = " << params.iterations << "\n";
  out << "sparsity = " << params.sparsity << "\n";
  out << "alpha_y = " << format_double(params.alpha_y) << "\n";
  out << "iterations_run = " << report.iterations_run << "\n";
  out << "init_correlation = " << format_double(report.init_correlation) << "\n";
  const bool with_error = !report.error_trace.empty();
  out << "trace:\n";
  out << "t,mu,grad_norm,objective" << (with_error ? ",rel_error" : "") << "\n";
  for (Index t = 0; t < report.iterations_run; ++t) {
    const auto u = static_cast<std::size_t>(t);
    out << t << ',' << format_double(report.mu_trace[u]) << ','
        << format_double(report.grad_norm_trace[u]) << ','
        << format_double(report.objective_trace[u]);
    if (with_error) out << ',' << format_double(report.error_trace[u]);
    out << "\n";
  }
  out << "estimate:\n";
  VectorFile est{shape, "estimate", 0, {}, report.estimate};
  write_vector_file(out, est);
}

void write_condition_report(std::ostream& out, const ConditionReport<double>& report) {
  out << "# delta_target = " << format_double(report.delta_target) << "\n";
  out << "# min_ratio = " << format_double(report.min_ratio) << "\n";
  out << "# max_ratio = " << format_double(report.max_ratio) << "\n";
  out << "# spectral_quantity = " << format_double(report.spectral_quantity) << "\n";
  out << "# gram_residual = " << format_double(report.gram_residual) << "\n";
  out << "# mode = " << report.mode << "\n";
  out << "trial,ratio\n";
  for (Index t = 0; t < report.ratios.size(); ++t)
    out << t << ',' << format_double(report.ratios[t]) << "\n";
}

ApertureKind parse_aperture_kind(const std::string& s) {
  if (s == "block-unblock") return ApertureKind::BlockUnblock;
  if (s == "uniform-phase") return ApertureKind::UniformPhase;
  if (s == "custom") return ApertureKind::Custom;
  throw ParseError("unknown aperture kind '" + s + "'");
}

ApertureMode parse_aperture_mode(const std::string& s) {
  if (s == "per-distance") return ApertureMode::PerDistance;
  if (s == "single") return ApertureMode::Single;
  throw ParseError("unknown aperture mode '" + s + "'");
}

}  // namespace cdp::io
