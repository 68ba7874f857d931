#include "cdp/experiments.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace cdp {

namespace {
using io::format_double;
using io::ParseError;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string format_index_list(const std::vector<Index>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ' ';
    out += std::to_string(v[k]);
  }
  return out;
}

std::string format_double_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k) out += ' ';
    out += format_double(v[k]);
  }
  return out;
}
}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  const io::TextDoc doc = io::read_doc(in);
  if (!doc.rows.empty()) throw ParseError("config: unexpected data section");
  for (const auto& [key, value] : doc.fields) {
    if (key == "shape") c.shape = io::parse_shape(value);
    else if (key == "s_grid") c.s_grid = io::parse_index_list(value);
    else if (key == "p_grid") c.p_grid = io::parse_index_list(value);
    else if (key == "r_grid") c.r_grid = io::parse_index_list(value);
    else if (key == "ensemble") c.ensemble = io::parse_aperture_kind(value);
    else if (key == "aperture_mode") c.aperture_mode = io::parse_aperture_mode(value);
    else if (key == "trials") c.trials = io::parse_index(value);
    else if (key == "success_threshold") c.success_threshold = io::parse_double(value);
    else if (key == "tau") c.solver.tau = io::parse_double(value);
    else if (key == "gamma") c.solver.gamma = io::parse_double(value);
    else if (key == "gamma1") c.solver.gamma1 = io::parse_double(value);
    else if (key == "mu0") c.solver.mu0 = io::parse_double(value);
    else if (key == "iterations") c.solver.iterations = io::parse_index(value);
    else if (key == "alpha_y") c.solver.alpha_y = io::parse_double(value);
    else if (key == "snr_db") c.snr_db = io::parse_double(value);
    else if (key == "seed") c.seed = io::parse_u64(value);
    else if (key == "out") c.out = value;
    else if (key == "threads") c.threads = static_cast<int>(io::parse_index(value));
    else if (key == "wavelength") c.wavelength = io::parse_double(value);
    else if (key == "distances") c.distances = io::parse_double_list(value);
    else if (key == "phantom") c.phantom = value;
    else if (key == "s") c.s = io::parse_index(value);
    else if (key == "P") c.P = io::parse_index(value);
    else if (key == "R") c.R = io::parse_index(value);
    else if (key == "period") c.period = io::parse_index(value);
    else if (key == "amplitude_a") c.amplitude_a = io::parse_double(value);
    else if (key == "amplitude_b") c.amplitude_b = io::parse_double(value);
    else if (key == "verify_trials") c.verify_trials = io::parse_index(value);
    else if (key == "delta_target") c.delta_target = io::parse_double(value);
    else throw ParseError("config: unknown key '" + key + "'");
  }
  if (c.s_grid.empty() || c.p_grid.empty() || c.r_grid.empty())
    throw ParseError("config: grids must be nonempty");
  if (c.trials < 1) throw ParseError("config: trials must be >= 1");
  for (Index s : c.s_grid)
    if (s < 1 || s > c.shape.size()) throw ParseError("config: s_grid entry out of range");
  for (Index p : c.p_grid)
    if (p < 1) throw ParseError("config: p_grid entry out of range");
  for (Index r : c.r_grid)
    if (r < 1 || r > c.shape.size()) throw ParseError("config: r_grid entry out of range");
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path.string() + "'");
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c) {
  out << "shape = " << io::format_shape(c.shape) << "\n";
  out << "s_grid = " << format_index_list(c.s_grid) << "\n";
  out << "p_grid = " << format_index_list(c.p_grid) << "\n";
  out << "r_grid = " << format_index_list(c.r_grid) << "\n";
  out << "ensemble = " << to_string(c.ensemble) << "\n";
  out << "aperture_mode = " << to_string(c.aperture_mode) << "\n";
  out << "trials = " << c.trials << "\n";
  out << "success_threshold = " << format_double(c.success_threshold) << "\n";
  out << "tau = " << format_double(c.solver.tau) << "\n";
  out << "gamma = " << format_double(c.solver.gamma) << "\n";
  out << "gamma1 = " << format_double(c.solver.gamma1) << "\n";
  out << "mu0 = " << format_double(c.solver.mu0) << "\n";
  out << "iterations = " << c.solver.iterations << "\n";
  out << "alpha_y = " << format_double(c.solver.alpha_y) << "\n";
  out << "snr_db = " << format_double(c.snr_db) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "wavelength = " << format_double(c.wavelength) << "\n";
  if (!c.distances.empty()) out << "distances = " << format_double_list(c.distances) << "\n";
  out << "phantom = " << c.phantom << "\n";
  out << "s = " << c.s << "\n";
  out << "P = " << c.P << "\n";
  out << "R = " << c.R << "\n";
  out << "period = " << c.period << "\n";
  out << "amplitude_a = " << format_double(c.amplitude_a) << "\n";
  out << "amplitude_b = " << format_double(c.amplitude_b) << "\n";
  out << "verify_trials = " << c.verify_trials << "\n";
  out << "delta_target = " << format_double(c.delta_target) << "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  std::ostringstream os;
  write_config(os, config);
  const std::string text = os.str();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

void run_parallel(Index jobs, int threads, const std::function<void(Index)>& fn) {
  int count = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  count = std::max(1, std::min<int>(count, static_cast<int>(jobs)));
  if (count <= 1) {
    for (Index j = 0; j < jobs; ++j) fn(j);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const Index j = next.fetch_add(1);
        if (j >= jobs) return;
        try {
          fn(j);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {
struct TrialResult {
  double rel_error = 0;
  bool success = false;
  double runtime_s = 0;
};

TrialResult run_trial(const ExperimentConfig& config, Index s, Index p_count, Index r_count,
                      std::uint64_t trial_seed) {
  const double t0 = now_seconds();
  const std::uint64_t signal_seed = derive_seed(trial_seed, 1, 0);
  const std::uint64_t aperture_seed = derive_seed(trial_seed, 2, 0);
  const std::uint64_t noise_seed = derive_seed(trial_seed, 3, 0);

  const auto x = gen_sparse_signal<double>(config.shape, s, signal_seed);
  const auto ens = make_ensemble<double>(config.shape, config.distances_for(p_count),
                                         config.ensemble, config.aperture_mode, r_count,
                                         aperture_seed, config.wavelength);
  MeasurementSet<double> g = forward(x.values, ens);
  if (!(std::isinf(config.snr_db) && config.snr_db > 0))
    g = add_noise(g, config.snr_db, noise_seed);

  SolverParams<double> params = config.solver;
  params.sparsity = s;
  const auto report = reconstruct(g, ens, params, &x.values);

  TrialResult result;
  result.rel_error = relative_error(report.estimate, x.values);
  result.success = result.rel_error <= config.success_threshold;
  result.runtime_s = now_seconds() - t0;
  return result;
}
}  // namespace

PhaseDiagram run_phase_diagram(const ExperimentConfig& config) {
  const double t0 = now_seconds();
  PhaseDiagram pd;
  pd.master_seed = config.seed;
  pd.hash = config_hash(config);
  pd.s_values = config.s_grid;
  for (Index p : config.p_grid)
    for (Index r : config.r_grid) pd.pr_values.emplace_back(p, r);

  const Index cell_count = static_cast<Index>(pd.s_values.size() * pd.pr_values.size());
  const Index jobs = cell_count * config.trials;
  std::vector<TrialResult> results(static_cast<std::size_t>(jobs));

  run_parallel(jobs, config.threads, [&](Index job) {
    const Index cell = job / config.trials;
    const Index trial = job % config.trials;
    const Index si = cell / static_cast<Index>(pd.pr_values.size());
    const Index pri = cell % static_cast<Index>(pd.pr_values.size());
    const auto [p_count, r_count] = pd.pr_values[static_cast<std::size_t>(pri)];
    const std::uint64_t trial_seed =
        derive_seed(config.seed, static_cast<std::uint64_t>(cell),
                    static_cast<std::uint64_t>(trial));
    results[static_cast<std::size_t>(job)] =
        run_trial(config, pd.s_values[static_cast<std::size_t>(si)], p_count, r_count, trial_seed);
  });

  for (Index cell = 0; cell < cell_count; ++cell) {
    const Index si = cell / static_cast<Index>(pd.pr_values.size());
    const Index pri = cell % static_cast<Index>(pd.pr_values.size());
    PhaseCell out;
    out.s = pd.s_values[static_cast<std::size_t>(si)];
    out.P = pd.pr_values[static_cast<std::size_t>(pri)].first;
    out.R = pd.pr_values[static_cast<std::size_t>(pri)].second;
    out.m_over_n = static_cast<double>(out.P * out.R);
    out.trials = config.trials;
    for (Index trial = 0; trial < config.trials; ++trial) {
      const auto& r = results[static_cast<std::size_t>(cell * config.trials + trial)];
      out.successes += r.success ? 1 : 0;
      out.mean_rel_error += r.rel_error;
      out.mean_runtime_s += r.runtime_s;
      TrialOutcome trial_row;
      trial_row.rel_error = r.rel_error;
      trial_row.success = r.success;
      trial_row.seed = derive_seed(config.seed, static_cast<std::uint64_t>(cell),
                                   static_cast<std::uint64_t>(trial));
      trial_row.config_id = "s=" + std::to_string(out.s) + "/P=" + std::to_string(out.P) +
                            "/R=" + std::to_string(out.R) + "/trial=" + std::to_string(trial);
      pd.outcomes.push_back(std::move(trial_row));
    }
    out.success_rate = static_cast<double>(out.successes) / static_cast<double>(out.trials);
    out.mean_rel_error /= static_cast<double>(out.trials);
    out.mean_runtime_s /= static_cast<double>(out.trials);
    pd.cells.push_back(out);
  }
  pd.runtime_s = now_seconds() - t0;
  return pd;
}

std::vector<std::string> PhaseDiagram::monotonicity_warnings() const {
  std::vector<std::string> warnings;
  const std::size_t cols = pr_values.size();
  // average success over the s axis for each (P,R) column, in m/n order
  std::vector<std::pair<double, double>> columns;  // (m/n, mean rate)
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = 0;
    for (std::size_t si = 0; si < s_values.size(); ++si)
      mean += cells[si * cols + c].success_rate;
    columns.emplace_back(cells[c].m_over_n, mean / static_cast<double>(s_values.size()));
  }
  std::sort(columns.begin(), columns.end());
  for (std::size_t c = 1; c < columns.size(); ++c) {
    if (columns[c].second < columns[c - 1].second) {
      std::ostringstream os;
      os << "mean success rate drops from " << format_double(columns[c - 1].second) << " at m/n = "
         << format_double(columns[c - 1].first) << " to " << format_double(columns[c].second)
         << " at m/n = " << format_double(columns[c].first);
      warnings.push_back(os.str());
    }
  }
  return warnings;
}

void write_phase_diagram_files(const std::filesystem::path& dir, const PhaseDiagram& pd) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "phase_diagram.csv");
    if (!csv) throw ParseError("cannot write phase_diagram.csv");
    csv << "# config_hash = " << pd.hash << "\n";
    csv << "# master_seed = " << pd.master_seed << "\n";
    csv << "# runtime_s = " << format_double(pd.runtime_s) << "\n";
    csv << "s,m_over_n,P,R,trials,successes,success_rate,mean_rel_error,mean_runtime_s\n";
    for (const auto& c : pd.cells)
      csv << c.s << ',' << format_double(c.m_over_n) << ',' << c.P << ',' << c.R << ','
          << c.trials << ',' << c.successes << ',' << format_double(c.success_rate) << ','
          << format_double(c.mean_rel_error) << ',' << format_double(c.mean_runtime_s) << "\n";
  }
  {
    std::ofstream mat(dir / "phase_diagram_matrix.txt");
    if (!mat) throw ParseError("cannot write phase_diagram_matrix.txt");
    mat << "# rows: s = " << format_index_list(pd.s_values) << "\n";
    mat << "# cols: m_over_n =";
    for (const auto& [p, r] : pd.pr_values) mat << ' ' << format_double(static_cast<double>(p * r));
    mat << "\n";
    const std::size_t cols = pd.pr_values.size();
    for (std::size_t si = 0; si < pd.s_values.size(); ++si) {
      for (std::size_t c = 0; c < cols; ++c)
        mat << (c ? " " : "") << format_double(pd.cells[si * cols + c].success_rate);
      mat << "\n";
    }
  }
  {
    std::ofstream trials(dir / "trials.csv");
    if (!trials) throw ParseError("cannot write trials.csv");
    trials << "config_id,seed,rel_error,success\n";
    for (const auto& o : pd.outcomes)
      trials << o.config_id << ',' << o.seed << ',' << format_double(o.rel_error) << ','
             << (o.success ? 1 : 0) << "\n";
  }
}

SimulatedInstance simulate_instance(const ExperimentConfig& config) {
  SimulatedInstance instance;
  const std::uint64_t signal_seed = derive_seed(config.seed, 1, 0);
  const std::uint64_t aperture_seed = derive_seed(config.seed, 2, 0);
  const std::uint64_t noise_seed = derive_seed(config.seed, 3, 0);

  if (config.phantom == "sparse") {
    instance.truth = gen_sparse_signal<double>(config.shape, config.s, signal_seed);
  } else if (config.phantom == "rock-salt") {
    LatticeParams<double> lp;
    lp.period = config.period;
    lp.amplitude_a = Complex(config.amplitude_a, 0);
    lp.amplitude_b = Complex(config.amplitude_b, 0);
    instance.truth = gen_crystal_lattice<double>(config.shape, LatticeKind::RockSalt, lp);
  } else {
    throw ParseError("config: unknown phantom '" + config.phantom + "'");
  }
  if (instance.truth.sparsity < 1) throw ParseError("config: phantom has empty Fourier support");

  instance.ensemble = make_ensemble<double>(config.shape, config.distances_for(config.P),
                                            config.ensemble, config.aperture_mode, config.R,
                                            aperture_seed, config.wavelength);
  instance.measurements = forward(instance.truth.values, instance.ensemble);
  if (!(std::isinf(config.snr_db) && config.snr_db > 0))
    instance.measurements = add_noise(instance.measurements, config.snr_db, noise_seed);
  return instance;
}

void write_simulation_files(const std::filesystem::path& dir, const ExperimentConfig& config,
                            const SimulatedInstance& instance) {
  std::filesystem::create_directories(dir);
  io::save_vector_file(dir / "truth.txt",
                       io::to_vector_file(instance.truth, config.phantom,
                                          derive_seed(config.seed, 1, 0)));
  io::save_measurement_file(dir / "measurements.txt",
                            io::to_measurement_file(instance.measurements, instance.ensemble));
}

ReconExperiment run_recon_experiment(const ExperimentConfig& config) {
  ReconExperiment result;
  SimulatedInstance instance = simulate_instance(config);
  result.truth = std::move(instance.truth);
  result.ensemble = std::move(instance.ensemble);
  result.measurements = std::move(instance.measurements);

  SolverParams<double> params = config.solver;
  params.sparsity = result.truth.sparsity;
  result.report = reconstruct(result.measurements, result.ensemble, params, &result.truth.values);
  result.final_error = relative_error(result.report.estimate, result.truth.values);
  return result;
}

void write_recon_files(const std::filesystem::path& dir, const ExperimentConfig& config,
                       const ReconExperiment& result) {
  std::filesystem::create_directories(dir);
  write_simulation_files(dir, config, {result.truth, result.ensemble, result.measurements});
  SolverParams<double> params = config.solver;
  params.sparsity = result.truth.sparsity;
  {
    std::ofstream out(dir / "report.txt");
    if (!out) throw ParseError("cannot write report.txt");
    io::write_report(out, params, result.report, config.shape);
  }
  io::save_vector_file(
      dir / "estimate.txt",
      io::VectorFile{config.shape, "estimate", 0, {}, result.report.estimate});
}

namespace {
VerifyCheck make_check(std::string name, double value, double bound, bool informational = false) {
  VerifyCheck c;
  c.name = std::move(name);
  c.value = value;
  c.bound = bound;
  c.informational = informational;
  c.pass = informational || value <= bound;
  return c;
}
}  // namespace

VerifyResult run_verify(const ExperimentConfig& config) {
  VerifyResult result;
  const GridShape shape = config.shape.size() <= 16 ? config.shape : GridShape::line(16);
  const Index n = shape.size();

  // Oracle equivalence: FFT-factored field/adjoint against the dense matrix
  // over a handful of random small ensembles.
  {
    double worst_field = 0, worst_adjoint = 0;
    for (int k = 0; k < 10; ++k) {
      Rng rng(derive_seed(config.seed, 10, static_cast<std::uint64_t>(k)));
      const Index p_count = 1 + static_cast<Index>(rng.uniform_index(3));
      const Index r_count = 1 + static_cast<Index>(rng.uniform_index(std::min<Index>(4, n)));
      const ApertureKind kind =
          rng.uniform() < 0.5 ? ApertureKind::BlockUnblock : ApertureKind::UniformPhase;
      std::vector<double> zs;
      for (Index p = 0; p < p_count; ++p) zs.push_back(rng.uniform() * 2.0 * n);
      const auto ens = make_ensemble<double>(shape, zs, kind, ApertureMode::PerDistance,
                                             r_count, rng.bits(), config.wavelength);
      CVec<double> x(n), v(ens.m());
      for (Index i = 0; i < n; ++i) x[i] = rng.cgaussian();
      for (Index i = 0; i < ens.m(); ++i) v[i] = rng.cgaussian();
      const CMat<double> b = explicit_matrix(ens);
      const CVec<double> bx = b * x;
      worst_field = std::max(worst_field, (field(x, ens) - bx).norm() / bx.norm());
      const CVec<double> bv = b.adjoint() * v;
      worst_adjoint = std::max(worst_adjoint, (adjoint_field(v, ens) - bv).norm() / bv.norm());
    }
    result.checks.push_back(make_check("field vs dense matrix (10 ensembles)", worst_field, 1e-10));
    result.checks.push_back(make_check("adjoint vs dense matrix (10 ensembles)", worst_adjoint, 1e-10));
  }

  // Gram collapse for both aperture kinds, single-aperture mode.
  for (const ApertureKind kind : {ApertureKind::BlockUnblock, ApertureKind::UniformPhase}) {
    const auto ens = make_ensemble<double>(shape, default_distances<double>(shape, 2), kind,
                                           ApertureMode::Single, std::min<Index>(2, n),
                                           derive_seed(config.seed, 20, kind == ApertureKind::BlockUnblock ? 0 : 1),
                                           config.wavelength);
    result.checks.push_back(
        make_check("gram collapse, " + to_string(kind) + " single aperture",
                   check_gram_identity(ens), 1e-10));
  }

  // Spectral quantity: identity-aperture collapse gives exactly 1/m.
  {
    const auto identity = make_custom_aperture<double>(shape, CVec<double>::Ones(n));
    const auto ens = assemble_ensemble<double>(shape, {0.0}, {identity},
                                               ApertureMode::Single, gen_regions(shape, 1),
                                               config.wavelength);
    const double sq = spectral_quantity(ens);
    result.checks.push_back(make_check("spectral quantity, identity ensemble: |sq - 1/m|",
                                       std::abs(sq - 1.0 / static_cast<double>(ens.m())), 1e-12));
  }

  // Sampled tangent-space condition at the configured size.
  {
    const auto ens = make_ensemble<double>(config.shape, config.distances_for(config.P),
                                           config.ensemble, config.aperture_mode, config.R,
                                           derive_seed(config.seed, 30, 0), config.wavelength);
    const auto x = gen_sparse_signal<double>(config.shape, std::min<Index>(config.s, config.shape.size()),
                                             derive_seed(config.seed, 31, 0));
    result.condition = sample_condition1(x.values, ens, config.verify_trials,
                                         derive_seed(config.seed, 32, 0), config.delta_target);
    result.checks.push_back(make_check("condition upper bound: max_ratio vs 1+delta",
                                       result.condition.max_ratio, 1.0 + config.delta_target));
    result.checks.push_back(make_check("condition lower spread: min_ratio (reported only)",
                                       result.condition.min_ratio, 0.0, true));
    result.checks.push_back(make_check("spectral quantity (reported only)",
                                       result.condition.spectral_quantity, 0.0, true));
  }

  result.all_pass = true;
  for (const auto& c : result.checks) result.all_pass = result.all_pass && c.pass;
  return result;
}

void write_verify_files(const std::filesystem::path& dir, const VerifyResult& result) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "condition_report.csv");
    if (!out) throw ParseError("cannot write condition_report.csv");
    io::write_condition_report(out, result.condition);
  }
  {
    std::ofstream out(dir / "verify_summary.txt");
    if (!out) throw ParseError("cannot write verify_summary.txt");
    for (const auto& c : result.checks) {
      out << (c.informational ? "[info]" : (c.pass ? "[pass]" : "[FAIL]")) << ' ' << c.name
          << ": value = " << format_double(c.value);
      if (!c.informational) out << ", bound = " << format_double(c.bound);
      out << "\n";
    }
    out << (result.all_pass ? "all checks passed\n" : "some checks FAILED\n");
  }
}

}  // namespace cdp
