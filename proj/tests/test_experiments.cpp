#include "cdp/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace cdp;

namespace {
ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.shape = GridShape::line(32);
  c.s_grid = {2, 4};
  c.p_grid = {1, 2};
  c.r_grid = {1};
  c.trials = 3;
  c.solver.iterations = 60;
  c.seed = 7;
  c.threads = 2;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Strips the runtime column and runtime metadata line; timing fields are
/// the one documented exemption from byte-reproducibility.
std::string mask_runtime(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.rfind("# runtime_s", 0) == 0) continue;
    const auto cut = line.rfind(',');
    out += line.substr(0, cut);
    out += '\n';
  }
  return out;
}
}  // namespace

TEST_CASE("seed derivation is injective over cells and trials") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t cell = 0; cell < 64; ++cell)
    for (std::uint64_t trial = 0; trial < 64; ++trial)
      CHECK(seen.insert(derive_seed(42, cell, trial)).second);
  CHECK(derive_seed(1, 0, 0) != derive_seed(2, 0, 0));
}

TEST_CASE("run_parallel covers every job whatever the thread count") {
  for (int threads : {1, 2, 4}) {
    std::vector<int> hits(100, 0);
    run_parallel(100, threads, [&](Index j) { hits[static_cast<std::size_t>(j)]++; });
    for (int h : hits) CHECK(h == 1);
  }
  CHECK_THROWS_AS(run_parallel(4, 2, [](Index j) {
                    if (j == 2) throw std::runtime_error("boom");
                  }),
                  std::runtime_error);
}

TEST_CASE("phase diagram is deterministic up to runtime fields") {
  const ExperimentConfig config = tiny_config();
  const PhaseDiagram a = run_phase_diagram(config);
  ExperimentConfig serial = config;
  serial.threads = 1;
  const PhaseDiagram b = run_phase_diagram(serial);

  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    CHECK(a.cells[k].successes == b.cells[k].successes);
    CHECK(a.cells[k].mean_rel_error == b.cells[k].mean_rel_error);
    CHECK(a.cells[k].success_rate == b.cells[k].success_rate);
  }

  const auto dir_a = std::filesystem::temp_directory_path() / "cdp_pd_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "cdp_pd_b";
  write_phase_diagram_files(dir_a, a);
  write_phase_diagram_files(dir_b, b);
  CHECK(mask_runtime(slurp(dir_a / "phase_diagram.csv")) ==
        mask_runtime(slurp(dir_b / "phase_diagram.csv")));
  CHECK(slurp(dir_a / "phase_diagram_matrix.txt") == slurp(dir_b / "phase_diagram_matrix.txt"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("phase diagram layout matches the grids") {
  const ExperimentConfig config = tiny_config();
  const PhaseDiagram pd = run_phase_diagram(config);
  REQUIRE(pd.cells.size() == 4);
  CHECK(pd.cells[0].s == 2);
  CHECK(pd.cells[0].P == 1);
  CHECK(pd.cells[1].P == 2);
  CHECK(pd.cells[1].m_over_n == 2.0);
  CHECK(pd.cells[3].s == 4);
  for (const auto& c : pd.cells) {
    CHECK(c.success_rate >= 0.0);
    CHECK(c.success_rate <= 1.0);
    CHECK(c.trials == 3);
  }
  CHECK(pd.outcomes.size() == 12);
  CHECK(pd.outcomes[0].config_id == "s=2/P=1/R=1/trial=0");
  // success should only improve from m/n = 1 to m/n = 2 here
  CHECK(pd.monotonicity_warnings().empty());
}

TEST_CASE("monotonicity regressions are reported as warnings") {
  PhaseDiagram pd;
  pd.s_values = {4};
  pd.pr_values = {{1, 1}, {2, 1}};
  PhaseCell low;
  low.s = 4;
  low.P = 1;
  low.R = 1;
  low.m_over_n = 1.0;
  low.success_rate = 0.9;
  PhaseCell high = low;
  high.P = 2;
  high.m_over_n = 2.0;
  high.success_rate = 0.2;
  pd.cells = {low, high};
  CHECK(pd.monotonicity_warnings().size() == 1);
}

TEST_CASE("recon experiment with infinite snr equals the noiseless run bitwise") {
  ExperimentConfig config;
  config.shape = GridShape::line(32);
  config.s = 3;
  config.P = 2;
  config.solver.iterations = 50;
  config.seed = 21;
  const auto noiseless = run_recon_experiment(config);
  config.snr_db = std::numeric_limits<double>::infinity();
  const auto inf_snr = run_recon_experiment(config);
  CHECK(noiseless.report.estimate == inf_snr.report.estimate);
  CHECK(noiseless.final_error == inf_snr.final_error);
}

TEST_CASE("rock-salt recon experiment writes its artifacts") {
  ExperimentConfig config;
  config.shape = GridShape::line(32);
  config.phantom = "rock-salt";
  config.period = 2;
  config.P = 2;
  config.solver.iterations = 200;
  config.seed = 33;
  const auto result = run_recon_experiment(config);
  CHECK(result.truth.sparsity == 2);
  CHECK(result.final_error <= 1e-5);

  const auto dir = std::filesystem::temp_directory_path() / "cdp_recon";
  write_recon_files(dir, config, result);
  CHECK(std::filesystem::exists(dir / "truth.txt"));
  CHECK(std::filesystem::exists(dir / "measurements.txt"));
  CHECK(std::filesystem::exists(dir / "report.txt"));
  CHECK(std::filesystem::exists(dir / "estimate.txt"));

  // the measurement file rebuilds a working instance
  const auto mf = io::load_measurement_file(dir / "measurements.txt");
  const auto ens = make_ensemble<double>(mf.recipe);
  const auto truth = io::signal_from_file(io::load_vector_file(dir / "truth.txt"));
  SolverParams<double> params = config.solver;
  params.sparsity = truth.sparsity;
  const auto report = reconstruct(io::measurements_from_file(mf), ens, params, &truth.values);
  CHECK(relative_error(report.estimate, truth.values) <= 1e-5);
  std::filesystem::remove_all(dir);
}

TEST_CASE("noisy rock-salt recon experiment stays within a tenth") {
  ExperimentConfig config;
  config.shape = GridShape::line(32);
  config.phantom = "rock-salt";
  config.period = 2;
  config.P = 2;
  config.snr_db = 30.0;
  config.seed = 44;
  const auto result = run_recon_experiment(config);
  CHECK(result.final_error <= 0.1);
  // the error trace flattens once the smoothing bottoms out
  const auto& errs = result.report.error_trace;
  const double tail_spread = std::abs(errs.back() - errs[errs.size() - 100]);
  CHECK(tail_spread <= 0.01);
}

TEST_CASE("verification suite passes on the default configuration") {
  ExperimentConfig config;
  config.shape = GridShape::line(16);
  config.s = 4;
  config.P = 2;
  config.R = 1;
  config.verify_trials = 40;
  config.seed = 5;
  const auto result = run_verify(config);
  CHECK(result.all_pass);
  for (const auto& check : result.checks) CHECK(check.pass);
  CHECK(result.condition.max_ratio <= 1.5);
  CHECK(result.condition.min_ratio <= result.condition.max_ratio);
  CHECK(result.condition.ratios.size() == 40);

  bool saw_gram = false, saw_min = false;
  for (const auto& check : result.checks) {
    if (check.name.find("gram") != std::string::npos) {
      saw_gram = true;
      CHECK(check.value <= 1e-10);
    }
    saw_min = saw_min || check.name.find("min_ratio") != std::string::npos;
  }
  CHECK(saw_gram);
  CHECK(saw_min);

  const auto dir = std::filesystem::temp_directory_path() / "cdp_verify";
  write_verify_files(dir, result);
  CHECK(std::filesystem::exists(dir / "condition_report.csv"));
  CHECK(std::filesystem::exists(dir / "verify_summary.txt"));
  std::filesystem::remove_all(dir);
}
