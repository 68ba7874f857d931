#include "cdp/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

using namespace cdp;

struct CommonFlags {
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  int threads = -1;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "experiment config file (key = value lines)");
  flags.seed_opt = cmd->add_option("--seed", flags.seed, "master seed");
  flags.out_opt = cmd->add_option("--out", flags.out, "output directory");
  flags.threads_opt = cmd->add_option("--threads", flags.threads, "worker threads (0 = hardware)");
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig config;
  if (!flags.config_path.empty()) config = load_config(flags.config_path);
  if (flags.seed_opt->count() > 0) config.seed = flags.seed;
  if (flags.out_opt->count() > 0) config.out = flags.out;
  if (flags.threads_opt->count() > 0) config.threads = flags.threads;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coded diffraction pattern simulation and sparse phase retrieval"};
  app.require_subcommand(1);

  // --- simulate -------------------------------------------------------
  auto* simulate_cmd = app.add_subcommand("simulate", "generate a phantom and its coded diffraction patterns");
  CommonFlags sim_flags;
  add_common(simulate_cmd, sim_flags);
  std::string sim_shape, sim_phantom, sim_ensemble, sim_mode;
  Index sim_s = 0, sim_p = 0, sim_r = 0;
  double sim_snr = 0;
  auto* sim_shape_opt = simulate_cmd->add_option("--shape", sim_shape, "grid dims, e.g. '128' or '16 8'");
  auto* sim_s_opt = simulate_cmd->add_option("--s", sim_s, "Fourier sparsity of the phantom");
  auto* sim_p_opt = simulate_cmd->add_option("--P", sim_p, "number of sensing distances");
  auto* sim_r_opt = simulate_cmd->add_option("--R", sim_r, "number of regions");
  auto* sim_phantom_opt = simulate_cmd->add_option("--phantom", sim_phantom, "sparse | rock-salt");
  auto* sim_ens_opt = simulate_cmd->add_option("--ensemble", sim_ensemble, "block-unblock | uniform-phase");
  auto* sim_mode_opt = simulate_cmd->add_option("--aperture-mode", sim_mode, "per-distance | single");
  auto* sim_snr_opt = simulate_cmd->add_option("--snr", sim_snr, "intensity SNR in dB (default noiseless)");

  // --- reconstruct ----------------------------------------------------
  auto* recon_cmd = app.add_subcommand("reconstruct", "recover a signal from a measurement file");
  CommonFlags rec_flags;
  add_common(recon_cmd, rec_flags);
  std::string rec_measurements, rec_truth;
  Index rec_s = 0, rec_iters = 0;
  recon_cmd->add_option("--measurements", rec_measurements, "measurement file")->required();
  recon_cmd->add_option("--truth", rec_truth, "ground-truth signal file (enables error trace)");
  auto* rec_s_opt = recon_cmd->add_option("--s", rec_s, "sparsity (default: truth file's, if given)");
  auto* rec_iters_opt = recon_cmd->add_option("--iterations", rec_iters, "iteration count override");

  // --- phase-diagram --------------------------------------------------
  auto* pd_cmd = app.add_subcommand("phase-diagram", "success-rate sweep over sparsity and measurement grids");
  CommonFlags pd_flags;
  add_common(pd_cmd, pd_flags);

  // --- verify ---------------------------------------------------------
  auto* verify_cmd = app.add_subcommand("verify", "measurement-operator verification suite");
  CommonFlags ver_flags;
  add_common(verify_cmd, ver_flags);

  // --- gen-crystal ----------------------------------------------------
  auto* gen_cmd = app.add_subcommand("gen-crystal", "generate a periodic crystal phantom");
  CommonFlags gen_flags;
  add_common(gen_cmd, gen_flags);
  std::string gen_shape;
  Index gen_period = 0;
  double gen_a = 0, gen_b = 0;
  auto* gen_shape_opt = gen_cmd->add_option("--shape", gen_shape, "grid dims");
  auto* gen_period_opt = gen_cmd->add_option("--period", gen_period, "lattice period (even, divides dims)");
  auto* gen_a_opt = gen_cmd->add_option("--amplitude-a", gen_a, "species A amplitude");
  auto* gen_b_opt = gen_cmd->add_option("--amplitude-b", gen_b, "species B amplitude");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate_cmd->parsed()) {
      ExperimentConfig config = resolve_config(sim_flags);
      if (sim_shape_opt->count()) config.shape = io::parse_shape(sim_shape);
      if (sim_s_opt->count()) config.s = sim_s;
      if (sim_p_opt->count()) config.P = sim_p;
      if (sim_r_opt->count()) config.R = sim_r;
      if (sim_phantom_opt->count()) config.phantom = sim_phantom;
      if (sim_ens_opt->count()) config.ensemble = io::parse_aperture_kind(sim_ensemble);
      if (sim_mode_opt->count()) config.aperture_mode = io::parse_aperture_mode(sim_mode);
      if (sim_snr_opt->count()) config.snr_db = sim_snr;
      const SimulatedInstance instance = simulate_instance(config);
      write_simulation_files(config.out, config, instance);
      std::cout << "wrote " << config.out << "/truth.txt (s = " << instance.truth.sparsity
                << ") and measurements.txt (m = " << instance.measurements.values.size()
                << ", " << instance.ensemble.id << ")\n";
      return 0;
    }

    if (recon_cmd->parsed()) {
      ExperimentConfig config = resolve_config(rec_flags);
      const io::MeasurementFile mf = io::load_measurement_file(rec_measurements);
      const auto ens = make_ensemble<double>(mf.recipe);
      const MeasurementSet<double> g = io::measurements_from_file(mf);

      CrystalSignal<double> truth;
      bool have_truth = false;
      if (!rec_truth.empty()) {
        truth = io::signal_from_file(io::load_vector_file(rec_truth));
        have_truth = true;
      }
      SolverParams<double> params = config.solver;
      if (rec_iters_opt->count()) params.iterations = rec_iters;
      if (rec_s_opt->count()) params.sparsity = rec_s;
      else if (have_truth) params.sparsity = truth.sparsity;
      else throw io::ParseError("reconstruct: pass --s or --truth to fix the sparsity");

      const auto report = reconstruct(g, ens, params, have_truth ? &truth.values : nullptr);
      std::filesystem::create_directories(config.out);
      {
        std::ofstream out(std::filesystem::path(config.out) / "report.txt");
        if (!out) throw io::ParseError("cannot write report.txt");
        io::write_report(out, params, report, ens.shape);
      }
      io::save_vector_file(std::filesystem::path(config.out) / "estimate.txt",
                           io::VectorFile{ens.shape, "estimate", 0, {}, report.estimate});
      std::cout << "reconstructed in " << report.iterations_run << " iterations";
      if (have_truth)
        std::cout << ", relative error " << io::format_double(relative_error(report.estimate, truth.values));
      std::cout << "\n";
      return 0;
    }

    if (pd_cmd->parsed()) {
      const ExperimentConfig config = resolve_config(pd_flags);
      const PhaseDiagram pd = run_phase_diagram(config);
      write_phase_diagram_files(config.out, pd);
      std::cout << "s \\ m/n";
      for (const auto& [p, r] : pd.pr_values) std::cout << '\t' << p * r;
      std::cout << "\n";
      const std::size_t cols = pd.pr_values.size();
      for (std::size_t si = 0; si < pd.s_values.size(); ++si) {
        std::cout << pd.s_values[si];
        for (std::size_t c = 0; c < cols; ++c)
          std::cout << '\t' << pd.cells[si * cols + c].success_rate;
        std::cout << "\n";
      }
      for (const auto& warning : pd.monotonicity_warnings())
        std::cerr << "warning: " << warning << "\n";
      std::cout << "wrote " << config.out << "/phase_diagram.csv, phase_diagram_matrix.txt, trials.csv\n";
      return 0;
    }

    if (verify_cmd->parsed()) {
      const ExperimentConfig config = resolve_config(ver_flags);
      const VerifyResult result = run_verify(config);
      write_verify_files(config.out, result);
      for (const auto& c : result.checks) {
        std::cout << (c.informational ? "[info]" : (c.pass ? "[pass]" : "[FAIL]")) << ' '
                  << c.name << ": " << io::format_double(c.value);
        if (!c.informational) std::cout << " (bound " << io::format_double(c.bound) << ")";
        std::cout << "\n";
      }
      std::cout << (result.all_pass ? "all checks passed" : "some checks FAILED") << "\n";
      return result.all_pass ? 0 : 2;
    }

    if (gen_cmd->parsed()) {
      ExperimentConfig config = resolve_config(gen_flags);
      if (gen_shape_opt->count()) config.shape = io::parse_shape(gen_shape);
      if (gen_period_opt->count()) config.period = gen_period;
      if (gen_a_opt->count()) config.amplitude_a = gen_a;
      if (gen_b_opt->count()) config.amplitude_b = gen_b;
      LatticeParams<double> lp;
      lp.period = config.period;
      lp.amplitude_a = Complex(config.amplitude_a, 0);
      lp.amplitude_b = Complex(config.amplitude_b, 0);
      const auto crystal = gen_crystal_lattice<double>(config.shape, LatticeKind::RockSalt, lp);
      std::filesystem::create_directories(config.out);
      io::save_vector_file(std::filesystem::path(config.out) / "crystal.txt",
                           io::to_vector_file(crystal, "rock-salt", 0));
      std::cout << "wrote " << config.out << "/crystal.txt (Fourier sparsity s = "
                << crystal.sparsity << ")\n";
      return 0;
    }
  } catch (const io::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
