#pragma once

#include "cdp/io.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace cdp {

/// Experiment controls; parsed from "key = value" config files with exactly
/// these field names (unknown keys are rejected). Grids drive phase-diagram
/// cells; the single-run fields drive simulate/reconstruct; seeds for every
/// trial derive from the master seed.
struct ExperimentConfig {
  GridShape shape = GridShape::line(128);
  std::vector<Index> s_grid{2, 4, 8, 16};
  std::vector<Index> p_grid{1, 2, 3, 4};
  std::vector<Index> r_grid{1};
  ApertureKind ensemble = ApertureKind::UniformPhase;
  ApertureMode aperture_mode = ApertureMode::PerDistance;
  Index trials = 20;
  double success_threshold = 1e-5;
  SolverParams<double> solver;  // sparsity is set per cell / per phantom
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
  std::string out = "out";
  int threads = 0;  // 0 = hardware concurrency
  double wavelength = 1.0;
  std::vector<double> distances;  // empty = default_distances(shape, P)

  // single-run (simulate / reconstruct) controls
  std::string phantom = "sparse";  // sparse | rock-salt
  Index s = 8;
  Index P = 2;
  Index R = 1;
  Index period = 2;
  double amplitude_a = 1.0;
  double amplitude_b = 0.5;

  // verify controls
  Index verify_trials = 100;
  double delta_target = 0.5;

  std::vector<double> distances_for(Index p_count) const {
    return distances.empty() ? default_distances<double>(shape, p_count) : distances;
  }
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& config);

/// FNV-1a hash of the canonical config text (out/threads excluded).
std::string config_hash(const ExperimentConfig& config);

struct PhaseCell {
  Index s = 0;
  double m_over_n = 0;
  Index P = 0;
  Index R = 0;
  Index trials = 0;
  Index successes = 0;
  double success_rate = 0;
  double mean_rel_error = 0;
  double mean_runtime_s = 0;  // wall time; exempt from byte-reproducibility
};

struct PhaseDiagram {
  std::vector<Index> s_values;
  std::vector<std::pair<Index, Index>> pr_values;  // (P, R) column axis
  std::vector<PhaseCell> cells;                    // row-major: s outer, (P,R) inner
  std::vector<TrialOutcome> outcomes;              // per trial, cell-major order
  std::uint64_t master_seed = 0;
  std::string hash;
  double runtime_s = 0;

  /// Success rates should not, on average, drop as m/n grows; violations are
  /// reported as warnings, never as failures.
  std::vector<std::string> monotonicity_warnings() const;
};

/// Success-rate sweep over (s_grid) x (p_grid x r_grid); per-trial seeds
/// derive injectively from (master seed, cell, trial). Deterministic up to
/// the runtime fields for any thread count.
PhaseDiagram run_phase_diagram(const ExperimentConfig& config);

void write_phase_diagram_files(const std::filesystem::path& dir, const PhaseDiagram& pd);

struct SimulatedInstance {
  CrystalSignal<double> truth;
  SensingEnsemble<double> ensemble;
  MeasurementSet<double> measurements;
};

/// Phantom (sparse or rock-salt per config) + ensemble + intensities,
/// optionally noisy at config.snr_db; all seeds derive from config.seed.
SimulatedInstance simulate_instance(const ExperimentConfig& config);

void write_simulation_files(const std::filesystem::path& dir, const ExperimentConfig& config,
                            const SimulatedInstance& instance);

struct ReconExperiment {
  CrystalSignal<double> truth;
  SensingEnsemble<double> ensemble;
  MeasurementSet<double> measurements;
  ReconstructionReport<double> report;
  double final_error = 0;
};

/// One phantom + simulate + reconstruct pass at a single (s, P, R) cell,
/// optionally noisy at config.snr_db.
ReconExperiment run_recon_experiment(const ExperimentConfig& config);

void write_recon_files(const std::filesystem::path& dir, const ExperimentConfig& config,
                       const ReconExperiment& result);

struct VerifyCheck {
  std::string name;
  double value = 0;   // measured residual / quantity
  double bound = 0;   // pass when value <= bound (or informational if pass-only)
  bool pass = false;
  bool informational = false;
};

struct VerifyResult {
  std::vector<VerifyCheck> checks;
  ConditionReport<double> condition;
  bool all_pass = false;
};

/// Measurement-operator verification suite: oracle equivalences, Gram
/// collapse for both aperture kinds, spectral quantity, and the sampled
/// tangent-space condition (upper bound enforced, lower reported).
VerifyResult run_verify(const ExperimentConfig& config);

void write_verify_files(const std::filesystem::path& dir, const VerifyResult& result);

/// Runs fn(0..jobs-1) on a bounded pool; output ordering is the caller's
/// concern (results should be written to disjoint slots by job index).
void run_parallel(Index jobs, int threads, const std::function<void(Index)>& fn);

}  // namespace cdp
