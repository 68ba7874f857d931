#pragma once

#include "cdp/forward.hpp"
#include "cdp/guarantees.hpp"
#include "cdp/regions.hpp"
#include "cdp/signal.hpp"
#include "cdp/solver.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace cdp::io {

/// Raised on malformed files or configs; the CLI maps it to exit code 1.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form (inf/nan spelled out).
std::string format_double(double v);
double parse_double(const std::string& s);
std::uint64_t parse_u64(const std::string& s);
Index parse_index(const std::string& s);

std::string format_shape(const GridShape& shape);
GridShape parse_shape(const std::string& s);

std::vector<double> parse_double_list(const std::string& s);
std::vector<Index> parse_index_list(const std::string& s);

/// Common structured-text layout: "key = value" header lines, then a
/// "data:" line, then one record per line. '#' lines and blanks are skipped.
struct TextDoc {
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::string> rows;

  const std::string* find(const std::string& key) const;
  const std::string& at(const std::string& key) const;
};

TextDoc read_doc(std::istream& in);

/// On-disk form of signals, apertures and partitions: header fields
/// shape/kind/seed (plus format-specific extras), then rows "index, re, im".
/// Partitions store the region id in the real part.
struct VectorFile {
  GridShape shape;
  std::string kind = "custom";
  std::uint64_t seed = 0;
  std::map<std::string, std::string> extras;
  CVec<double> values;
};

void write_vector_file(std::ostream& out, const VectorFile& file);
VectorFile read_vector_file(std::istream& in);
void save_vector_file(const std::filesystem::path& path, const VectorFile& file);
VectorFile load_vector_file(const std::filesystem::path& path);

VectorFile to_vector_file(const CrystalSignal<double>& x, const std::string& kind,
                          std::uint64_t seed);
VectorFile to_vector_file(const CodedAperture<double>& a, std::uint64_t seed);
VectorFile to_vector_file(const RegionPartition& p);
CrystalSignal<double> signal_from_file(const VectorFile& file);
CodedAperture<double> aperture_from_file(const VectorFile& file);
RegionPartition partition_from_file(const VectorFile& file);

/// Measurement sets serialize with their ensemble recipe so the sensing
/// operator can be rebuilt from the file alone.
struct MeasurementFile {
  EnsembleRecipe<double> recipe;
  std::optional<NoiseInfo<double>> noise;
  Vec<double> values;
};

void write_measurement_file(std::ostream& out, const MeasurementFile& file);
MeasurementFile read_measurement_file(std::istream& in);
void save_measurement_file(const std::filesystem::path& path, const MeasurementFile& file);
MeasurementFile load_measurement_file(const std::filesystem::path& path);

MeasurementFile to_measurement_file(const MeasurementSet<double>& g,
                                    const SensingEnsemble<double>& ens);
MeasurementSet<double> measurements_from_file(const MeasurementFile& file);

/// Reconstruction report: params block, per-iteration CSV trace
/// (t,mu,grad_norm,objective[,rel_error]), then the estimate in the vector
/// format under an "estimate:" line.
void write_report(std::ostream& out, const SolverParams<double>& params,
                  const ReconstructionReport<double>& report, const GridShape& shape);

/// Condition-report CSV: '#'-prefixed summary header, then trial,ratio rows.
void write_condition_report(std::ostream& out, const ConditionReport<double>& report);

ApertureKind parse_aperture_kind(const std::string& s);
ApertureMode parse_aperture_mode(const std::string& s);

}  // namespace cdp::io
