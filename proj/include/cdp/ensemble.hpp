#pragma once

#include "cdp/aperture.hpp"
#include "cdp/regions.hpp"
#include "cdp/transfer.hpp"

#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace cdp {

enum class ApertureMode { PerDistance, Single };

inline std::string to_string(ApertureMode m) {
  return m == ApertureMode::PerDistance ? "per-distance" : "single";
}

/// Generation recipe for an ensemble; measurement files carry it so a
/// reconstruction can rebuild the exact sensing operator from seeds alone.
template <typename T = Real>
struct EnsembleRecipe {
  GridShape shape;
  std::vector<T> distances;
  ApertureKind kind = ApertureKind::UniformPhase;
  ApertureMode mode = ApertureMode::PerDistance;
  Index regions = 1;
  std::uint64_t seed = 0;
  T wavelength = T(1);

  std::string id() const {
    std::ostringstream os;
    os << to_string(kind) << "/" << to_string(mode) << "/shape=";
    for (std::size_t a = 0; a < shape.dims.size(); ++a)
      os << (a ? "x" : "") << shape.dims[a];
    os << "/P=" << distances.size() << "/R=" << regions << "/z=";
    for (std::size_t p = 0; p < distances.size(); ++p) os << (p ? "," : "") << distances[p];
    os << "/lambda=" << wavelength << "/seed=" << seed;
    return os.str();
  }
};

/// Immutable description of one coded acquisition: P sensing distances with
/// precomputed transfer diagonals, one aperture per distance (or a single
/// shared one), and a region partition of the Fourier grid. Safe to share
/// across threads once constructed.
template <typename T = Real>
struct SensingEnsemble {
  GridShape shape;
  std::vector<T> distances;
  std::vector<CodedAperture<T>> apertures;  // size P (PerDistance) or 1 (Single)
  ApertureMode mode = ApertureMode::PerDistance;
  RegionPartition regions;
  std::vector<TransferFunction<T>> transfers;  // one per distance
  std::vector<Vec<T>> region_masks;            // 0/1 selector diagonals
  T wavelength = T(1);
  std::string id = "custom";
  std::optional<EnsembleRecipe<T>> recipe;

  Index n() const { return shape.size(); }
  Index num_distances() const { return static_cast<Index>(distances.size()); }
  Index num_regions() const { return regions.count; }
  Index m() const { return n() * num_distances() * num_regions(); }

  const CVec<T>& aperture_values(Index p) const {
    return apertures[mode == ApertureMode::Single ? 0 : static_cast<std::size_t>(p)].values;
  }
  const CVec<T>& transfer_values(Index p) const {
    return transfers[static_cast<std::size_t>(p)].values;
  }
  const Vec<T>& region_mask(Index r) const {
    return region_masks[static_cast<std::size_t>(r)];
  }
};

namespace detail {
template <typename T>
void finalize_ensemble(SensingEnsemble<T>& e) {
  if (e.distances.empty())
    throw std::invalid_argument("SensingEnsemble: need at least one distance");
  const std::size_t want =
      e.mode == ApertureMode::Single ? 1 : e.distances.size();
  if (e.apertures.size() != want)
    throw std::invalid_argument("SensingEnsemble: aperture count does not match mode");
  for (const auto& a : e.apertures) {
    if (a.shape != e.shape)
      throw std::invalid_argument("SensingEnsemble: aperture shape mismatch");
    validate_aperture(a);
  }
  if (e.regions.shape != e.shape)
    throw std::invalid_argument("SensingEnsemble: partition shape mismatch");
  validate_partition(e.regions);

  e.transfers.clear();
  for (T z : e.distances)
    e.transfers.push_back(make_transfer_function<T>(e.shape, z, e.wavelength));

  const Index n = e.shape.size();
  e.region_masks.assign(static_cast<std::size_t>(e.regions.count), Vec<T>::Zero(n));
  for (Index k = 0; k < n; ++k)
    e.region_masks[static_cast<std::size_t>(e.regions.membership[static_cast<std::size_t>(k)] - 1)][k] = T(1);
}
}  // namespace detail

/// Default sensing distances (unit wavelength): a near-field pattern at
/// z = 0, then distances climbing to z_far whose chirp kernels mix the
/// whole grid. The near pattern keeps the initializer's support scores
/// local; the far ones carry the cross-bin phase information.
///
/// Along an axis of length L the kernel is a discrete chirp of rate
/// z / L^2, and a bin pair at separation d sees the cross modulation
/// exp(-j 2 pi (z d / L^2) f); when that frequency sits near an integer the
/// pair's relative phase is invisible to the pattern. z_far is picked by a
/// deterministic search maximizing, over every axis and separation, the
/// modulation's variation across the axis window (L * distance from the
/// nearest integer, in cycles).
template <typename T = Real>
std::vector<T> default_distances(const GridShape& shape, Index count) {
  if (count < 1) throw std::invalid_argument("default_distances: need count >= 1");
  if (count == 1) return {T(0)};
  Index longest = 1;
  for (Index e : shape.dims) longest = std::max(longest, e);
  const T base = static_cast<T>(longest) * static_cast<T>(longest);
  T best_z = T(0.6180339887498949) * base;
  T best_score = -1;
  const int candidates = 2048;
  for (int k = 0; k < candidates; ++k) {
    const T z = base * (T(0.5) + T(0.5) * (static_cast<T>(k) + T(0.5)) / static_cast<T>(candidates));
    T score = std::numeric_limits<T>::infinity();
    for (Index len : shape.dims) {
      if (len < 2) continue;
      const T rate = z / (static_cast<T>(len) * static_cast<T>(len));
      for (Index d = 1; d < len; ++d) {
        const T w = rate * static_cast<T>(d);
        score = std::min(score, static_cast<T>(len) * std::abs(w - std::round(w)));
      }
    }
    if (score > best_score) {
      best_score = score;
      best_z = z;
    }
  }
  std::vector<T> zs;
  for (Index p = 0; p < count; ++p)
    zs.push_back(static_cast<T>(p) * best_z / static_cast<T>(count - 1));
  return zs;
}

/// Builds an ensemble from a recipe: apertures drawn with per-distance
/// subseeds, contiguous-block region partition, Fresnel transfer kernels.
template <typename T = Real>
SensingEnsemble<T> make_ensemble(const EnsembleRecipe<T>& r) {
  SensingEnsemble<T> e;
  e.shape = r.shape;
  e.distances = r.distances;
  e.mode = r.mode;
  e.wavelength = r.wavelength;
  e.regions = gen_regions(r.shape, r.regions);
  const std::size_t count = r.mode == ApertureMode::Single ? 1 : r.distances.size();
  for (std::size_t p = 0; p < count; ++p)
    e.apertures.push_back(
        gen_coded_aperture<T>(r.shape, r.kind, derive_seed(r.seed, 0xa, p)));
  e.id = r.id();
  e.recipe = r;
  detail::finalize_ensemble(e);
  return e;
}

template <typename T = Real>
SensingEnsemble<T> make_ensemble(const GridShape& shape, std::vector<T> distances,
                                 ApertureKind kind, ApertureMode mode, Index regions,
                                 std::uint64_t seed, T wavelength = T(1)) {
  return make_ensemble<T>(
      EnsembleRecipe<T>{shape, std::move(distances), kind, mode, regions, seed, wavelength});
}

/// Assembles an ensemble from explicit parts (custom apertures, custom
/// partitions, custom transfer kernels are substituted afterwards).
template <typename T = Real>
SensingEnsemble<T> assemble_ensemble(const GridShape& shape, std::vector<T> distances,
                                     std::vector<CodedAperture<T>> apertures,
                                     ApertureMode mode, RegionPartition regions,
                                     T wavelength = T(1)) {
  SensingEnsemble<T> e;
  e.shape = shape;
  e.distances = std::move(distances);
  e.apertures = std::move(apertures);
  e.mode = mode;
  e.regions = std::move(regions);
  e.wavelength = wavelength;
  detail::finalize_ensemble(e);
  return e;
}

}  // namespace cdp
