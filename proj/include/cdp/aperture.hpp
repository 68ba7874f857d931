#pragma once

#include "cdp/random.hpp"
#include "cdp/types.hpp"

#include <cmath>
#include <string>

namespace cdp {

enum class ApertureKind { BlockUnblock, UniformPhase, Custom };

inline std::string to_string(ApertureKind k) {
  switch (k) {
    case ApertureKind::BlockUnblock: return "block-unblock";
    case ApertureKind::UniformPhase: return "uniform-phase";
    case ApertureKind::Custom: return "custom";
  }
  return "custom";
}

/// Per-grid-point complex modulation with |d| <= 1. Block-unblock entries
/// are exactly {0, 1}; uniform-phase entries are unit modulus up to
/// floating-point rounding (within 1e-15).
template <typename T = Real>
struct CodedAperture {
  GridShape shape;
  CVec<T> values;
  ApertureKind kind = ApertureKind::Custom;
};

namespace detail {
template <typename T>
void validate_aperture(const CodedAperture<T>& a) {
  if (a.values.size() != a.shape.size())
    throw std::invalid_argument("CodedAperture: values length does not match grid");
  const T tol = T(1e-12);
  for (Index k = 0; k < a.values.size(); ++k) {
    const T mod = std::abs(a.values[k]);
    if (mod > T(1) + tol)
      throw std::invalid_argument("CodedAperture: |d| <= 1 violated");
    if (a.kind == ApertureKind::BlockUnblock && a.values[k] != std::complex<T>(0) &&
        a.values[k] != std::complex<T>(1))
      throw std::invalid_argument("CodedAperture: block-unblock entries must be 0 or 1");
    if (a.kind == ApertureKind::UniformPhase && std::abs(mod - T(1)) > tol)
      throw std::invalid_argument("CodedAperture: uniform-phase entries must be unit modulus");
  }
}
}  // namespace detail

/// i.i.d. aperture draw: block-unblock is Bernoulli(1/2) on {0,1},
/// uniform-phase is e^{j theta} with theta uniform on [0, 2pi).
/// Deterministic given the seed.
template <typename T = Real>
CodedAperture<T> gen_coded_aperture(const GridShape& shape, ApertureKind kind,
                                    std::uint64_t seed) {
  const Index n = shape.size();
  CVec<T> values(n);
  Rng rng(seed);
  switch (kind) {
    case ApertureKind::BlockUnblock:
      for (Index k = 0; k < n; ++k)
        values[k] = rng.uniform() < 0.5 ? std::complex<T>(0) : std::complex<T>(1);
      break;
    case ApertureKind::UniformPhase:
      for (Index k = 0; k < n; ++k) {
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        values[k] = std::complex<T>(static_cast<T>(std::cos(theta)),
                                    static_cast<T>(std::sin(theta)));
      }
      break;
    case ApertureKind::Custom:
      throw std::invalid_argument("gen_coded_aperture: custom apertures carry explicit values");
  }
  CodedAperture<T> out{shape, std::move(values), kind};
  detail::validate_aperture(out);
  return out;
}

/// Wraps explicit modulation values, validating |d| <= 1.
template <typename T = Real>
CodedAperture<T> make_custom_aperture(const GridShape& shape, CVec<T> values) {
  CodedAperture<T> out{shape, std::move(values), ApertureKind::Custom};
  detail::validate_aperture(out);
  return out;
}

}  // namespace cdp
