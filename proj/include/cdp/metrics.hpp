#pragma once

#include "cdp/types.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace cdp {

/// min over theta of ||x e^{-j theta} - z||_2. The optimal rotation aligns
/// the phase of <x, z>; the aligned residual is formed explicitly, which
/// avoids the cancellation the expanded form sqrt(||z||^2+||x||^2-2|<x,z>|)
/// suffers near zero.
template <typename T>
T dist(const CVec<T>& z, const CVec<T>& x) {
  if (z.size() != x.size()) throw std::invalid_argument("dist: length mismatch");
  const std::complex<T> inner = x.dot(z);  // x^H z
  const T mag = std::abs(inner);
  const std::complex<T> rot = mag > T(0) ? inner / mag : std::complex<T>(1);
  return (x * rot - z).norm();
}

template <typename T>
T relative_error(const CVec<T>& z, const CVec<T>& x) {
  const T nx = x.norm();
  if (nx == T(0)) throw std::invalid_argument("relative_error: ground truth is zero");
  return dist(z, x) / nx;
}

struct TrialOutcome {
  double rel_error = 0;
  bool success = false;
  std::uint64_t seed = 0;
  std::string config_id;
};

inline double success_rate(const std::vector<TrialOutcome>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("success_rate: empty outcome list");
  Index hits = 0;
  for (const auto& o : outcomes) hits += o.success ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

}  // namespace cdp
