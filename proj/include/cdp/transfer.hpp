#pragma once

#include "cdp/types.hpp"

#include <cmath>
#include <numbers>

namespace cdp {

enum class TransferKind { Fresnel, CustomUnitary };

/// Diagonal unitary propagation kernel T(z); every entry has unit modulus
/// and z = 0 is the identity.
template <typename T = Real>
struct TransferFunction {
  GridShape shape;
  T distance = 0;
  CVec<T> values;
};

namespace detail {
/// Centered signed frequency index: 0..len/2-ish positive, then negative.
inline Index signed_freq(Index k, Index len) {
  return k < (len + 1) / 2 ? k : k - len;
}
}  // namespace detail

/// Fresnel kernel exp(-j pi lambda z |nu|^2) with nu the centered
/// normalized frequency vector of each grid index.
template <typename T = Real>
TransferFunction<T> make_transfer_function(const GridShape& shape, T z,
                                           T wavelength = T(1)) {
  if (!(wavelength > T(0)))
    throw std::invalid_argument("make_transfer_function: wavelength must be positive");
  const Index n = shape.size();
  CVec<T> values(n);
  for (Index flat = 0; flat < n; ++flat) {
    const std::vector<Index> idx = shape.unflatten(flat);
    T nu2 = 0;
    for (Index a = 0; a < shape.rank(); ++a) {
      const Index len = shape.dims[static_cast<std::size_t>(a)];
      const T nu = static_cast<T>(detail::signed_freq(idx[static_cast<std::size_t>(a)], len)) /
                   static_cast<T>(len);
      nu2 += nu * nu;
    }
    const T phase = -std::numbers::pi_v<T> * wavelength * z * nu2;
    values[flat] = std::complex<T>(std::cos(phase), std::sin(phase));
  }
  return TransferFunction<T>{shape, z, std::move(values)};
}

/// Wraps an explicit kernel, rejecting anything that is not diagonal
/// unitary (non-unit entries would break the measurement Gram collapse).
template <typename T = Real>
TransferFunction<T> make_custom_transfer(const GridShape& shape, T z, CVec<T> values) {
  if (values.size() != shape.size())
    throw std::invalid_argument("make_custom_transfer: length mismatch");
  for (Index k = 0; k < values.size(); ++k)
    if (std::abs(std::abs(values[k]) - T(1)) > T(1e-12))
      throw std::invalid_argument("make_custom_transfer: kernel must be diagonal unitary");
  return TransferFunction<T>{shape, z, std::move(values)};
}

}  // namespace cdp
