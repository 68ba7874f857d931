#pragma once

#include "cdp/fourier.hpp"
#include "cdp/random.hpp"

#include <algorithm>

namespace cdp {

/// Complex field on a grid together with its Fourier-domain sparsity: the
/// number of nonzero coefficients of the unitary DFT of `values`.
template <typename T = Real>
struct CrystalSignal {
  GridShape shape;
  CVec<T> values;
  Index sparsity = 0;
};

/// Entries with modulus above rel_tol times the peak modulus.
template <typename T>
Index count_nonzeros(const CVec<T>& v, T rel_tol = T(1e-12)) {
  if (v.size() == 0) return 0;
  const T peak = v.cwiseAbs().maxCoeff();
  if (peak == T(0)) return 0;
  const T cut = rel_tol * peak;
  Index count = 0;
  for (Index k = 0; k < v.size(); ++k)
    if (std::abs(v[k]) > cut) ++count;
  return count;
}

template <typename T>
Index fourier_support_count(const CrystalSignal<T>& x, T rel_tol = T(1e-12)) {
  Dft<T> dft(x.shape);
  return count_nonzeros(dft.forward(x.values), rel_tol);
}

/// Signal with exactly s nonzero Fourier coefficients: support uniform at
/// random, coefficients standard complex gaussian, x = F^H(x_tilde).
/// Deterministic given the seed.
template <typename T = Real>
CrystalSignal<T> gen_sparse_signal(const GridShape& shape, Index s, std::uint64_t seed) {
  const Index n = shape.size();
  if (s < 1 || s > n)
    throw std::invalid_argument("gen_sparse_signal: sparsity must satisfy 1 <= s <= n");
  Rng rng(seed);
  const std::vector<Index> support = sample_without_replacement(n, s, rng);
  CVec<T> xt = CVec<T>::Zero(n);
  for (Index q : support) xt[q] = static_cast<std::complex<T>>(rng.cgaussian());
  Dft<T> dft(shape);
  return CrystalSignal<T>{shape, dft.inverse(xt), s};
}

enum class LatticeKind { RockSalt, CustomMotif };

/// Parameters for the periodic phantoms. `period` is the repeat length in
/// every axis and must divide every grid dim. RockSalt interleaves two
/// species at spacing period/2: amplitude_a on sites whose sublattice
/// parity is even, amplitude_b on the odd ones, zero off the lattice.
/// CustomMotif tiles an explicit period^rank block (row-major).
template <typename T = Real>
struct LatticeParams {
  Index period = 2;
  std::complex<T> amplitude_a{T(1), T(0)};
  std::complex<T> amplitude_b{T(0.5), T(0)};
  CVec<T> motif;
};

/// Periodic point-lattice phantom; periodicity makes it sparse in the
/// Fourier domain and the exact sparsity is measured and reported.
template <typename T = Real>
CrystalSignal<T> gen_crystal_lattice(const GridShape& shape, LatticeKind kind,
                                     const LatticeParams<T>& params) {
  const Index n = shape.size();
  const Index q = params.period;
  if (q < 1) throw std::invalid_argument("gen_crystal_lattice: period must be >= 1");
  for (Index e : shape.dims)
    if (e % q != 0)
      throw std::invalid_argument(
          "gen_crystal_lattice: period must divide every grid dim");

  CVec<T> values = CVec<T>::Zero(n);
  if (kind == LatticeKind::RockSalt) {
    if (q % 2 != 0)
      throw std::invalid_argument("gen_crystal_lattice: rock-salt period must be even");
    const Index h = q / 2;  // sublattice spacing
    for (Index flat = 0; flat < n; ++flat) {
      const std::vector<Index> idx = shape.unflatten(flat);
      bool on_lattice = true;
      Index parity = 0;
      for (Index c : idx) {
        if (c % h != 0) {
          on_lattice = false;
          break;
        }
        parity += c / h;
      }
      if (!on_lattice) continue;
      values[flat] = (parity % 2 == 0) ? params.amplitude_a : params.amplitude_b;
    }
  } else {
    Index cell = 1;
    for (Index a = 0; a < shape.rank(); ++a) cell *= q;
    if (params.motif.size() != cell)
      throw std::invalid_argument("gen_crystal_lattice: motif must have period^rank entries");
    for (Index flat = 0; flat < n; ++flat) {
      std::vector<Index> idx = shape.unflatten(flat);
      Index local = 0;
      for (Index& c : idx) local = local * q + (c % q);
      values[flat] = params.motif[local];
    }
  }

  CrystalSignal<T> out{shape, std::move(values), 0};
  out.sparsity = fourier_support_count(out);
  return out;
}

}  // namespace cdp
