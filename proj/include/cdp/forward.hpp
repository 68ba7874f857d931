#pragma once

#include "cdp/ensemble.hpp"
#include "cdp/fourier.hpp"
#include "cdp/random.hpp"

#include <cmath>
#include <optional>

namespace cdp {

template <typename T = Real>
struct NoiseInfo {
  T snr_db = std::numeric_limits<T>::infinity();
  T sigma = 0;
  std::uint64_t seed = 0;
};

/// Nonnegative intensities in flattening order: i fastest, then p, then r.
template <typename T = Real>
struct MeasurementSet {
  std::string ensemble_id;
  Vec<T> values;
  std::optional<NoiseInfo<T>> noise;
};

inline Index measurement_index(Index n, Index num_distances, Index i, Index p, Index r) {
  return i + n * (p + num_distances * r);
}

/// All inner products <b^r_{p,i}, x>: for each (p, r) the n-point slice is
/// F(t_p o F^H(d_p o (s_r o Fx))) with o the elementwise product, flattened
/// i fastest, then p, then r.
template <typename T>
CVec<T> field(const CVec<T>& x, const SensingEnsemble<T>& ens, Dft<T>& dft) {
  const Index n = ens.n();
  if (x.size() != n)
    throw std::invalid_argument("field: signal length does not match ensemble grid");
  const Index num_p = ens.num_distances();
  const Index num_r = ens.num_regions();
  CVec<T> out(ens.m());
  const CVec<T> xt = dft.forward(x);
  for (Index r = 0; r < num_r; ++r) {
    const CVec<T> selected = (xt.array() * ens.region_mask(r).array()).matrix();
    for (Index p = 0; p < num_p; ++p) {
      CVec<T> w = (selected.array() * ens.aperture_values(p).array()).matrix();
      dft.inverse_in_place(w);
      w = (w.array() * ens.transfer_values(p).array()).matrix();
      dft.forward_in_place(w);
      out.segment(measurement_index(n, num_p, 0, p, r), n) = w;
    }
  }
  return out;
}

template <typename T>
CVec<T> field(const CVec<T>& x, const SensingEnsemble<T>& ens) {
  Dft<T> dft(ens.shape);
  return field(x, ens, dft);
}

/// Intensities |<b, x>|^2 of the coded diffraction patterns.
template <typename T>
MeasurementSet<T> forward(const CVec<T>& x, const SensingEnsemble<T>& ens, Dft<T>& dft) {
  return MeasurementSet<T>{ens.id, field(x, ens, dft).cwiseAbs2(), std::nullopt};
}

template <typename T>
MeasurementSet<T> forward(const CVec<T>& x, const SensingEnsemble<T>& ens) {
  Dft<T> dft(ens.shape);
  return forward(x, ens, dft);
}

/// Adjoint of the field map: sum_{i,p,r} v_{i,p,r} b^r_{p,i}, computed by
/// running each (p, r) slice backwards through the factorization.
template <typename T>
CVec<T> adjoint_field(const CVec<T>& v, const SensingEnsemble<T>& ens, Dft<T>& dft) {
  const Index n = ens.n();
  if (v.size() != ens.m())
    throw std::invalid_argument("adjoint_field: vector length does not match ensemble");
  const Index num_p = ens.num_distances();
  const Index num_r = ens.num_regions();
  CVec<T> acc = CVec<T>::Zero(n);
  for (Index r = 0; r < num_r; ++r) {
    for (Index p = 0; p < num_p; ++p) {
      CVec<T> w = v.segment(measurement_index(n, num_p, 0, p, r), n);
      dft.inverse_in_place(w);
      w = (w.array() * ens.transfer_values(p).array().conjugate()).matrix();
      dft.forward_in_place(w);
      w = (w.array() * ens.aperture_values(p).array().conjugate()).matrix();
      acc += (w.array() * ens.region_mask(r).array()).matrix();
    }
  }
  return dft.inverse(acc);
}

template <typename T>
CVec<T> adjoint_field(const CVec<T>& v, const SensingEnsemble<T>& ens) {
  Dft<T> dft(ens.shape);
  return adjoint_field(v, ens, dft);
}

/// Dense m x n sensing matrix B whose rows are (b^r_{p,i})^H; the (p, r)
/// row block equals F T_p F^H D_p S_r F built with the dense unitary DFT.
/// Guarded: refuses to materialize more than 1e7 entries.
template <typename T>
CMat<T> explicit_matrix(const SensingEnsemble<T>& ens) {
  const Index n = ens.n();
  if (ens.m() * n > 10'000'000)
    throw std::invalid_argument("explicit_matrix: m*n exceeds the materialization guard");
  const Index num_p = ens.num_distances();
  const Index num_r = ens.num_regions();
  const CMat<T> f = dense_dft_matrix<T>(ens.shape);
  const CMat<T> fh = f.adjoint();
  CMat<T> b(ens.m(), n);
  for (Index r = 0; r < num_r; ++r) {
    const CVec<T> mask = ens.region_mask(r).template cast<std::complex<T>>();
    for (Index p = 0; p < num_p; ++p) {
      b.middleRows(measurement_index(n, num_p, 0, p, r), n) =
          f * ens.transfer_values(p).asDiagonal() * fh *
          ens.aperture_values(p).asDiagonal() * mask.asDiagonal() * f;
    }
  }
  return b;
}

/// Additive gaussian intensity noise at the given SNR. The noise level is
/// sigma = ||g||_2 / (m 10^{snr_db/20}); negative intensities are clamped
/// to zero. snr_db = +inf leaves the values bit-identical.
template <typename T>
MeasurementSet<T> add_noise(const MeasurementSet<T>& g, T snr_db, std::uint64_t seed) {
  MeasurementSet<T> out = g;
  if (std::isinf(snr_db) && snr_db > 0) {
    out.noise = NoiseInfo<T>{snr_db, T(0), seed};
    return out;
  }
  const Index m = g.values.size();
  const T sigma = g.values.norm() / (static_cast<T>(m) * std::pow(T(10), snr_db / T(20)));
  Rng rng(seed);
  for (Index k = 0; k < m; ++k)
    out.values[k] = std::max(T(0), g.values[k] + sigma * static_cast<T>(rng.gaussian()));
  out.noise = NoiseInfo<T>{snr_db, sigma, seed};
  return out;
}

}  // namespace cdp
