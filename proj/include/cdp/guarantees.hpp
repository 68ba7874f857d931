#pragma once

#include "cdp/forward.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace cdp {

/// Tangent element of the rank-1 Hermitian manifold at anchor x:
/// W = x w^H + w x^H (Hermitian, rank at most 2), kept in factored form.
template <typename T = Real>
struct TangentElement {
  CVec<T> anchor;     // x
  CVec<T> direction;  // w
};

/// B(W) for a factored tangent element, without materializing W:
/// b^H W b = 2 Re((b^H x) conj(b^H w)), two field evaluations total.
template <typename T>
Vec<T> apply_B_operator(const TangentElement<T>& w, const SensingEnsemble<T>& ens,
                        Dft<T>& dft) {
  const CVec<T> fx = field(w.anchor, ens, dft);
  const CVec<T> fw = field(w.direction, ens, dft);
  return T(2) * (fx.array() * fw.array().conjugate()).real().matrix();
}

template <typename T>
Vec<T> apply_B_operator(const TangentElement<T>& w, const SensingEnsemble<T>& ens) {
  Dft<T> dft(ens.shape);
  return apply_B_operator(w, ens, dft);
}

/// B(W) for an explicit self-adjoint matrix via the dense sensing matrix:
/// entry (i,p,r) is the quadratic form b^H W b. Small grids only.
template <typename T>
Vec<T> apply_B_operator(const CMat<T>& w, const SensingEnsemble<T>& ens) {
  if (w.rows() != ens.n() || w.cols() != ens.n())
    throw std::invalid_argument("apply_B_operator: W must be n x n");
  if (!w.isApprox(w.adjoint(), T(1e-10)))
    throw std::invalid_argument("apply_B_operator: W must be self-adjoint");
  const CMat<T> b = explicit_matrix(ens);
  // (B W B^H)_{kk} = row_k(BW) . conj(row_k(B))
  const CMat<T> bw = b * w;
  return (bw.array() * b.array().conjugate()).rowwise().sum().real();
}

/// Nuclear norm of x w^H + w x^H in closed form. The two nonzero
/// eigenvalues are Re<x,w> +- sqrt(||x||^2 ||w||^2 - Im<x,w>^2), of opposite
/// sign, so the singular values sum to 2 sqrt(||x||^2 ||w||^2 - Im<x,w>^2).
template <typename T>
T nuclear_norm_rank2(const TangentElement<T>& w) {
  const T xx = w.anchor.squaredNorm();
  const T ww = w.direction.squaredNorm();
  const std::complex<T> inner = w.anchor.dot(w.direction);  // x^H w
  const T im = inner.imag();
  return T(2) * std::sqrt(std::max(T(0), xx * ww - im * im));
}

/// Residual of the Gram collapse. All unitary and partition factors cancel
/// in the Fourier frame, leaving the summed aperture power spectrum:
/// F B^H B F^H = sum_p diag(|d_p|^2)  (= P diag(|d|^2) in single-aperture
/// mode). Returns the Frobenius-relative residual against that diagonal.
template <typename T>
T check_gram_identity(const SensingEnsemble<T>& ens) {
  const CMat<T> b = explicit_matrix(ens);  // size guard lives there
  const CMat<T> f = dense_dft_matrix<T>(ens.shape);
  const CMat<T> gram = f * (b.adjoint() * b) * f.adjoint();

  Vec<T> target = Vec<T>::Zero(ens.n());
  for (Index p = 0; p < ens.num_distances(); ++p)
    target += ens.aperture_values(p).cwiseAbs2();

  CMat<T> resid = gram;
  resid.diagonal() -= target.template cast<std::complex<T>>();
  const T scale = target.norm();
  return scale > T(0) ? resid.norm() / scale : resid.norm();
}

/// (1/m) lambda_max(B^H B) by power iteration through the FFT-factored
/// field/adjoint maps; nothing dense is materialized. A fixed-seed random
/// start is used because the all-ones vector is an exact eigenvector of
/// blocked-bin ensembles and can pin the iteration to a minor eigenvalue.
template <typename T>
T spectral_quantity(const SensingEnsemble<T>& ens) {
  Dft<T> dft(ens.shape);
  const Index n = ens.n();
  Rng rng(0x5bec7a11u);
  CVec<T> v(n);
  for (Index k = 0; k < n; ++k) v[k] = static_cast<std::complex<T>>(rng.cgaussian());
  v /= v.norm();

  T eig = 0;
  for (int it = 0; it < 300; ++it) {
    const CVec<T> u = adjoint_field(field(v, ens, dft), ens, dft);  // B^H B v
    const T norm = u.norm();
    if (norm == T(0)) return T(0);
    const T eig_next = std::real(v.dot(u));
    v = u / norm;
    if (it > 0 && std::abs(eig_next - eig) < T(1e-13) * std::max(eig_next, T(1))) {
      eig = eig_next;
      break;
    }
    eig = eig_next;
  }
  return eig / static_cast<T>(ens.m());
}

/// Spot-check record for the tangent-space isometry condition with beta = m.
template <typename T = Real>
struct ConditionReport {
  T delta_target = T(0.5);
  Vec<T> ratios;  // per trial: (1/m) ||B(W)||_1 / ||W||_1
  T min_ratio = 0;
  T max_ratio = 0;
  T spectral_quantity = 0;   // (1/m) ||B||_inf^2
  T gram_residual = std::numeric_limits<T>::quiet_NaN();  // NaN when the dense guard blocks it
  std::string mode;
  bool upper_ok = false;  // max_ratio <= 1 + delta_target
};

/// Samples `trials` gaussian tangent directions at anchor x and records the
/// normalized ratios (1/m)||B(W)||_1 / ||W||_1. Only the upper bound is
/// enforced as a pass indicator; the minimum is reported as-is.
template <typename T>
ConditionReport<T> sample_condition1(const CVec<T>& x, const SensingEnsemble<T>& ens,
                                     Index trials, std::uint64_t seed,
                                     T delta_target = T(0.5)) {
  if (trials < 1) throw std::invalid_argument("sample_condition1: trials must be >= 1");
  if (x.size() != ens.n())
    throw std::invalid_argument("sample_condition1: anchor length mismatch");
  Dft<T> dft(ens.shape);
  const Index n = ens.n();
  const T m = static_cast<T>(ens.m());

  ConditionReport<T> report;
  report.delta_target = delta_target;
  report.mode = to_string(ens.mode);
  report.ratios.resize(trials);
  for (Index t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, 0, static_cast<std::uint64_t>(t)));
    CVec<T> w(n);
    for (Index k = 0; k < n; ++k) w[k] = static_cast<std::complex<T>>(rng.cgaussian());
    const TangentElement<T> tangent{x, w};
    const T image_l1 = apply_B_operator(tangent, ens, dft).template lpNorm<1>();
    const T nuclear = nuclear_norm_rank2(tangent);
    report.ratios[t] = nuclear > T(0) ? image_l1 / m / nuclear : T(0);
  }
  report.min_ratio = report.ratios.minCoeff();
  report.max_ratio = report.ratios.maxCoeff();
  report.spectral_quantity = spectral_quantity(ens);
  try {
    report.gram_residual = check_gram_identity(ens);
  } catch (const std::invalid_argument&) {
    // grid too large for the dense route; leave NaN
  }
  report.upper_ok = report.max_ratio <= T(1) + delta_target;
  return report;
}

}  // namespace cdp
