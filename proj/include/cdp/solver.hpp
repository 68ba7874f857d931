#pragma once

#include "cdp/forward.hpp"
#include "cdp/metrics.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace cdp {

/// Algorithm constants. Defaults are the cross-validated values used by the
/// experiments (tau=0.3, gamma=0.8, gamma1=0.5, mu0=60, T=800, alpha_y=3);
/// sparsity has no sensible default and must be set per problem.
template <typename T = Real>
struct SolverParams {
  T tau = T(0.3);
  T gamma = T(0.8);
  T gamma1 = T(0.5);
  T mu0 = T(60);
  Index iterations = 800;
  Index sparsity = 1;
  T alpha_y = T(3);
  bool early_stop = false;  // stop after 10 consecutive relative changes < 1e-12

  void validate(Index n) const {
    if (!(tau > T(0) && tau < T(1)))
      throw std::invalid_argument("SolverParams: tau must lie in (0,1)");
    if (!(gamma > T(0) && gamma < T(1)) || !(gamma1 > T(0) && gamma1 < T(1)))
      throw std::invalid_argument("SolverParams: gamma, gamma1 must lie in (0,1)");
    if (!(mu0 > T(0))) throw std::invalid_argument("SolverParams: mu0 must be positive");
    if (iterations < 1) throw std::invalid_argument("SolverParams: need T >= 1");
    if (sparsity < 1 || sparsity > n)
      throw std::invalid_argument("SolverParams: need 1 <= s <= n");
    if (!(alpha_y > T(0))) throw std::invalid_argument("SolverParams: alpha_y must be positive");
  }
};

/// Smoothed modulus sqrt(w^2 + mu^2); >= max(w, mu) and equal to w at mu=0.
template <typename T>
T smoothing_phi(T w, T mu) {
  if (w < T(0) || mu < T(0))
    throw std::invalid_argument("smoothing_phi: arguments must be nonnegative");
  return std::hypot(w, mu);
}

namespace detail {
template <typename T>
void validate_measurements(const MeasurementSet<T>& g, const SensingEnsemble<T>& ens) {
  if (g.values.size() != ens.m())
    throw std::invalid_argument("measurement count does not match ensemble");
  if (g.values.size() > 0 && g.values.minCoeff() < T(0))
    throw std::invalid_argument("negative intensities; clamp before solving");
}
}  // namespace detail

/// Smoothed objective (1/m) sum (sqrt(g) - phi_mu(|<b,z>|))^2; at mu=0 this
/// is the raw amplitude misfit.
template <typename T>
T objective(const CVec<T>& z, const MeasurementSet<T>& g, const SensingEnsemble<T>& ens,
            T mu, Dft<T>& dft) {
  detail::validate_measurements(g, ens);
  if (mu < T(0)) throw std::invalid_argument("objective: mu must be nonnegative");
  const CVec<T> y = field(z, ens, dft);
  const Index m = ens.m();
  T acc = 0;
  for (Index k = 0; k < m; ++k) {
    const T r = std::sqrt(g.values[k]) - std::hypot(std::abs(y[k]), mu);
    acc += r * r;
  }
  return acc / static_cast<T>(m);
}

template <typename T>
T objective(const CVec<T>& z, const MeasurementSet<T>& g, const SensingEnsemble<T>& ens, T mu) {
  Dft<T> dft(ens.shape);
  return objective(z, g, ens, mu, dft);
}

namespace detail {
/// Shared residual pass: field once, then the per-measurement weights
/// c = y - sqrt(g) y / phi_mu(|y|), from which both the Wirtinger gradient
/// (2/m) adjoint(c) and the objective value follow.
///
/// `scale` sets the sensing-vector normalization: 1 evaluates the formulas
/// verbatim on the unitary-DFT vectors b, while sqrt(n) evaluates them on
/// sqrt(n) b, whose entries have unit modulus like the rows of an
/// unnormalized DFT. The iterative solver uses the latter frame: there
/// (2/m) sum b b^H is order one, which is what makes a step size in (0,1)
/// and the mu schedule meaningful independently of the grid size.
template <typename T>
struct GradientEval {
  CVec<T> grad;
  T grad_norm = 0;
  T objective = 0;
};

template <typename T>
GradientEval<T> gradient_eval(const CVec<T>& z, const MeasurementSet<T>& g,
                              const SensingEnsemble<T>& ens, T mu, Dft<T>& dft,
                              T scale = T(1)) {
  const Index m = ens.m();
  const CVec<T> y = scale == T(1) ? field(z, ens, dft)
                                  : CVec<T>(scale * field(z, ens, dft));
  CVec<T> weights(m);
  T obj = 0;
  for (Index k = 0; k < m; ++k) {
    const T amp = std::abs(y[k]);
    const T phi = std::hypot(amp, mu);
    const T root = scale * std::sqrt(g.values[k]);
    if (phi == T(0)) {
      if (root == T(0)) {  // 0/0: the residual weight vanishes with y
        weights[k] = std::complex<T>(0);
        continue;
      }
      throw std::invalid_argument("gradient: mu = 0 with a vanishing field entry");
    }
    weights[k] = y[k] - root * y[k] / phi;
    const T r = root - phi;
    obj += r * r;
  }
  GradientEval<T> out;
  out.grad = (T(2) * scale / static_cast<T>(m)) * adjoint_field(weights, ens, dft);
  out.grad_norm = out.grad.norm();
  out.objective = obj / static_cast<T>(m);
  return out;
}

template <typename T>
T sensing_scale(const SensingEnsemble<T>& ens) {
  return std::sqrt(static_cast<T>(ens.n()));
}
}  // namespace detail

/// Wirtinger gradient (2/m) sum (y - sqrt(g) y / phi_mu(|y|)) b of the
/// smoothed objective. mu = 0 is accepted only where the field never
/// vanishes against a nonzero intensity.
template <typename T>
CVec<T> gradient(const CVec<T>& z, const MeasurementSet<T>& g, const SensingEnsemble<T>& ens,
                 T mu, Dft<T>& dft) {
  detail::validate_measurements(g, ens);
  if (mu < T(0)) throw std::invalid_argument("gradient: mu must be nonnegative");
  return detail::gradient_eval(z, g, ens, mu, dft).grad;
}

template <typename T>
CVec<T> gradient(const CVec<T>& z, const MeasurementSet<T>& g, const SensingEnsemble<T>& ens, T mu) {
  Dft<T> dft(ens.shape);
  return gradient(z, g, ens, mu, dft);
}

/// Keep the s largest-modulus entries, zeroing the rest; exact ties keep the
/// lowest flat index so runs are bit-reproducible. Idempotent.
template <typename T>
CVec<T> hard_threshold(const CVec<T>& w, Index s) {
  const Index n = w.size();
  if (s < 0 || s > n) throw std::invalid_argument("hard_threshold: need 0 <= s <= n");
  if (s == n) return w;
  const Vec<T> mod = w.cwiseAbs();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (mod[a] != mod[b]) return mod[a] > mod[b];
    return a < b;
  });
  CVec<T> out = CVec<T>::Zero(n);
  for (Index k = 0; k < s; ++k) out[order[static_cast<std::size_t>(k)]] = w[order[static_cast<std::size_t>(k)]];
  return out;
}

namespace detail {
/// Fourier-domain sensing vector for measurement row (i, p, r):
/// a~ = s_r o conj(d_p) o F(conj(t_p) o F^H e_i) = F b^r_{p,i}. The spatial
/// b vectors are fully spread out (their coordinate moduli are flat in the
/// uncoded limit), so support scores and the initializer's eigenvector are
/// accumulated in the Fourier domain, where the signal model is sparse and
/// where the final F^H mapping of the initializer lives.
template <typename T>
CVec<T> unit_response(const GridShape& shape, Index i, Dft<T>& dft) {
  CVec<T> e = CVec<T>::Zero(shape.size());
  e[i] = std::complex<T>(1);
  dft.inverse_in_place(e);
  return e;
}
}  // namespace detail

/// Coordinate scores (1/m) sum g |a~_q|^2 and their s largest indices
/// (lowest index on exact ties).
template <typename T>
std::vector<Index> select_support(const MeasurementSet<T>& g, const SensingEnsemble<T>& ens,
                                  Index s, Dft<T>& dft) {
  detail::validate_measurements(g, ens);
  const Index n = ens.n();
  if (s < 1 || s > n) throw std::invalid_argument("select_support: need 1 <= s <= n");
  const Index num_p = ens.num_distances();
  const Index num_r = ens.num_regions();

  Vec<T> scores = Vec<T>::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const CVec<T> impulse = detail::unit_response(ens.shape, i, dft);
    for (Index p = 0; p < num_p; ++p) {
      CVec<T> w = (impulse.array() * ens.transfer_values(p).array().conjugate()).matrix();
      dft.forward_in_place(w);
      const Vec<T> coded = (w.array() * ens.aperture_values(p).array().conjugate())
                               .abs2()
                               .matrix();
      for (Index r = 0; r < num_r; ++r) {
        const T gi = g.values[measurement_index(n, num_p, i, p, r)];
        if (gi == T(0)) continue;
        scores += gi * (coded.array() * ens.region_mask(r).array()).matrix();
      }
    }
  }
  scores /= static_cast<T>(ens.m());

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(s));
  std::sort(order.begin(), order.end());
  return order;
}

template <typename T>
std::vector<Index> select_support(const MeasurementSet<T>& g, const SensingEnsemble<T>& ens, Index s) {
  Dft<T> dft(ens.shape);
  return select_support(g, ens, s, dft);
}

template <typename T = Real>
struct SpectralInit {
  CVec<T> z0;                  // spatial-domain initial iterate
  std::vector<Index> support;  // estimated Fourier support
  Index kept = 0;              // measurements passing the truncation test
};

/// Truncated spectral initializer restricted to the estimated support:
/// H = (1/m) sum g a~_J a~_J^H over rows with g <= alpha_y^2 phi^2, leading
/// eigenvector by power iteration (all-ones start, at most 200 steps or
/// relative eigenvalue change < 1e-10), scaled by sqrt((n/m) phi^2) and
/// mapped back with F^H. Zero measurements give a zero initializer.
template <typename T>
SpectralInit<T> spectral_init(const MeasurementSet<T>& g, const SensingEnsemble<T>& ens,
                              const SolverParams<T>& params, Dft<T>& dft) {
  detail::validate_measurements(g, ens);
  const Index n = ens.n();
  const Index m = ens.m();
  const Index s = params.sparsity;

  SpectralInit<T> init;
  init.support = select_support(g, ens, s, dft);

  const T phi2 = g.values.sum() / static_cast<T>(m);
  const T cutoff = params.alpha_y * params.alpha_y * phi2;

  // Restricted Fourier-domain sensing columns: row (i,p,r), column = support coordinate.
  const Index num_p = ens.num_distances();
  const Index num_r = ens.num_regions();
  if (m * s > 50'000'000)
    throw std::invalid_argument("spectral_init: restricted sensing block too large");
  CMat<T> restricted(m, s);
  Vec<T> trunc_weights(m);
  for (Index i = 0; i < n; ++i) {
    const CVec<T> impulse = detail::unit_response(ens.shape, i, dft);
    for (Index p = 0; p < num_p; ++p) {
      CVec<T> w = (impulse.array() * ens.transfer_values(p).array().conjugate()).matrix();
      dft.forward_in_place(w);
      w = (w.array() * ens.aperture_values(p).array().conjugate()).matrix();
      for (Index r = 0; r < num_r; ++r) {
        const Index row = measurement_index(n, num_p, i, p, r);
        const T gi = g.values[row];
        trunc_weights[row] = gi <= cutoff ? gi : T(0);
        for (Index c = 0; c < s; ++c) {
          const Index q = init.support[static_cast<std::size_t>(c)];
          restricted(row, c) = ens.region_mask(r)[q] * w[q];
        }
      }
    }
  }
  init.kept = (g.values.array() <= cutoff).count();

  // H restricted to the support, as an s x s Hermitian matrix.
  const CMat<T> weighted =
      trunc_weights.template cast<std::complex<T>>().asDiagonal() * restricted.conjugate();
  const CMat<T> h = (restricted.transpose() * weighted) / static_cast<T>(m);

  CVec<T> v = CVec<T>::Constant(s, std::complex<T>(T(1) / std::sqrt(static_cast<T>(s))));
  T eig = 0;
  for (int it = 0; it < 200; ++it) {
    CVec<T> hv = h * v;
    const T norm = hv.norm();
    if (norm == T(0)) {  // degenerate data: H annihilates the start vector
      init.z0 = CVec<T>::Zero(n);
      return init;
    }
    const T eig_next = std::real(v.dot(hv));
    v = hv / norm;
    if (it > 0 && std::abs(eig_next - eig) < T(1e-10) * std::max(std::abs(eig_next), T(1)))
      { eig = eig_next; break; }
    eig = eig_next;
  }

  CVec<T> zt = CVec<T>::Zero(n);
  for (Index c = 0; c < s; ++c) zt[init.support[static_cast<std::size_t>(c)]] = v[c];
  // Magnitude from the mean intensity, evaluated in the solver's
  // unit-modulus sensing frame (phi^2 there is n times the raw mean).
  const T phi2_scaled = static_cast<T>(n) * phi2;
  const T scale = std::sqrt(static_cast<T>(n) / static_cast<T>(m) * phi2_scaled);
  init.z0 = dft.inverse(zt) * scale;
  return init;
}

template <typename T>
SpectralInit<T> spectral_init(const MeasurementSet<T>& g, const SensingEnsemble<T>& ens,
                              const SolverParams<T>& params) {
  Dft<T> dft(ens.shape);
  return spectral_init(g, ens, params, dft);
}

template <typename T = Real>
struct ReconstructionReport {
  CVec<T> estimate;
  std::vector<T> mu_trace;
  std::vector<T> grad_norm_trace;
  std::vector<T> objective_trace;
  std::vector<T> error_trace;  // empty when no ground truth was supplied
  Index iterations_run = 0;
  T init_correlation = std::numeric_limits<T>::quiet_NaN();
};

/// Optional per-iteration hook; receives t and the post-threshold iterate.
template <typename T>
using IterateObserver = std::function<void(Index, const CVec<T>&)>;

/// Two-stage reconstruction: spectral initialization, then T thresholded
/// Wirtinger iterations z <- F^H H_s(F(z - tau grad)) with the smoothing
/// level mu kept while ||grad(z_next, mu)|| >= gamma mu and multiplied by
/// gamma1 otherwise.
template <typename T>
ReconstructionReport<T> reconstruct(const MeasurementSet<T>& g, const SensingEnsemble<T>& ens,
                                    const SolverParams<T>& params,
                                    const CVec<T>* ground_truth = nullptr,
                                    const IterateObserver<T>& observer = {}) {
  params.validate(ens.n());
  detail::validate_measurements(g, ens);
  Dft<T> dft(ens.shape);

  ReconstructionReport<T> report;
  const SpectralInit<T> init = spectral_init(g, ens, params, dft);
  CVec<T> z = init.z0;
  if (ground_truth != nullptr) {
    const T nz = z.norm();
    const T nx = ground_truth->norm();
    report.init_correlation =
        (nz > T(0) && nx > T(0)) ? std::abs(ground_truth->dot(z)) / (nz * nx) : T(0);
  }

  T mu = params.mu0;
  const T scale = detail::sensing_scale(ens);
  auto eval = detail::gradient_eval(z, g, ens, mu, dft, scale);
  Index calm_steps = 0;
  for (Index t = 0; t < params.iterations; ++t) {
    report.mu_trace.push_back(mu);

    CVec<T> zt = dft.forward((z - params.tau * eval.grad).eval());
    zt = hard_threshold(zt, params.sparsity);
    CVec<T> z_next = dft.inverse(zt);
    if (!z_next.allFinite())
      throw std::runtime_error("reconstruct: diverged (non-finite iterate) at iteration " +
                               std::to_string(t));

    // Smoothing control uses the gradient at the post-threshold iterate
    // with the current mu; when mu survives, the evaluation is reused as
    // the next step's gradient.
    auto next_eval = detail::gradient_eval(z_next, g, ens, mu, dft, scale);
    report.grad_norm_trace.push_back(next_eval.grad_norm);
    report.objective_trace.push_back(next_eval.objective);
    if (ground_truth != nullptr)
      report.error_trace.push_back(relative_error(z_next, *ground_truth));
    if (observer) observer(t, z_next);

    const T step_norm = (z_next - z).norm();
    const T base_norm = z.norm();
    const bool calm = base_norm > T(0) ? step_norm < T(1e-12) * base_norm : step_norm == T(0);
    calm_steps = calm ? calm_steps + 1 : 0;

    z = std::move(z_next);
    report.iterations_run = t + 1;

    if (next_eval.grad_norm >= params.gamma * mu) {
      eval = std::move(next_eval);
    } else {
      mu = params.gamma1 * mu;
      eval = detail::gradient_eval(z, g, ens, mu, dft, scale);
    }

    if (params.early_stop && calm_steps >= 10) break;
  }

  report.estimate = std::move(z);
  return report;
}

}  // namespace cdp
