#pragma once

#include "cdp/types.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace cdp {

/// Unitary discrete Fourier transform on a d-dimensional grid, applied axis
/// by axis. forward() multiplies by the unitary DFT matrix F (see
/// dense_dft_matrix), inverse() by F^H; both preserve the 2-norm.
///
/// Instances cache FFT plans and scratch lines, so they are cheap to reuse
/// but not safe to share between threads. All free functions that take a
/// Dft& leave its grid shape unchanged.
template <typename T = Real>
class Dft {
 public:
  explicit Dft(GridShape shape) : shape_(std::move(shape)) {}

  const GridShape& shape() const { return shape_; }

  CVec<T> forward(const CVec<T>& v) {
    CVec<T> out = v;
    forward_in_place(out);
    return out;
  }

  CVec<T> inverse(const CVec<T>& v) {
    CVec<T> out = v;
    inverse_in_place(out);
    return out;
  }

  void forward_in_place(CVec<T>& v) { transform(v, false); }
  void inverse_in_place(CVec<T>& v) { transform(v, true); }

 private:
  void transform(CVec<T>& v, bool inverse) {
    if (v.size() != shape_.size())
      throw std::invalid_argument("Dft: vector length does not match grid size");
    Index stride = 1;
    for (Index a = shape_.rank() - 1; a >= 0; --a) {
      const Index len = shape_.dims[static_cast<std::size_t>(a)];
      if (len > 1) transform_axis(v, len, stride, inverse);
      stride *= len;
    }
  }

  // Lines along an axis have the given stride in row-major order; the flat
  // index splits as (block, k, offset) with k the position along the axis.
  void transform_axis(CVec<T>& v, Index len, Index stride, bool inverse) {
    line_in_.resize(static_cast<std::size_t>(len));
    line_out_.resize(static_cast<std::size_t>(len));
    const T fwd_scale = T(1) / std::sqrt(static_cast<T>(len));
    const T inv_scale = std::sqrt(static_cast<T>(len));
    const Index blocks = v.size() / (len * stride);
    for (Index b = 0; b < blocks; ++b) {
      for (Index off = 0; off < stride; ++off) {
        const Index base = b * len * stride + off;
        for (Index k = 0; k < len; ++k)
          line_in_[static_cast<std::size_t>(k)] = v[base + k * stride];
        if (inverse) {
          fft_.inv(line_out_, line_in_);  // includes a 1/len factor
          for (Index k = 0; k < len; ++k)
            v[base + k * stride] = line_out_[static_cast<std::size_t>(k)] * inv_scale;
        } else {
          fft_.fwd(line_out_, line_in_);
          for (Index k = 0; k < len; ++k)
            v[base + k * stride] = line_out_[static_cast<std::size_t>(k)] * fwd_scale;
        }
      }
    }
  }

  GridShape shape_;
  Eigen::FFT<T> fft_;
  std::vector<std::complex<T>> line_in_, line_out_;
};

/// Dense unitary DFT matrix of the grid: the Kronecker product of per-axis
/// unitary DFT matrices, outermost axis first (row-major flattening).
template <typename T = Real>
CMat<T> dense_dft_matrix(const GridShape& shape) {
  using C = std::complex<T>;
  if (shape.size() > 4096)
    throw std::invalid_argument("dense_dft_matrix: grid too large to materialize");
  CMat<T> f = CMat<T>::Constant(1, 1, C(1, 0));
  for (Index a = 0; a < shape.rank(); ++a) {
    const Index len = shape.dims[static_cast<std::size_t>(a)];
    CMat<T> w(len, len);
    const T norm = T(1) / std::sqrt(static_cast<T>(len));
    for (Index q = 0; q < len; ++q) {
      for (Index k = 0; k < len; ++k) {
        const T angle = T(-2) * std::numbers::pi_v<T> * static_cast<T>(q * k) /
                        static_cast<T>(len);
        w(q, k) = C(std::cos(angle), std::sin(angle)) * norm;
      }
    }
    CMat<T> next(f.rows() * len, f.cols() * len);
    for (Index i = 0; i < f.rows(); ++i)
      for (Index j = 0; j < f.cols(); ++j)
        next.block(i * len, j * len, len, len) = f(i, j) * w;
    f = std::move(next);
  }
  return f;
}

}  // namespace cdp
