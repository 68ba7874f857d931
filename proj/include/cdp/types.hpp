#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace cdp {

using Index = Eigen::Index;

template <typename T> using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T> using CVec = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, 1>;
template <typename T> using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T> using CMat = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;

using Real = double;
using Complex = std::complex<double>;

/// Rectangular d-dimensional grid. Flat indices are row-major: the first
/// axis is slowest, the last axis fastest.
struct GridShape {
  std::vector<Index> dims;

  GridShape() = default;

  explicit GridShape(std::vector<Index> d) : dims(std::move(d)) {
    if (dims.empty())
      throw std::invalid_argument("GridShape: dims must be non-empty");
    Index n = 1;
    for (Index e : dims) {
      if (e < 1) throw std::invalid_argument("GridShape: every dim must be >= 1");
      if (n > (Index{1} << 40) / e)
        throw std::invalid_argument("GridShape: grid too large");
      n *= e;
    }
  }

  static GridShape line(Index n) { return GridShape(std::vector<Index>{n}); }

  Index size() const {
    Index n = 1;
    for (Index e : dims) n *= e;
    return n;
  }

  Index rank() const { return static_cast<Index>(dims.size()); }

  std::vector<Index> unflatten(Index flat) const {
    std::vector<Index> idx(dims.size());
    for (Index a = rank() - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = flat % dims[static_cast<std::size_t>(a)];
      flat /= dims[static_cast<std::size_t>(a)];
    }
    return idx;
  }

  Index flatten(const std::vector<Index>& idx) const {
    Index flat = 0;
    for (std::size_t a = 0; a < dims.size(); ++a) flat = flat * dims[a] + idx[a];
    return flat;
  }

  bool operator==(const GridShape& o) const { return dims == o.dims; }
  bool operator!=(const GridShape& o) const { return dims != o.dims; }
};

}  // namespace cdp
