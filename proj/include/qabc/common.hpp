#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace qabc {

using Real = double;
using Complex = std::complex<double>;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;
using ArrayXd = Eigen::ArrayXd;

inline constexpr Real kTwoPi = 2.0 * std::numbers::pi;

/// Hz to rad/s.
inline constexpr Real to_angular(Real hz) { return kTwoPi * hz; }
/// rad/s to Hz.
inline constexpr Real to_hz(Real omega) { return omega / kTwoPi; }

/// Bad input: violated preconditions, malformed files, invalid configuration.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown: solver non-convergence, non-finite intermediates.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ValidationError(what);
}

/// Uniform frequency or time grid. Point k is `start + k * step`; every grid in
/// the library is generated this way so that serialized grids reload bit-exactly.
struct UniformGrid {
  Real start = 0.0;
  Real step = 1.0;
  Eigen::Index size = 0;

  Real operator[](Eigen::Index k) const { return start + static_cast<Real>(k) * step; }
  Real back() const { return (*this)[size - 1]; }
  VectorXd points() const {
    VectorXd p(size);
    for (Eigen::Index k = 0; k < size; ++k) p[k] = (*this)[k];
    return p;
  }
  bool operator==(const UniformGrid&) const = default;
};

/// Grid of `size` points from `lo` with spacing `step`, extended to cover `hi`.
inline UniformGrid make_grid(Real lo, Real hi, Real step) {
  require(step > 0.0 && std::isfinite(step), "grid step must be positive and finite");
  require(hi >= lo, "grid upper bound below lower bound");
  const auto n = static_cast<Eigen::Index>(std::ceil((hi - lo) / step - 1e-9)) + 1;
  return UniformGrid{lo, step, std::max<Eigen::Index>(n, 2)};
}

/// Composite trapezoidal rule on a uniform grid.
template <typename Derived>
Real trapezoid(const Eigen::DenseBase<Derived>& f, Real step) {
  const auto n = f.size();
  if (n < 2) return 0.0;
  return step * (f.sum() - 0.5 * (f(0) + f(n - 1)));
}

}  // namespace qabc
