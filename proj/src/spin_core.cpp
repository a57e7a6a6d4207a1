#include "qabc/spin_core.hpp"

#include <numeric>
#include <sstream>

namespace qabc {

void SpinParams::validate() const {
  require(n_spins >= 1, "n_spins must be >= 1");
  require(shifts.size() == n_spins, "shifts: expected " + std::to_string(n_spins) + " entries");
  require(couplings.rows() == n_spins && couplings.cols() == n_spins,
          "couplings: expected a " + std::to_string(n_spins) + "x" + std::to_string(n_spins) +
              " matrix");
  require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive and finite");
  for (int i = 0; i < n_spins; ++i) {
    require(std::isfinite(shifts[i]), "shifts[" + std::to_string(i) + "] is not finite");
    require(couplings(i, i) == 0.0,
            "couplings[" + std::to_string(i) + "][" + std::to_string(i) + "] must be zero");
    for (int j = 0; j < n_spins; ++j) {
      const std::string path = "couplings[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      require(std::isfinite(couplings(i, j)), path + " is not finite");
      require(couplings(i, j) == couplings(j, i),
              path + " != couplings[" + std::to_string(j) + "][" + std::to_string(i) + "]");
    }
  }
}

VectorXd SpinParams::theta() const {
  VectorXd t(theta_dimension(n_spins));
  t.head(n_spins) = shifts;
  int k = n_spins;
  for (int i = 0; i < n_spins; ++i)
    for (int j = i + 1; j < n_spins; ++j) t[k++] = couplings(i, j);
  return t;
}

SpinParams SpinParams::from_theta(const VectorXd& theta, int n_spins, Real gamma) {
  require(theta.size() == theta_dimension(n_spins), "theta has the wrong length for n_spins");
  SpinParams p;
  p.n_spins = n_spins;
  p.gamma = gamma;
  p.shifts = theta.head(n_spins);
  p.couplings = MatrixXd::Zero(n_spins, n_spins);
  int k = n_spins;
  for (int i = 0; i < n_spins; ++i)
    for (int j = i + 1; j < n_spins; ++j) {
      p.couplings(i, j) = theta[k];
      p.couplings(j, i) = theta[k];
      ++k;
    }
  return p;
}

VectorXd sz_total_diagonal(int n_spins) {
  const std::uint64_t dim = std::uint64_t{1} << n_spins;
  VectorXd m(dim);
  for (std::uint64_t s = 0; s < dim; ++s) m[s] = magnetization(s, n_spins);
  return m;
}

EigenSystem diagonalize(const MatrixXd& hamiltonian) {
  const auto dim = hamiltonian.rows();
  require(dim == hamiltonian.cols() && dim > 0, "Hamiltonian must be square and non-empty");
  require(std::has_single_bit(static_cast<std::uint64_t>(dim)), "Hamiltonian dimension must be 2^N");
  const Real asym = (hamiltonian - hamiltonian.transpose()).norm();
  const Real scale = std::max(hamiltonian.norm(), 1.0);
  require(asym <= 1e-12 * scale, "Hamiltonian is not Hermitian");

  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(hamiltonian);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "eigensolver did not converge (dim " << dim << ", ||H||_F = " << hamiltonian.norm()
        << ", max|H_ij| = " << hamiltonian.cwiseAbs().maxCoeff() << ")";
    throw NumericalError(msg.str());
  }
  EigenSystem eig;
  eig.n_spins = std::countr_zero(static_cast<std::uint64_t>(dim));
  eig.energies = solver.eigenvalues();
  eig.basis = solver.eigenvectors();

  const Real residual =
      (hamiltonian * eig.basis - eig.basis * eig.energies.asDiagonal()).norm();
  if (residual > 1e-9 * scale) {
    std::ostringstream msg;
    msg << "eigen residual " << residual << " exceeds tolerance for ||H|| = " << scale
        << " (spread of eigenvalues " << eig.energies.maxCoeff() - eig.energies.minCoeff() << ")";
    throw NumericalError(msg.str());
  }
  const VectorXd sz = sz_total_diagonal(eig.n_spins);
  eig.sz_eigenbasis = eig.basis.transpose() * sz.asDiagonal() * eig.basis;
  eig.sz_eigenbasis = 0.5 * (eig.sz_eigenbasis + eig.sz_eigenbasis.transpose()).eval();
  return eig;
}

Real TransitionList::bandwidth() const {
  return frequency.size() ? frequency.cwiseAbs().maxCoeff() : 0.0;
}

Real TransitionList::stick_width() const {
  const Real w = weight.sum();
  return w > 0 ? std::sqrt(weight.dot(frequency.cwiseAbs2()) / w) : 0.0;
}

TransitionList transitions(const EigenSystem& eig) {
  const auto dim = eig.energies.size();
  const Real norm = 1.0 / static_cast<Real>(dim);
  struct Line {
    Real f, w;
  };
  std::vector<Line> lines;
  lines.reserve(static_cast<std::size_t>(dim * dim));
  Real total = 0.0;
  for (Eigen::Index a = 0; a < dim; ++a)
    for (Eigen::Index b = 0; b < dim; ++b) {
      const Real w = eig.sz_eigenbasis(a, b) * eig.sz_eigenbasis(a, b) * norm;
      total += w;
      lines.push_back({eig.energies[b] - eig.energies[a], w});
    }
  std::sort(lines.begin(), lines.end(), [](const Line& x, const Line& y) { return x.f < y.f; });

  const Real scale = std::max(1.0, eig.energies.cwiseAbs().maxCoeff());
  const Real drop = 1e-16 * total;
  std::vector<Line> merged;
  for (const Line& l : lines) {
    if (l.w <= drop) continue;
    if (!merged.empty() && std::abs(merged.back().f - l.f) <= 1e-10 * scale) {
      // Weighted position keeps the first moment of the merged group exact.
      const Real w = merged.back().w + l.w;
      merged.back().f = (merged.back().f * merged.back().w + l.f * l.w) / w;
      merged.back().w = w;
    } else {
      merged.push_back(l);
    }
  }
  TransitionList tl;
  tl.n_spins = eig.n_spins;
  tl.frequency.resize(static_cast<Eigen::Index>(merged.size()));
  tl.weight.resize(static_cast<Eigen::Index>(merged.size()));
  for (std::size_t k = 0; k < merged.size(); ++k) {
    tl.frequency[static_cast<Eigen::Index>(k)] = merged[k].f;
    tl.weight[static_cast<Eigen::Index>(k)] = merged[k].w;
  }
  return tl;
}

Complex response_at(const TransitionList& tl, Real t) {
  Complex s{0.0, 0.0};
  for (Eigen::Index k = 0; k < tl.frequency.size(); ++k)
    s += tl.weight[k] * std::polar(1.0, -tl.frequency[k] * t);
  return s;
}

ResponseSeries response_exact(const TransitionList& tl, const UniformGrid& times) {
  require(times.size >= 1 && times.start >= 0.0 && times.step > 0.0, "times must be a grid with t >= 0");
  ResponseSeries r;
  r.times = times;
  r.values.resize(times.size);
  for (Eigen::Index k = 0; k < times.size; ++k) r.values[k] = response_at(tl, times[k]);
  return r;
}

UniformGrid default_omega_grid(const TransitionList& tl, Real gamma, GridOptions opts) {
  require(gamma > 0.0, "gamma must be positive");
  const Real lo = tl.frequency.size() ? tl.frequency.minCoeff() : 0.0;
  const Real hi = tl.frequency.size() ? tl.frequency.maxCoeff() : 0.0;
  return make_grid(lo - opts.margin * gamma, hi + opts.margin * gamma, opts.step_fraction * gamma);
}

SpectralDensity spectrum_exact(const TransitionList& tl, Real gamma, const UniformGrid& omega) {
  require(gamma > 0.0 && std::isfinite(gamma), "gamma must be positive");
  require(omega.size >= 2 && omega.step > 0.0, "omega grid needs at least two points");
  SpectralDensity spec;
  spec.omega = omega;
  spec.n_spins = tl.n_spins;
  spec.values = VectorXd::Zero(omega.size);
  const Real g2 = gamma * gamma;
  for (Eigen::Index i = 0; i < omega.size; ++i) {
    const Real w = omega[i];
    Real acc = 0.0;
    for (Eigen::Index k = 0; k < tl.frequency.size(); ++k) {
      const Real d = w - tl.frequency[k];
      acc += tl.weight[k] / (g2 + d * d);
    }
    spec.values[i] = 2.0 * gamma * acc;
  }
  const Real expected = tl.weight.sum();
  if (expected > 0.0 && spec.mass() < 0.99 * expected) {
    std::ostringstream msg;
    msg << "omega grid too narrow: captured spectral mass " << spec.mass() << " < 99% of "
        << expected;
    spec.warnings.push_back(msg.str());
  }
  return spec;
}

SpectralDensity simulate_spectrum(const SpinParams& params, GridOptions opts) {
  const TransitionList tl = transitions(solve(params));
  return spectrum_exact(tl, params.gamma, default_omega_grid(tl, params.gamma, opts));
}

Real ipr(const SpectralDensity& spec) {
  const Real m1 = trapezoid(spec.values, spec.omega.step);
  const Real m2 = trapezoid(spec.values.cwiseAbs2(), spec.omega.step);
  require(m2 > 0.0, "IPR of a zero spectrum is undefined");
  return m1 * m1 / m2;
}

}  // namespace qabc
