#include "qabc/fisher.hpp"

#include "qabc/parallel.hpp"

#include <sstream>

namespace qabc {

namespace {

/// Mass-normalized spectra at theta and theta +/- h e_k for every k.
struct Stencil {
  VectorXd base;
  std::vector<VectorXd> plus, minus;
  VectorXd steps;
  Real grid_step = 1.0;
};

Stencil evaluate_stencil(const SpinParams& params, const UniformGrid& grid, const FisherOptions& opts) {
  params.validate();
  require(opts.shift_step > 0.0 && opts.coupling_step > 0.0, "finite-difference steps must be positive");
  const int n = params.n_spins;
  const int d = theta_dimension(n);
  const VectorXd theta = params.theta();

  Stencil s;
  s.grid_step = grid.step;
  s.steps.resize(d);
  for (int k = 0; k < d; ++k) s.steps[k] = k < n ? opts.shift_step : opts.coupling_step;
  s.plus.resize(static_cast<std::size_t>(d));
  s.minus.resize(static_cast<std::size_t>(d));

  const auto spectrum_at = [&](const VectorXd& t) {
    const SpinParams p = SpinParams::from_theta(t, n, params.gamma);
    SpectralDensity a = spectrum_exact(transitions(solve(p)), p.gamma, grid);
    const Real mass = a.mass();
    if (!(mass > 0.0) || !a.values.allFinite())
      throw NumericalError("finite-difference evaluation produced an invalid spectrum");
    return VectorXd(a.values / mass);
  };

  parallel_for(static_cast<std::size_t>(2 * d + 1), [&](std::size_t task) {
    if (task == 0) {
      s.base = spectrum_at(theta);
      return;
    }
    const int k = static_cast<int>((task - 1) / 2);
    VectorXd t = theta;
    if ((task - 1) % 2 == 0) {
      t[k] += s.steps[k];
      s.plus[static_cast<std::size_t>(k)] = spectrum_at(t);
    } else {
      t[k] -= s.steps[k];
      s.minus[static_cast<std::size_t>(k)] = spectrum_at(t);
    }
  });
  if (s.base.minCoeff() <= 0.0)
    throw NumericalError("spectrum not strictly positive on the grid; log-derivative undefined");
  return s;
}

UniformGrid evaluation_grid(const SpinParams& params, const FisherOptions& opts) {
  if (opts.grid) return *opts.grid;
  return default_omega_grid(transitions(solve(params)), params.gamma, opts.grid_options);
}

}  // namespace

FisherMatrix fim(const SpinParams& params, const FisherOptions& opts) {
  const UniformGrid grid = evaluation_grid(params, opts);
  const Stencil s = evaluate_stencil(params, grid, opts);
  const auto d = s.steps.size();

  MatrixXd dlog(s.base.size(), d);
  FisherMatrix out;
  out.steps = s.steps;
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto& p = s.plus[static_cast<std::size_t>(k)];
    const auto& m = s.minus[static_cast<std::size_t>(k)];
    const Real h = s.steps[k];
    dlog.col(k) = (p.array().log() - m.array().log()).matrix() / (2.0 * h);

    const Real first = ((p - m) / (2.0 * h)).cwiseAbs().sum();
    const Real second = ((p - 2.0 * s.base + m) / (h * h)).cwiseAbs().sum();
    if (first > 1e-8 * s.base.sum() && h * second / first > opts.curvature_threshold) {
      out.flagged.push_back(static_cast<int>(k));
      std::ostringstream msg;
      msg << "parameter " << k << ": step " << h << " Hz too large (curvature ratio " << h * second / first
          << ")";
      out.warnings.push_back(msg.str());
    }
  }
  // Trapezoidal weights times A, then I = D^T W D.
  VectorXd w = s.base * (s.grid_step / kTwoPi);
  w[0] *= 0.5;
  w[w.size() - 1] *= 0.5;
  out.values = dlog.transpose() * w.asDiagonal() * dlog;
  out.values = 0.5 * (out.values + out.values.transpose()).eval();
  return out;
}

VectorXd sloppiness_spectrum(const FisherMatrix& fisher) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fisher.values, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("FIM eigensolver failed");
  return es.eigenvalues().reverse();
}

JeffreysDensity jeffreys_density(const FisherMatrix& fisher, Real rel_tol) {
  const VectorXd ev = sloppiness_spectrum(fisher);
  JeffreysDensity out;
  out.dimension = static_cast<int>(ev.size());
  const Real top = ev.size() ? ev[0] : 0.0;
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (top > 0.0 && ev[k] > rel_tol * top) ++out.rank;
  if (out.rank < out.dimension) return out;
  // Product of eigenvalues; sqrt taken factor-wise to avoid underflow.
  Real density = 1.0;
  for (Eigen::Index k = 0; k < ev.size(); ++k) density *= std::sqrt(ev[k]);
  out.density = density;
  return out;
}

std::vector<GradientBound> hellinger_gradient_bound(const SpinParams& params,
                                                    const NormalizedSpectrum& target,
                                                    const FisherOptions& opts) {
  require(!target.provenance.standardized, "target must be mass-normalized on an angular-frequency grid");
  FisherOptions o = opts;
  o.grid = target.grid;
  const Stencil s = evaluate_stencil(params, target.grid, o);
  const auto hellinger2 = [&](const VectorXd& a) {
    const Real h = hellinger(a, target.values, s.grid_step);
    return h * h;
  };
  VectorXd w = s.base * (s.grid_step / kTwoPi);
  w[0] *= 0.5;
  w[w.size() - 1] *= 0.5;

  std::vector<GradientBound> out(static_cast<std::size_t>(s.steps.size()));
  for (Eigen::Index k = 0; k < s.steps.size(); ++k) {
    const auto& p = s.plus[static_cast<std::size_t>(k)];
    const auto& m = s.minus[static_cast<std::size_t>(k)];
    const Real h = s.steps[k];
    const VectorXd dlog = (p.array().log() - m.array().log()).matrix() / (2.0 * h);
    out[static_cast<std::size_t>(k)].gradient = (hellinger2(p) - hellinger2(m)) / (2.0 * h);
    out[static_cast<std::size_t>(k)].sqrt_fisher = std::sqrt(w.dot(dlog.cwiseAbs2()));
  }
  return out;
}

}  // namespace qabc
