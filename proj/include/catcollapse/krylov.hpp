#pragma once

// Short-iterate Lanczos propagator for psi(t + tau) = exp(-i H tau) psi(t)
// with H real symmetric and applied matrix-free.
//
// Each step builds an orthonormal Krylov basis V_m (full reorthogonalization)
// and the tridiagonal projection T_m, then picks the largest tau whose a
// posteriori error estimate
//
//   err(tau) = |psi| beta_m |e_m^T exp(-i tau T_m) e_1|
//
// stays below the allowance tol * tau / horizon. A breakdown (beta_j ~ 0)
// means the Krylov space is invariant and the step is exact for any tau.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "catcollapse/errors.hpp"

namespace catcollapse {

using StateVector = Eigen::VectorXcd;

struct KrylovOptions {
  double tol = 1e-10;          // error budget over the whole propagation horizon
  int max_krylov = 20;         // basis size per step
  std::size_t max_steps = 2'000'000;
};

struct KrylovStats {
  std::size_t steps = 0;
  std::size_t matvecs = 0;
  double error_estimate = 0.0;  // accumulated a posteriori estimate
};

/// Propagate `psi` in place by `duration` under `op`. `horizon` is the total
/// time over which `options.tol` is spent; steps receive proportional shares.
template <typename Operator>
void krylov_propagate(const Operator& op, StateVector& psi, double duration, double horizon,
                      const KrylovOptions& options, KrylovStats& stats) {
  if (!(duration >= 0.0)) throw InvalidArgument("krylov_propagate: duration must be >= 0");
  if (duration == 0.0) return;
  const Eigen::Index n = psi.size();
  const int m_max = static_cast<int>(std::min<Eigen::Index>(options.max_krylov, n));
  horizon = std::max(horizon, duration);

  Eigen::MatrixXcd v(n, m_max + 1);
  StateVector w(n);
  std::vector<double> alpha(m_max), beta(m_max);
  double remaining = duration;

  while (remaining > 0.0) {
    if (stats.steps >= options.max_steps) {
      throw NumericalBudgetError("krylov_propagate: step cap of " + std::to_string(options.max_steps) + " reached");
    }
    const double psi_norm = psi.norm();
    if (psi_norm == 0.0) return;
    v.col(0) = psi / psi_norm;
    int m = 0;
    bool invariant = false;
    for (int j = 0; j < m_max; ++j) {
      op.apply(v.col(j), w);
      ++stats.matvecs;
      alpha[j] = v.col(j).dot(w).real();
      // Full reorthogonalization, applied twice for stability.
      for (int pass = 0; pass < 2; ++pass) {
        const Eigen::VectorXcd proj = v.leftCols(j + 1).adjoint() * w;
        w.noalias() -= v.leftCols(j + 1) * proj;
      }
      beta[j] = w.norm();
      m = j + 1;
      const double scale = std::max(std::abs(alpha[j]), 1.0);
      if (beta[j] <= 1e-13 * scale) {
        invariant = true;
        break;
      }
      v.col(j + 1) = w / beta[j];
    }

    Eigen::VectorXd diag(m), sub(std::max(m - 1, 0));
    for (int j = 0; j < m; ++j) diag[j] = alpha[j];
    for (int j = 0; j + 1 < m; ++j) sub[j] = beta[j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    if (m == 1) {
      eig.compute(Eigen::MatrixXd::Constant(1, 1, diag[0]));
    } else {
      eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    }
    const Eigen::MatrixXd& q = eig.eigenvectors();
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const Eigen::VectorXd q_first = q.row(0).transpose();

    auto coeffs = [&](double tau) {
      Eigen::VectorXcd c(m);
      for (int k = 0; k < m; ++k) c[k] = std::polar(q_first[k], -tau * lambda[k]);
      return Eigen::VectorXcd(q.cast<std::complex<double>>() * c);
    };
    auto error_of = [&](const Eigen::VectorXcd& y) {
      return invariant ? 0.0 : psi_norm * beta[m - 1] * std::abs(y[m - 1]);
    };

    double tau = remaining;
    Eigen::VectorXcd y = coeffs(tau);
    double err = error_of(y);
    int shrinks = 0;
    while (err > options.tol * tau / horizon) {
      // err ~ tau^m for small tau; aim slightly below the allowance.
      const double ratio = options.tol * tau / horizon / err;
      const double factor = std::clamp(0.9 * std::pow(ratio, 1.0 / std::max(m - 1, 1)), 0.05, 0.9);
      tau *= factor;
      if (++shrinks > 200 || tau < 1e-300) {
        throw NumericalBudgetError("krylov_propagate: tolerance " + std::to_string(options.tol) +
                                   " not reachable with basis size " + std::to_string(m));
      }
      y = coeffs(tau);
      err = error_of(y);
    }
    psi = psi_norm * (v.leftCols(m) * y);
    stats.error_estimate += err;
    ++stats.steps;
    remaining = (tau >= remaining) ? 0.0 : remaining - tau;
  }
}

/// Inner estimates of the extreme eigenvalues from a Lanczos run with full
/// reorthogonalization, started from a fixed deterministic vector.
template <typename Operator>
std::pair<double, double> lanczos_extremes(const Operator& op, Eigen::Index dimension, int iterations = 80) {
  const int m_max = static_cast<int>(std::min<Eigen::Index>(iterations, dimension));
  Eigen::MatrixXcd v(dimension, m_max + 1);
  StateVector w(dimension);
  for (Eigen::Index i = 0; i < dimension; ++i) v(i, 0) = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
  v.col(0).normalize();
  std::vector<double> alpha, beta;
  for (int j = 0; j < m_max; ++j) {
    op.apply(v.col(j), w);
    alpha.push_back(v.col(j).dot(w).real());
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXcd proj = v.leftCols(j + 1).adjoint() * w;
      w.noalias() -= v.leftCols(j + 1) * proj;
    }
    const double b = w.norm();
    if (b <= 1e-12 * std::max(1.0, std::abs(alpha.back()))) break;
    beta.push_back(b);
    v.col(j + 1) = w / b;
  }
  const auto m = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    t(j, j) = alpha[j];
    if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j];
  }
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly).eigenvalues();
  return {ev[0], ev[m - 1]};
}

}  // namespace catcollapse
