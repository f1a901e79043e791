#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <complex>

#include "catcollapse/spinboson.hpp"

namespace catcollapse::oracle {

// Dense test-side construction of the same Hamiltonian from Kronecker
// products: spin is the most significant factor, then mode 0, mode 1, ...
inline Eigen::MatrixXd dense_hamiltonian(const spinboson::SpinBosonParams& p) {
  const int d = p.n_max + 1;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (int n = 1; n < d; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  const Eigen::MatrixXd num = a.transpose() * a;
  const Eigen::MatrixXd x = a + a.transpose();
  const auto modes = p.bath.size();
  auto embed = [&](const Eigen::MatrixXd& op, std::size_t l) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
    for (std::size_t k = 0; k < modes; ++k) {
      const Eigen::MatrixXd f = k == l ? op : Eigen::MatrixXd::Identity(d, d);
      out = Eigen::MatrixXd(Eigen::kroneckerProduct(out, f));
    }
    return out;
  };
  const auto bd = static_cast<Eigen::Index>(std::pow(d, modes));
  Eigen::MatrixXd bath = Eigen::MatrixXd::Zero(bd, bd);
  Eigen::MatrixXd coupling = Eigen::MatrixXd::Zero(bd, bd);
  for (std::size_t l = 0; l < modes; ++l) {
    bath += p.bath.modes[l].omega * embed(num, l);
    coupling += p.bath.modes[l].lambda * embed(x, l);
  }
  Eigen::Matrix2d sx, sz;
  sx << 0, 1, 1, 0;
  sz << 1, 0, 0, -1;
  const Eigen::MatrixXd ib = Eigen::MatrixXd::Identity(bd, bd);
  return Eigen::MatrixXd(Eigen::kroneckerProduct(Eigen::Matrix2d::Identity(), bath)) -
         p.h.x * Eigen::MatrixXd(Eigen::kroneckerProduct(sx, ib)) -
         p.h.z * Eigen::MatrixXd(Eigen::kroneckerProduct(sz, ib)) -
         Eigen::MatrixXd(Eigen::kroneckerProduct(sz, coupling));
}

inline StateVector dense_propagate(const Eigen::MatrixXd& hm, const StateVector& psi0, double t) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hm);
  const Eigen::MatrixXcd v = eig.eigenvectors().cast<std::complex<double>>();
  Eigen::VectorXcd phase(hm.rows());
  for (Eigen::Index k = 0; k < hm.rows(); ++k) phase[k] = std::polar(1.0, -t * eig.eigenvalues()[k]);
  return v * phase.asDiagonal() * (v.adjoint() * psi0);
}

/// Coherence |rho_{+-}| of the cat (|+> + |->)/sqrt2 over a vacuum bath at
/// zero field: each mode's two displaced trajectories overlap as
/// exp(-2 (lambda/omega)^2 |1 - e^{-i omega t}|^2 / 2).
inline double dephasing_overlap(const spinboson::BathDiscretization& bath, double t) {
  double exponent = 0.0;
  for (const auto& m : bath.modes) {
    const std::complex<double> beta = 2.0 * (m.lambda / m.omega) * (1.0 - std::polar(1.0, -m.omega * t));
    exponent += 0.5 * std::norm(beta);
  }
  return 0.5 * std::exp(-exponent);
}

}  // namespace catcollapse::oracle
