#pragma once

// Spectral certificates for strongly connected Laplacians: the positive left
// null vector mu (mu^T L = 0, normalized to sum 1) and the smallest
// eigenvalue of L^T M + M L with M = diag(mu), which is nonnegative up to
// rounding for strongly connected graphs.

#include "cascade/graph.hpp"
#include "cascade/scc.hpp"
#include "cascade/types.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

namespace cascade {

template <typename Scalar = double>
struct SpectralCertificate {
  VectorX<Scalar> mu;   // entrywise positive, sums to 1
  Scalar min_sym_eig;   // smallest eigenvalue of L^T M + M L
  Scalar residual;      // ||mu^T L||_inf
};

/// Smallest eigenvalue of the symmetric matrix L^T M + M L, M = diag(mu).
template <typename Scalar>
Scalar check_sym_psd(const MatrixX<Scalar>& L, const VectorX<Scalar>& mu) {
  if (L.rows() != L.cols() || mu.size() != L.rows()) {
    throw Error(errc::dimension_mismatch, "Laplacian/mu size mismatch");
  }
  const MatrixX<Scalar> S =
      L.transpose() * mu.asDiagonal() + MatrixX<Scalar>(mu.asDiagonal()) * L;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(S, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// Left null vector of a strongly connected Laplacian by shifted inverse
/// iteration on L^T. The start vector defaults to the all-ones direction;
/// pass a different one to probe uniqueness. Residual target is
/// 5e-11 * max(1, ||L||_inf).
template <typename Scalar>
SpectralCertificate<Scalar> left_null_vector(const MatrixX<Scalar>& L,
                                             VectorX<Scalar> start = VectorX<Scalar>()) {
  if (L.rows() != L.cols()) {
    throw Error(errc::dimension_mismatch, "Laplacian must be square");
  }
  const Index n = L.rows();
  {
    const auto part = strongly_connected_components(graph_from_laplacian(L));
    if (part.components.size() != 1) {
      throw Error(errc::not_strongly_connected,
                  "graph has " + std::to_string(part.components.size()) +
                      " strongly connected components");
    }
  }

  const Scalar norm = L.template lpNorm<Eigen::Infinity>();
  // Half the certified 1e-10 bound at double precision; for wider epsilons
  // the bound degrades with the scalar type.
  const Scalar eps = Eigen::NumTraits<Scalar>::epsilon();
  const Scalar certified = std::max(Scalar(5e-11), Scalar(1000) * eps) * norm;
  const Scalar floor = Scalar(50) * eps * norm;  // don't chase below rounding

  // L^T + sigma*I is an invertible M-matrix, so iterates started positive
  // stay positive and collapse onto the null direction. Iterating past the
  // certified bound down to the rounding floor keeps the eigenvector clean
  // even when the spectral gap is small. The shift must survive the addition
  // onto diagonal entries of size ~norm, hence the epsilon term.
  const Scalar sigma = std::max(Scalar(1e-9), Scalar(100) * eps) * std::max(Scalar(1), norm);
  MatrixX<Scalar> shifted = L.transpose();
  shifted.diagonal().array() += sigma;
  const Eigen::PartialPivLU<MatrixX<Scalar>> lu(shifted);

  VectorX<Scalar> x = (start.size() == n) ? start : VectorX<Scalar>::Ones(n);
  x /= x.sum();

  VectorX<Scalar> best;
  Scalar best_residual = std::numeric_limits<Scalar>::infinity();
  Scalar previous = std::numeric_limits<Scalar>::infinity();
  constexpr int kMaxIterations = 200;
  for (int it = 0; it < kMaxIterations; ++it) {
    VectorX<Scalar> y = lu.solve(x);
    const Scalar total = y.sum();
    if (!(std::abs(total) > Scalar(0)) || !y.allFinite()) break;
    x = y / total;
    const Scalar residual = (x.transpose() * L).template lpNorm<Eigen::Infinity>();
    if (residual < best_residual && x.minCoeff() > Scalar(0)) {
      best = x;
      best_residual = residual;
    }
    if (residual <= floor) break;
    if (residual > Scalar(0.5) * previous) break;  // stalled at the attainable floor
    previous = residual;
  }

  if (best.size() != n || !(best_residual <= certified)) {
    throw Error(errc::no_convergence, "left null vector did not reach residual target");
  }
  SpectralCertificate<Scalar> cert;
  cert.mu = best;
  cert.residual = best_residual;
  cert.min_sym_eig = check_sym_psd(L, best);
  return cert;
}

}  // namespace cascade
