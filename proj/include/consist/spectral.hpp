#pragma once

#include <cstddef>

#include "consist/pcm.hpp"

namespace consist {

/// Perron-Frobenius eigenvalue with its right and left eigenvectors.
///
/// nu is L1-normalized; mu is then scaled so that mu . nu = 1, which makes
/// nu (*) mu a probability distribution.
struct SpectralPair {
  double eta = 0.0;
  Vector nu;
  Vector mu;
  std::size_t iterations = 0;
};

struct PerronOptions {
  /// Relative change of successive eigenvalue estimates.
  double eigenvalue_tolerance = 1e-12;
  /// ||M nu - eta nu||_inf / eta with nu L1-normalized; same for mu on M^T.
  double residual_tolerance = 1e-10;
  std::size_t max_iterations = 100000;
  /// Power sweeps before handing over to shifted inverse iteration.
  std::size_t power_sweeps = 1000;
};

/// Dominant eigenpair of a nonnegative matrix whose positivity pattern is
/// connected and whose diagonal is strictly positive (hence primitive).
///
/// Runs power iteration on M and M^T together from a uniform start, with the
/// two-sided Rayleigh quotient mu^T M nu / mu^T nu as eigenvalue estimate,
/// until both tolerances are met. Both vectors are then polished to machine
/// precision by inverse iteration shifted just above the Collatz-Wielandt
/// upper bound, which also rescues matrices whose power iteration mixes too
/// slowly. Deterministic: the same input gives bit-identical output.
///
/// Throws DisconnectedError, ConvergenceError, or std::invalid_argument for a
/// matrix that is not square, has negative entries, or a non-positive diagonal.
SpectralPair perron(const Matrix& matrix, const PerronOptions& options = {});

/// Entry-wise power. Zero entries stay zero for every gamma, so missing
/// comparisons stay missing across the whole gamma family.
Matrix elementwise_pow(const Matrix& entries, double gamma);
Matrix elementwise_pow(const Pcm& pcm, double gamma);

}  // namespace consist
