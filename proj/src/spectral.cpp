#include "consist/spectral.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

namespace consist {

namespace {

double relative_residual(const Matrix& m, const Vector& x, double eta) {
  return (m * x - eta * x).lpNorm<Eigen::Infinity>() / eta;
}

// Shifted inverse iteration towards the Perron root. For a positive vector x
// the Collatz-Wielandt bounds min (Mx)_i/x_i <= rho <= max (Mx)_i/x_i hold, so
// shifting just above the upper bound keeps rho the eigenvalue nearest the
// shift: every other eigenvalue has real part below rho.
//
// Each step works on diag(x)^-1 M diag(x), whose row sums are close to rho.
// Without this balancing a reciprocal matrix with huge entries has a row-sum
// norm far above rho and the solve loses several digits.
Vector refine(const Matrix& m, Vector x) {
  const auto n = m.rows();
  const Matrix identity = Matrix::Identity(n, n);
  auto spread = [&](const Vector& v) {
    const Vector ratio = (m * v).cwiseQuotient(v);
    return std::pair{ratio.maxCoeff(), ratio.minCoeff()};
  };
  Vector best = x;
  auto [upper, lower] = spread(x);
  double best_gap = (upper - lower) / upper;
  int stale = 0;
  for (int step = 0; step < 100 && stale < 3; ++step) {
    if (upper - lower <= 4.0 * std::numeric_limits<double>::epsilon() * upper) break;
    const double shift = upper + (upper - lower) + 1e-12 * upper;
    const Matrix balanced = x.cwiseInverse().asDiagonal() * m * x.asDiagonal();
    Vector y = x.cwiseProduct((balanced - shift * identity).partialPivLu().solve(Vector::Ones(n)));
    y /= y.sum();
    if (!y.allFinite() || (y.array() <= 0.0).any()) break;
    x = std::move(y);
    std::tie(upper, lower) = spread(x);
    const double gap = (upper - lower) / upper;
    if (gap < best_gap) {
      best_gap = gap;
      best = x;
      stale = 0;
    } else if (best_gap < 1e-8) {
      // Rounding floor reached; far from it the gap need not shrink monotonically.
      ++stale;
    }
  }
  return best;
}

}  // namespace

SpectralPair perron(const Matrix& matrix, const PerronOptions& options) {
  if (matrix.rows() != matrix.cols() || matrix.rows() == 0) {
    throw std::invalid_argument("perron: matrix must be square and non-empty");
  }
  if (!matrix.allFinite() || (matrix.array() < 0.0).any()) {
    throw std::invalid_argument("perron: matrix must be finite and nonnegative");
  }
  if ((matrix.diagonal().array() <= 0.0).any()) {
    throw std::invalid_argument("perron: diagonal must be strictly positive");
  }
  const auto components = connected_components(adjacency_of(matrix));
  if (components.size() > 1) throw DisconnectedError(components);

  const auto n = matrix.rows();
  const Matrix transposed = matrix.transpose();
  Vector nu = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector mu = nu;

  // Power phase. A slowly mixing matrix (|lambda_2| close to rho) hands over
  // to the refinement below after a bounded number of sweeps.
  double previous = 0.0;
  std::size_t it = 0;
  const std::size_t sweeps = std::min(options.max_iterations, options.power_sweeps);
  for (; it < sweeps; ++it) {
    const Vector right = matrix * nu;
    const Vector left = transposed * mu;
    const double eta = mu.dot(right) / mu.dot(nu);
    const double residual =
        std::max((right - eta * nu).lpNorm<Eigen::Infinity>(),
                 (left - eta * mu).lpNorm<Eigen::Infinity>()) / eta;
    if (std::abs(eta - previous) < options.eigenvalue_tolerance * eta &&
        residual <= options.residual_tolerance) {
      break;
    }
    previous = eta;
    nu = right / right.sum();
    mu = left / left.sum();
  }

  SpectralPair out;
  out.iterations = it;
  out.nu = refine(matrix, nu);
  out.mu = refine(transposed, mu);
  out.eta = out.mu.dot(matrix * out.nu) / out.mu.dot(out.nu);
  out.nu /= out.nu.sum();
  out.mu /= out.mu.dot(out.nu);

  const double residual = std::max(relative_residual(matrix, out.nu, out.eta),
                                   relative_residual(transposed, out.mu / out.mu.sum(), out.eta));
  if (!std::isfinite(out.eta) || residual > options.residual_tolerance) {
    std::ostringstream msg;
    msg << "Perron eigenpair did not converge (relative residual " << residual << ", n = " << n
        << ", eta = " << out.eta << ", min nu = " << out.nu.minCoeff() << ", min mu = " << out.mu.minCoeff() << ")";
    throw ConvergenceError(msg.str());
  }
  return out;
}

Matrix elementwise_pow(const Matrix& entries, double gamma) {
  Matrix out(entries.rows(), entries.cols());
  for (Eigen::Index c = 0; c < entries.cols(); ++c) {
    for (Eigen::Index r = 0; r < entries.rows(); ++r) {
      const double v = entries(r, c);
      if (v > 0.0) {
        out(r, c) = gamma == 1.0 ? v : (gamma == 0.0 ? 1.0 : std::pow(v, gamma));
      } else {
        out(r, c) = 0.0;
      }
    }
  }
  return out;
}

Matrix elementwise_pow(const Pcm& pcm, double gamma) { return elementwise_pow(pcm.entries(), gamma); }

}  // namespace consist
