#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "consist/pcm.hpp"
#include "consist/spectral.hpp"

namespace consist {

/// Maximum-path-entropy random walk induced by a comparison matrix at a given
/// gamma: k_ab = nu_b W_ab^gamma / (eta nu_a), stationary p_a = nu_a mu_a.
struct MerwModel {
  double gamma = 1.0;
  Matrix k;
  Vector p;
  double eta = 0.0;
  Vector nu;
  Vector mu;
  /// Antisymmetric edge observable (log W_ab - log W_ba) / 2 of the original
  /// matrix; equals log W_ab when the entries are exactly reciprocal. Zero
  /// off the comparison pattern and on the diagonal.
  Matrix j;
  /// Mean of j per step under the stationary walk.
  double flux = 0.0;
  /// Entropy-production rate, nats per step.
  double sdot = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(k.rows()); }
};

/// One directed term p_a k_ab log(k_ab / k_ba) of the entropy production.
struct EdgeContribution {
  std::size_t a = 0;
  std::size_t b = 0;
  double sigma = 0.0;
  double jflux = 0.0;
};

enum class Decomposition { comparison, alternative };

/// A per-comparison ({a,b}, a < b) or per-alternative (b empty) share of sdot.
struct Contribution {
  std::size_t a = 0;
  std::optional<std::size_t> b;
  double value = 0.0;
};

/// Throws DisconnectedError or ConvergenceError.
MerwModel induce(const Pcm& pcm, double gamma = 1.0, const PerronOptions& options = {});

/// sdot of the induced walk. The directed-sum and 2 gamma <j> forms are
/// evaluated independently and must agree to 1e-10 (relative above 1).
double entropy_production(const Pcm& pcm, double gamma = 1.0);

/// Directed terms for every off-diagonal edge, row-major order.
std::vector<EdgeContribution> edge_contributions(const MerwModel& model);

/// Comparison: sigma_ab + sigma_ba for every edge {a,b}, a < b.
/// Alternative: sum over out-edges of a of x_ab log(x_ab / x_ba) with
/// x_ab = p_a k_ab, which is zero term by term on consistent input (the raw
/// sigma_ab is not: under detailed balance it equals p_a k_ab log(p_b / p_a)).
/// Either list sums to sdot.
std::vector<Contribution> decompose(const MerwModel& model, Decomposition by);

/// log p(path | first) - log p(reversed path | last), computed from products
/// of transition probabilities. Throws std::invalid_argument if a step uses a
/// missing comparison or an index is out of range.
double path_log_ratio(const MerwModel& model, std::span<const std::size_t> path);

struct FluxPoint {
  double gamma = 0.0;
  double flux = 0.0;
  double sdot = 0.0;
  double eta = 0.0;
};

std::vector<FluxPoint> flux_curve(const Pcm& pcm, std::span<const double> gammas);

}  // namespace consist
