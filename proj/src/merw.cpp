#include "consist/merw.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace consist {

namespace {

using Index = Eigen::Index;

Matrix edge_observable(const Matrix& w) {
  const auto n = w.rows();
  Matrix j = Matrix::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      if (a != b && w(a, b) > 0.0) j(a, b) = 0.5 * (std::log(w(a, b)) - std::log(w(b, a)));
    }
  }
  return j;
}

// sigma_ab; 0 log 0 := 0.
double directed_term(const MerwModel& m, Index a, Index b) {
  const double kab = m.k(a, b);
  if (a == b || kab <= 0.0) return 0.0;
  return m.p(a) * kab * std::log(kab / m.k(b, a));
}

// Probability-current form x_ab log(x_ab / x_ba), x_ab = p_a k_ab. Differs
// from sigma_ab by p_a k_ab log(p_a / p_b), which cancels within each pair and
// in the total, and vanishes term by term under detailed balance.
double current_term(const MerwModel& m, Index a, Index b) {
  const double xab = m.p(a) * m.k(a, b);
  if (a == b || xab <= 0.0) return 0.0;
  return xab * std::log(xab / (m.p(b) * m.k(b, a)));
}

}  // namespace

MerwModel induce(const Pcm& pcm, double gamma, const PerronOptions& options) {
  if (!std::isfinite(gamma)) throw std::invalid_argument("gamma must be finite");
  const auto components = connected_components(adjacency_of(pcm));
  if (components.size() > 1) throw DisconnectedError(components);

  const Matrix wg = elementwise_pow(pcm, gamma);
  const SpectralPair sp = perron(wg, options);
  const auto n = wg.rows();

  MerwModel m;
  m.gamma = gamma;
  m.eta = sp.eta;
  m.nu = sp.nu;
  m.mu = sp.mu;
  m.p = sp.nu.cwiseProduct(sp.mu);
  m.k = Matrix::Zero(n, n);
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      if (wg(a, b) > 0.0) m.k(a, b) = sp.nu(b) * wg(a, b) / (sp.eta * sp.nu(a));
    }
    // Rows sum to 1 up to the eigen-residual; remove that drift.
    m.k.row(a) /= m.k.row(a).sum();
  }
  m.j = edge_observable(pcm.entries());
  m.flux = (m.p.asDiagonal() * m.k).cwiseProduct(m.j).sum();

  // Entropy-production sum grouped over unordered pairs with x_ab = p_a k_ab. The grouping
  // differs from sum p_a k_ab log(k_ab/k_ba) by sum x_ab log(p_a/p_b) = 0, and
  // each term (x_ab - x_ba) log(x_ab / x_ba) is nonnegative.
  double sdot = 0.0;
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      const double xab = m.p(a) * m.k(a, b);
      const double xba = m.p(b) * m.k(b, a);
      if (xab > 0.0 && xba > 0.0) sdot += (xab - xba) * std::log(xab / xba);
    }
  }
  // The gamma = 0 walk runs on the symmetric adjacency matrix: reversible exactly.
  m.sdot = gamma == 0.0 ? 0.0 : sdot;
  return m;
}

double entropy_production(const Pcm& pcm, double gamma) {
  const MerwModel m = induce(pcm, gamma);
  double directed = 0.0;
  for (const auto& e : edge_contributions(m)) directed += e.sigma;
  const double from_flux = 2.0 * gamma * m.flux;
  const double tol = 1e-10 * std::max(1.0, std::abs(m.sdot));
  if (std::abs(directed - m.sdot) > tol || std::abs(from_flux - m.sdot) > tol) {
    throw ConvergenceError("entropy production forms disagree: pairwise " + std::to_string(m.sdot) +
                           ", directed " + std::to_string(directed) + ", 2*gamma*flux " +
                           std::to_string(from_flux));
  }
  return m.sdot;
}

std::vector<EdgeContribution> edge_contributions(const MerwModel& model) {
  std::vector<EdgeContribution> out;
  const auto n = static_cast<Index>(model.size());
  for (Index a = 0; a < n; ++a) {
    for (Index b = 0; b < n; ++b) {
      if (a == b || model.k(a, b) <= 0.0) continue;
      out.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                     directed_term(model, a, b), model.j(a, b)});
    }
  }
  return out;
}

std::vector<Contribution> decompose(const MerwModel& model, Decomposition by) {
  const auto n = static_cast<Index>(model.size());
  std::vector<Contribution> out;
  if (by == Decomposition::alternative) {
    for (Index a = 0; a < n; ++a) {
      double total = 0.0;
      for (Index b = 0; b < n; ++b) total += current_term(model, a, b);
      out.push_back({static_cast<std::size_t>(a), std::nullopt, total});
    }
    return out;
  }
  for (Index a = 0; a < n; ++a) {
    for (Index b = a + 1; b < n; ++b) {
      if (model.k(a, b) <= 0.0) continue;
      out.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b),
                     directed_term(model, a, b) + directed_term(model, b, a)});
    }
  }
  return out;
}

double path_log_ratio(const MerwModel& model, std::span<const std::size_t> path) {
  const auto n = model.size();
  for (auto v : path) {
    if (v >= n) throw std::invalid_argument("path vertex " + std::to_string(v) + " out of range");
  }
  double forward = 0.0;
  double backward = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto a = static_cast<Index>(path[i]);
    const auto b = static_cast<Index>(path[i + 1]);
    if (model.k(a, b) <= 0.0) {
      throw std::invalid_argument("path step " + std::to_string(path[i]) + "->" +
                                  std::to_string(path[i + 1]) + " uses a missing comparison");
    }
    forward += std::log(model.k(a, b));
    backward += std::log(model.k(b, a));
  }
  return forward - backward;
}

std::vector<FluxPoint> flux_curve(const Pcm& pcm, std::span<const double> gammas) {
  std::vector<FluxPoint> out;
  out.reserve(gammas.size());
  for (double g : gammas) {
    const MerwModel m = induce(pcm, g);
    out.push_back({g, m.flux, m.sdot, m.eta});
  }
  return out;
}

}  // namespace consist
