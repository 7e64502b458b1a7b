#pragma once

#include <optional>
#include <string>
#include <vector>

#include "consist/merw.hpp"
#include "consist/pcm.hpp"
#include "json.hpp"

namespace consist {

/// Saaty's consistency index (eta - n) / (n - 1) of the raw matrix.
/// Throws IncompleteMatrixError when a comparison is missing.
double saaty_ci(const Pcm& pcm);

/// Harmonic consistency index. t_a is the a-th column sum, HM = n / sum 1/t_a,
/// HCI = (HM - n)(n + 1) / (n (n - 1)). For a rank-1 matrix f_a / f_b the
/// column sums are t_b = F / f_b with F = sum f, so sum 1/t = 1 and HCI = 0.
double hci(const Pcm& pcm);

struct InconsistencyReport {
  double gamma = 1.0;
  double sdot = 0.0;
  std::optional<double> ci;
  std::optional<double> hci;
  /// Comparison contributions in (a, b) order with a < b.
  std::vector<Contribution> per_comparison;
  std::vector<double> per_alternative;
  /// L1-normalized preference scale, adjacency-corrected for incomplete input.
  std::vector<double> scale;
  bool complete = false;
  std::vector<std::string> labels;
};

InconsistencyReport report(const Pcm& pcm, double gamma = 1.0);

/// Comparisons sorted by descending contribution (stable on ties), keeping at
/// most k entries whose value exceeds threshold.
std::vector<Contribution> top_comparisons(const InconsistencyReport& report, std::size_t k,
                                          double threshold = 1e-9);

nlohmann::json to_json(const InconsistencyReport& report);

}  // namespace consist
