#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "consist/pcm.hpp"
#include "consist/random.hpp"
#include "json.hpp"

namespace consist {

struct GeneratorSpec {
  std::size_t n = 5;
  double alpha_min = 0.0;
  double alpha_max = 4.0;
  std::uint64_t seed = 0;
  std::size_t count = 500;
};

struct GeneratedPcm {
  Pcm pcm;
  double alpha = 0.0;
};

/// Random complete matrices W_ab = (f_a / f_b) exp(rho_ab alpha) for a > b,
/// upper triangle the exact reciprocals. Per matrix i, drawn from stream i of
/// the seed: alpha ~ U[alpha_min, alpha_max], then f ~ U[0, 1) (entries below
/// 1e-6 are redrawn), then rho ~ N(0, 1) row by row over the lower triangle.
/// Throws std::invalid_argument on an invalid spec.
std::vector<GeneratedPcm> generate_random_pcm(const GeneratorSpec& spec);

/// One matrix of the same family, drawn from rng.
Pcm random_pcm(std::size_t n, double alpha, Rng& rng);

/// Positive scale with entries in [1e-6, 1).
std::vector<double> random_scale(std::size_t n, Rng& rng);

AdjacencyGraph complete_pattern(std::size_t n);
AdjacencyGraph ring_pattern(std::size_t n);
/// Random spanning tree plus each remaining pair with probability extra.
AdjacencyGraph random_connected_pattern(std::size_t n, double extra, Rng& rng);

/// W_ab = f_a / f_b on the pattern's edges, 0 elsewhere.
Pcm consistent_pcm(std::span<const double> scale, const AdjacencyGraph& pattern);

/// W_ab -> factor W_ab and W_ba -> W_ba / factor.
Pcm scale_entry(const Pcm& pcm, std::size_t a, std::size_t b, double factor);
/// W_ab -> W_ab^delta and W_ba -> W_ba^delta.
Pcm power_entry(const Pcm& pcm, std::size_t a, std::size_t b, double delta);
/// Entry-wise power of the whole matrix as a comparison matrix.
Pcm power_pcm(const Pcm& pcm, double gamma);

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

struct StudyRow {
  double alpha = 0.0;
  double sdot = 0.0;
  double ci = 0.0;
  double hci = 0.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  double r2_ci = 0.0;
  double r2_hci = 0.0;
};

/// Squared Pearson correlation. Throws std::domain_error on zero variance.
double pearson_r2(std::span<const double> x, std::span<const double> y);

/// sdot, CI and HCI for every generated matrix, plus r^2 of sdot against
/// each classical index. Matrices are evaluated in parallel; results are
/// stored by index so the outcome does not depend on scheduling. Throws
/// std::domain_error when every matrix is consistent (all sdot <= 1e-10).
StudyResult correlation_study(const GeneratorSpec& spec, double gamma = 1.0);

/// "alpha,sdot,ci,hci" rows.
std::string study_csv(const StudyResult& result);
nlohmann::json study_summary(const StudyResult& result, const GeneratorSpec& spec, double gamma);
/// Vega-Lite scatter spec with the rows inlined as data values.
nlohmann::json study_scatter(const StudyResult& result);

struct AxiomResult {
  int requirement = 0;
  std::string name;
  std::size_t checks = 0;
  std::vector<std::string> witnesses;

  bool passed() const { return checks > 0 && witnesses.empty(); }
};

/// Numerical check of the six requirements for a reasonable inconsistency
/// index, applied to sdot at gamma = 1 over random instances:
///   1 sdot <= 1e-10 on consistent input, > 1e-6 on alpha >= 0.5 input
///   2 invariance under relabeling (1e-10)
///   3 sdot(W^g) > sdot(W) for g in {1.5, 2, 3}
///   4 single-entry powers W_ab^d strictly ordered for d in 1.2 < 1.5 < 2 and
///     0.8 > 0.6 > 0.4, plus the identical-walk property on paired consistent
///     matrices (max |k_W - k_Q| <= 1e-9)
///   5 |delta sdot| <= C eps for eps from 1e-8 to 1e-3, C = 2 |delta(1e-6)| / 1e-6 + 1
///   6 sdot(W) = sdot(W^T) (1e-10)
/// Each failure is recorded as a witness string.
std::vector<AxiomResult> axiom_suite(std::size_t samples, std::uint64_t seed);

enum class PatternKind { complete, ring, random_connected };

struct ConjectureSpec {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t n = 4;
  PatternKind pattern = PatternKind::complete;
  double alpha = 3.0;
};

/// Two consistent matrices with a shared pattern and unrelated scales get the
/// same entry scaled by alpha; returns the largest entrywise difference
/// between the transition matrices of their induced walks over all trials.
double conjecture_check(const ConjectureSpec& spec);

}  // namespace consist
