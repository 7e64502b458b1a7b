#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "consist/errors.hpp"

namespace consist {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// How strictly W_ab * W_ba = 1 is enforced on positive pairs.
///
/// Published matrices are usually rounded to two decimals (1/0.76 prints as
/// 1.32), so the default accepts |W_ab W_ba - 1| <= 0.05.
enum class Reciprocity { lenient, strict };

inline constexpr double kLenientReciprocityTolerance = 0.05;
inline constexpr double kStrictReciprocityTolerance = 1e-12;

double reciprocity_tolerance(Reciprocity mode);

enum class PcmFormat { csv, json };

/// Pairwise comparison matrix. Zero entries mark missing comparisons.
///
/// Construction validates every entry invariant (unit diagonal, symmetric
/// missingness, reciprocity) but not connectivity: a session may legitimately
/// hold a matrix whose comparison graph is still in pieces. Entries are kept
/// exactly as given and never symmetrized.
class Pcm {
 public:
  explicit Pcm(Matrix entries, std::vector<std::string> labels = {},
               Reciprocity mode = Reciprocity::lenient);

  std::size_t size() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  const Matrix& entries() const noexcept { return entries_; }
  double operator()(std::size_t a, std::size_t b) const {
    return entries_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  }
  bool has(std::size_t a, std::size_t b) const { return (*this)(a, b) > 0.0; }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t a) const { return labels_.at(a); }
  std::optional<std::size_t> index_of(std::string_view label) const;

  /// True when every off-diagonal comparison is present.
  bool is_complete() const;

  Pcm transposed() const;
  /// Relabels: result(perm[a], perm[b]) = this(a, b).
  Pcm permuted(const std::vector<std::size_t>& perm) const;

 private:
  Matrix entries_;
  std::vector<std::string> labels_;
};

std::vector<std::string> default_labels(std::size_t n);

/// 0/1 comparison pattern, self-loops included on the diagonal.
class AdjacencyGraph {
 public:
  explicit AdjacencyGraph(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> adj);

  std::size_t size() const noexcept { return static_cast<std::size_t>(adj_.rows()); }
  bool has_edge(std::size_t a, std::size_t b) const {
    return adj_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) != 0;
  }
  /// Off-diagonal neighbours in increasing order.
  std::vector<std::size_t> neighbors(std::size_t a) const;
  /// Number of undirected off-diagonal edges.
  std::size_t edge_count() const;
  Matrix to_matrix() const;

 private:
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> adj_;
};

AdjacencyGraph adjacency_of(const Pcm& pcm);
AdjacencyGraph adjacency_of(const Matrix& entries);

/// Components of the undirected off-diagonal graph, each sorted, ordered by
/// smallest member.
std::vector<std::vector<std::size_t>> connected_components(const AdjacencyGraph& graph);
bool is_connected(const AdjacencyGraph& graph);

/// Checks entry invariants and connectivity without throwing. Labels are
/// checked only when non-empty.
std::vector<Violation> validate(const Matrix& entries, Reciprocity mode = Reciprocity::lenient,
                                const std::vector<std::string>& labels = {});
std::vector<Violation> validate(const Pcm& pcm, Reciprocity mode = Reciprocity::lenient);

Pcm parse_pcm(std::string_view text, PcmFormat format,
              Reciprocity mode = Reciprocity::lenient);
std::string serialize_pcm(const Pcm& pcm, PcmFormat format);

/// ".json" selects JSON; everything else is CSV.
PcmFormat format_for_path(const std::filesystem::path& path);
Pcm read_pcm_file(const std::filesystem::path& path, std::optional<PcmFormat> format = {},
                  Reciprocity mode = Reciprocity::lenient);

}  // namespace consist
