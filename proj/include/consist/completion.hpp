#pragma once

#include <cstddef>
#include <vector>

#include "consist/pcm.hpp"

namespace consist {

inline constexpr std::size_t kPathBudget = 100000;

/// All simple paths between two alternatives, self-loops excluded.
struct PathSet {
  std::size_t source = 0;
  std::size_t target = 0;
  std::vector<std::vector<std::size_t>> paths;
};

/// Depth-first enumeration; neighbours are visited in increasing index order,
/// so paths come out in lexicographic order. Throws PathBudgetError once more
/// than budget paths exist and std::invalid_argument if source == target.
PathSet enumerate_paths(const AdjacencyGraph& graph, std::size_t source, std::size_t target,
                        std::size_t budget = kPathBudget);

/// Harker completion: each missing W_ab (a < b) becomes the geometric mean of
/// the path products over every simple a->b path of known comparisons, and
/// W_ba its exact reciprocal. Path products use the antisymmetric edge log
/// (log W_xy - log W_yx) / 2, so rounded published tables give the same value
/// whichever direction the path is walked. Only original entries feed the
/// averages; known entries are returned untouched.
///
/// Throws DisconnectedError or PathBudgetError.
Pcm harker_fill(const Pcm& pcm, std::size_t budget = kPathBudget);

/// Preference scale for possibly incomplete matrices: the right Perron vector
/// of W divided entrywise by the right Perron vector of its adjacency matrix,
/// L1-normalized. Reduces to the ordinary eigenvector scale when complete.
Vector incomplete_preference_scale(const Pcm& pcm);

}  // namespace consist
