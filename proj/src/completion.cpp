#include "consist/completion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "consist/spectral.hpp"

namespace consist {

namespace {

class PathWalker {
 public:
  PathWalker(const AdjacencyGraph& graph, std::size_t target, std::size_t budget, PathSet& out)
      : target_(target), budget_(budget), out_(out), on_path_(graph.size(), false) {
    for (std::size_t a = 0; a < graph.size(); ++a) adjacency_.push_back(graph.neighbors(a));
  }

  void walk(std::size_t v) {
    path_.push_back(v);
    on_path_[v] = true;
    if (v == target_) {
      if (out_.paths.size() == budget_) {
        throw PathBudgetError("more than " + std::to_string(budget_) + " simple paths between " +
                              std::to_string(out_.source) + " and " + std::to_string(target_));
      }
      out_.paths.push_back(path_);
    } else {
      for (auto u : adjacency_[v]) {
        if (!on_path_[u]) walk(u);
      }
    }
    on_path_[v] = false;
    path_.pop_back();
  }

 private:
  std::size_t target_;
  std::size_t budget_;
  PathSet& out_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<bool> on_path_;
  std::vector<std::size_t> path_;
};

}  // namespace

PathSet enumerate_paths(const AdjacencyGraph& graph, std::size_t source, std::size_t target,
                        std::size_t budget) {
  if (source >= graph.size() || target >= graph.size()) {
    throw std::invalid_argument("path endpoint out of range");
  }
  if (source == target) throw std::invalid_argument("path endpoints must differ");
  PathSet out{source, target, {}};
  PathWalker(graph, target, budget, out).walk(source);
  return out;
}

Pcm harker_fill(const Pcm& pcm, std::size_t budget) {
  const auto graph = adjacency_of(pcm);
  const auto components = connected_components(graph);
  if (components.size() > 1) throw DisconnectedError(components);

  const auto n = pcm.size();
  auto edge_log = [&](std::size_t x, std::size_t y) {
    return 0.5 * (std::log(pcm(x, y)) - std::log(pcm(y, x)));
  };

  Matrix filled = pcm.entries();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (pcm.has(a, b)) continue;
      const PathSet set = enumerate_paths(graph, a, b, budget);
      double total = 0.0;
      for (const auto& path : set.paths) {
        for (std::size_t i = 0; i + 1 < path.size(); ++i) total += edge_log(path[i], path[i + 1]);
      }
      const double mean = total / static_cast<double>(set.paths.size());
      const double value = std::exp(mean);
      filled(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = value;
      filled(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = 1.0 / value;
    }
  }
  return Pcm(std::move(filled), pcm.labels(), Reciprocity::lenient);
}

Vector incomplete_preference_scale(const Pcm& pcm) {
  const Vector g = perron(pcm.entries()).nu;
  const Vector nu = perron(adjacency_of(pcm).to_matrix()).nu;
  Vector f = g.cwiseQuotient(nu);
  return f / f.sum();
}

}  // namespace consist
