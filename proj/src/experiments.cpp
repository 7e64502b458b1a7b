#include "consist/experiments.hpp"

#include <algorithm>
#include <exception>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "consist/indices.hpp"
#include "consist/merw.hpp"
#include "consist/spectral.hpp"

namespace consist {

namespace {

using Index = Eigen::Index;
using Pattern = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), count / 16));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < count; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double sdot_of(const Pcm& pcm) { return induce(pcm, 1.0).sdot; }

std::string describe(const char* what, std::size_t sample, double lhs, double rhs) {
  std::ostringstream os;
  os.precision(17);
  os << "sample " << sample << ": " << what << " (" << lhs << " vs " << rhs << ")";
  return os.str();
}

// Pattern edge chosen uniformly.
std::pair<std::size_t, std::size_t> random_edge(const AdjacencyGraph& g, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      if (g.has_edge(a, b)) edges.emplace_back(a, b);
    }
  }
  return edges.at(rng.below(edges.size()));
}

// Edges lying on a cycle. Perturbing a bridge keeps a consistent matrix
// consistent, so single-entry checks must avoid bridges.
std::vector<std::pair<std::size_t, std::size_t>> cycle_edges(const AdjacencyGraph& g) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  auto adj = g.to_matrix().cast<std::uint8_t>().eval();
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      if (!g.has_edge(a, b)) continue;
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      adj(ia, ib) = adj(ib, ia) = 0;
      if (is_connected(AdjacencyGraph(adj))) out.emplace_back(a, b);
      adj(ia, ib) = adj(ib, ia) = 1;
    }
  }
  return out;
}

AdjacencyGraph pattern_for(PatternKind kind, std::size_t n, Rng& rng) {
  switch (kind) {
    case PatternKind::complete: return complete_pattern(n);
    case PatternKind::ring: return ring_pattern(n);
    case PatternKind::random_connected: return random_connected_pattern(n, 0.3, rng);
  }
  return complete_pattern(n);
}

AxiomResult identification(std::size_t samples, std::uint64_t seed) {
  AxiomResult r{1, "identification of consistent matrices", 0, {}};
  Rng rng(seed, 1);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t n = 3 + rng.below(5);
    const auto pattern = (i % 2 == 0) ? complete_pattern(n) : random_connected_pattern(n, 0.3, rng);
    const auto scale = random_scale(n, rng);
    const double consistent = sdot_of(consistent_pcm(scale, pattern));
    ++r.checks;
    if (!(consistent <= 1e-10)) r.witnesses.push_back(describe("consistent sdot above 1e-10", i, consistent, 1e-10));

    const Pcm noisy = random_pcm(5, rng.uniform(0.5, 4.0), rng);
    const double inconsistent = sdot_of(noisy);
    ++r.checks;
    if (!(inconsistent > 1e-6)) r.witnesses.push_back(describe("inconsistent sdot not above 1e-6", i, inconsistent, 1e-6));
  }
  return r;
}

AxiomResult permutation(std::size_t samples, std::uint64_t seed) {
  AxiomResult r{2, "invariance under relabeling", 0, {}};
  Rng rng(seed, 2);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t n = 3 + rng.below(5);
    const Pcm w = random_pcm(n, rng.uniform(0.0, 4.0), rng);
    const auto perm = random_permutation(n, rng);
    const double lhs = sdot_of(w);
    const double rhs = sdot_of(w.permuted(perm));
    ++r.checks;
    if (!(std::abs(lhs - rhs) <= 1e-10)) r.witnesses.push_back(describe("sdot(P W P^T) != sdot(W)", i, lhs, rhs));
  }
  return r;
}

AxiomResult power_monotonicity(std::size_t samples, std::uint64_t seed) {
  AxiomResult r{3, "monotone under entry-wise powers", 0, {}};
  Rng rng(seed, 3);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t n = 3 + rng.below(5);
    const Pcm w = random_pcm(n, rng.uniform(0.5, 3.0), rng);
    const double base = sdot_of(w);
    for (double g : {1.5, 2.0, 3.0}) {
      const double powered = sdot_of(power_pcm(w, g));
      ++r.checks;
      if (!(powered > base)) {
        r.witnesses.push_back(describe(("sdot(W^" + std::to_string(g) + ") <= sdot(W)").c_str(), i, powered, base));
      }
    }
  }
  return r;
}

AxiomResult single_entry(std::size_t samples, std::uint64_t seed) {
  AxiomResult r{4, "monotone under single-entry powers", 0, {}};
  Rng rng(seed, 4);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t n = 3 + rng.below(5);
    auto pattern = complete_pattern(n);
    auto candidates = cycle_edges(pattern);
    while (i % 2 == 1) {
      pattern = random_connected_pattern(n, 0.4, rng);
      candidates = cycle_edges(pattern);
      if (!candidates.empty()) break;
    }
    // Entries near 1 barely move under powers; keep |log W_ab| >= 0.1.
    std::vector<double> scale;
    std::pair<std::size_t, std::size_t> edge;
    do {
      scale = random_scale(n, rng);
      edge = candidates.at(rng.below(candidates.size()));
    } while (std::abs(std::log(scale[edge.first] / scale[edge.second])) < 0.1);
    const Pcm w = consistent_pcm(scale, pattern);
    const auto [a, b] = edge;

    for (const auto& chain : {std::vector<double>{1.0, 1.2, 1.5, 2.0}, std::vector<double>{1.0, 0.8, 0.6, 0.4}}) {
      double previous = -1.0;
      for (double d : chain) {
        const double s = sdot_of(power_entry(w, a, b, d));
        if (previous >= 0.0) {
          ++r.checks;
          if (!(s > previous)) {
            r.witnesses.push_back(describe(("single-entry power " + std::to_string(d) + " not above previous").c_str(), i, s, previous));
          }
        }
        previous = s;
      }
    }

    // Underpinning: an unrelated consistent matrix on the same pattern,
    // perturbed at the same entry, induces the same walk.
    const Pcm q = consistent_pcm(random_scale(n, rng), pattern);
    const double alpha = rng.uniform(0.2, 5.0);
    const Matrix kw = induce(scale_entry(w, a, b, alpha), 1.0).k;
    const Matrix kq = induce(scale_entry(q, a, b, alpha), 1.0).k;
    const double dev = (kw - kq).cwiseAbs().maxCoeff();
    ++r.checks;
    if (!(dev <= 1e-9)) r.witnesses.push_back(describe("paired walks differ", i, dev, 1e-9));
  }
  return r;
}

AxiomResult continuity(std::size_t samples, std::uint64_t seed) {
  AxiomResult r{5, "continuity in the entries", 0, {}};
  Rng rng(seed, 5);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t n = 3 + rng.below(5);
    const Pcm w = random_pcm(n, rng.uniform(0.0, 3.0), rng);
    const std::size_t a = rng.below(n);
    std::size_t b = rng.below(n - 1);
    if (b >= a) ++b;
    const double base = sdot_of(w);
    auto delta = [&](double eps) { return std::abs(sdot_of(scale_entry(w, a, b, 1.0 + eps)) - base); };
    const double c = 2.0 * delta(1e-6) / 1e-6 + 1.0;
    for (double eps : {1e-8, 1e-7, 1e-5, 1e-4, 1e-3}) {
      const double d = delta(eps);
      ++r.checks;
      if (!(d <= c * eps)) {
        r.witnesses.push_back(describe(("|delta sdot| above C*eps at eps=" + std::to_string(eps)).c_str(), i, d, c * eps));
      }
    }
  }
  return r;
}

AxiomResult transpose(std::size_t samples, std::uint64_t seed) {
  AxiomResult r{6, "invariance under transposition", 0, {}};
  Rng rng(seed, 6);
  for (std::size_t i = 0; i < samples; ++i) {
    const std::size_t n = 3 + rng.below(5);
    const Pcm w = random_pcm(n, rng.uniform(0.0, 4.0), rng);
    const double lhs = sdot_of(w);
    const double rhs = sdot_of(w.transposed());
    ++r.checks;
    if (!(std::abs(lhs - rhs) <= 1e-10)) r.witnesses.push_back(describe("sdot(W^T) != sdot(W)", i, lhs, rhs));
  }
  return r;
}

}  // namespace

std::vector<double> random_scale(std::size_t n, Rng& rng) {
  std::vector<double> f(n);
  for (auto& x : f) {
    do {
      x = rng.uniform();
    } while (x < 1e-6);
  }
  return f;
}

Pcm random_pcm(std::size_t n, double alpha, Rng& rng) {
  const auto f = random_scale(n, rng);
  Matrix w = Matrix::Ones(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t a = 1; a < n; ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      const double v = f[a] / f[b] * std::exp(rng.normal() * alpha);
      w(static_cast<Index>(a), static_cast<Index>(b)) = v;
      w(static_cast<Index>(b), static_cast<Index>(a)) = 1.0 / v;
    }
  }
  return Pcm(std::move(w), {}, Reciprocity::strict);
}

std::vector<GeneratedPcm> generate_random_pcm(const GeneratorSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("generator needs n >= 2");
  if (spec.count < 1) throw std::invalid_argument("generator needs count >= 1");
  if (!(spec.alpha_min >= 0.0) || !(spec.alpha_max >= spec.alpha_min) || !std::isfinite(spec.alpha_max)) {
    throw std::invalid_argument("alpha range must be a finite interval within [0, inf)");
  }
  std::vector<GeneratedPcm> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    Rng rng(spec.seed, i);
    const double alpha = rng.uniform(spec.alpha_min, spec.alpha_max);
    out.push_back({random_pcm(spec.n, alpha, rng), alpha});
  }
  return out;
}

AdjacencyGraph complete_pattern(std::size_t n) {
  return AdjacencyGraph(Pattern::Ones(static_cast<Index>(n), static_cast<Index>(n)));
}

AdjacencyGraph ring_pattern(std::size_t n) {
  Pattern adj = Pattern::Identity(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    const auto b = static_cast<Index>((a + 1) % n);
    adj(static_cast<Index>(a), b) = 1;
    adj(b, static_cast<Index>(a)) = 1;
  }
  return AdjacencyGraph(std::move(adj));
}

AdjacencyGraph random_connected_pattern(std::size_t n, double extra, Rng& rng) {
  Pattern adj = Pattern::Identity(static_cast<Index>(n), static_cast<Index>(n));
  const auto order = random_permutation(n, rng);
  for (std::size_t i = 1; i < n; ++i) {
    const auto a = static_cast<Index>(order[i]);
    const auto b = static_cast<Index>(order[rng.below(i)]);
    adj(a, b) = adj(b, a) = 1;
  }
  for (Index a = 0; a < static_cast<Index>(n); ++a) {
    for (Index b = a + 1; b < static_cast<Index>(n); ++b) {
      if (adj(a, b) == 0 && rng.uniform() < extra) adj(a, b) = adj(b, a) = 1;
    }
  }
  return AdjacencyGraph(std::move(adj));
}

Pcm consistent_pcm(std::span<const double> scale, const AdjacencyGraph& pattern) {
  const auto n = pattern.size();
  if (scale.size() != n) throw std::invalid_argument("scale length differs from pattern size");
  Matrix w = Matrix::Zero(static_cast<Index>(n), static_cast<Index>(n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (pattern.has_edge(a, b)) w(static_cast<Index>(a), static_cast<Index>(b)) = a == b ? 1.0 : scale[a] / scale[b];
    }
  }
  return Pcm(std::move(w), {}, Reciprocity::strict);
}

Pcm scale_entry(const Pcm& pcm, std::size_t a, std::size_t b, double factor) {
  Matrix w = pcm.entries();
  w(static_cast<Index>(a), static_cast<Index>(b)) *= factor;
  w(static_cast<Index>(b), static_cast<Index>(a)) /= factor;
  return Pcm(std::move(w), pcm.labels(), Reciprocity::lenient);
}

Pcm power_entry(const Pcm& pcm, std::size_t a, std::size_t b, double delta) {
  Matrix w = pcm.entries();
  w(static_cast<Index>(a), static_cast<Index>(b)) = std::pow(pcm(a, b), delta);
  w(static_cast<Index>(b), static_cast<Index>(a)) = std::pow(pcm(b, a), delta);
  return Pcm(std::move(w), pcm.labels(), Reciprocity::lenient);
}

Pcm power_pcm(const Pcm& pcm, double gamma) {
  return Pcm(elementwise_pow(pcm, gamma), pcm.labels(), Reciprocity::lenient);
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  return perm;
}

double pearson_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson_r2 needs two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw std::domain_error("degenerate variance: correlation undefined");
  return std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
}

StudyResult correlation_study(const GeneratorSpec& spec, double gamma) {
  const auto matrices = generate_random_pcm(spec);
  StudyResult result;
  result.rows.resize(matrices.size());
  parallel_for(matrices.size(), [&](std::size_t i) {
    const auto& m = matrices[i];
    result.rows[i] = {m.alpha, induce(m.pcm, gamma).sdot, saaty_ci(m.pcm), hci(m.pcm)};
  });
  std::vector<double> s, ci, h;
  for (const auto& row : result.rows) {
    s.push_back(row.sdot);
    ci.push_back(row.ci);
    h.push_back(row.hci);
  }
  // Rounding noise on consistent matrices is not variance worth correlating.
  if (std::all_of(s.begin(), s.end(), [](double v) { return v <= 1e-10; })) {
    throw std::domain_error("degenerate ensemble: every matrix is consistent");
  }
  result.r2_ci = pearson_r2(s, ci);
  result.r2_hci = pearson_r2(s, h);
  return result;
}

std::string study_csv(const StudyResult& result) {
  std::ostringstream os;
  os.precision(17);
  os << "alpha,sdot,ci,hci\n";
  for (const auto& r : result.rows) os << r.alpha << ',' << r.sdot << ',' << r.ci << ',' << r.hci << '\n';
  return os.str();
}

nlohmann::json study_summary(const StudyResult& result, const GeneratorSpec& spec, double gamma) {
  return {{"n", spec.n},
          {"count", spec.count},
          {"alphaRange", {spec.alpha_min, spec.alpha_max}},
          {"seed", spec.seed},
          {"gamma", gamma},
          {"rng", "mt19937_64 seeded via splitmix64(seed, matrix index)"},
          {"r2_ci", result.r2_ci},
          {"r2_hci", result.r2_hci}};
}

nlohmann::json study_scatter(const StudyResult& result) {
  auto values = nlohmann::json::array();
  for (const auto& r : result.rows) {
    values.push_back({{"alpha", r.alpha}, {"sdot", r.sdot}, {"ci", r.ci}, {"hci", r.hci}});
  }
  return {{"$schema", "https://vega.github.io/schema/vega-lite/v5.json"},
          {"data", {{"values", std::move(values)}}},
          {"repeat", {"ci", "hci"}},
          {"spec",
           {{"mark", "point"},
            {"encoding",
             {{"x", {{"field", {{"repeat", "repeat"}}}, {"type", "quantitative"}}},
              {"y", {{"field", "sdot"}, {"type", "quantitative"}}}}}}}};
}

std::vector<AxiomResult> axiom_suite(std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("axiom suite needs at least one sample");
  using Check = AxiomResult (*)(std::size_t, std::uint64_t);
  constexpr Check checks[] = {identification, permutation, power_monotonicity,
                              single_entry,   continuity,  transpose};
  std::vector<AxiomResult> out(std::size(checks));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < std::size(checks); ++i) {
      pool.emplace_back([&, i] {
        try {
          out[i] = checks[i](samples, seed);
        } catch (const std::exception& e) {
          out[i] = {static_cast<int>(i) + 1, "aborted", 1, {e.what()}};
        }
      });
    }
  }
  return out;
}

double conjecture_check(const ConjectureSpec& spec) {
  Rng rng(spec.seed, 7);
  double worst = 0.0;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const auto pattern = pattern_for(spec.pattern, spec.n, rng);
    const Pcm w = consistent_pcm(random_scale(spec.n, rng), pattern);
    const Pcm q = consistent_pcm(random_scale(spec.n, rng), pattern);
    const auto [a, b] = random_edge(pattern, rng);
    const Matrix kw = induce(scale_entry(w, a, b, spec.alpha), 1.0).k;
    const Matrix kq = induce(scale_entry(q, a, b, spec.alpha), 1.0).k;
    worst = std::max(worst, (kw - kq).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace consist
