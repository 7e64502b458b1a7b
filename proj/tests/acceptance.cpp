// Acceptance runner. `consist_acceptance [criterion...]` prints one PASS/FAIL
// line per criterion and exits nonzero if any fails; no arguments runs all.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "consist/cli.hpp"
#include "consist/completion.hpp"
#include "consist/experiments.hpp"
#include "consist/indices.hpp"
#include "consist/merw.hpp"
#include "oracles.hpp"

using namespace consist;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::filesystem::path kTennisCsv = std::filesystem::path(CONSIST_TEST_DATA) / "tennis.csv";

double max_dev(const Vector& v, const std::vector<double>& ref) {
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(v(static_cast<Eigen::Index>(i)) - ref[i]));
  return worst;
}

// Complete or sparse, always with at least one cycle: on a tree every matrix
// is consistent and the flux vanishes identically.
Pcm random_model_input(Rng& rng) {
  const std::size_t n = 3 + rng.below(5);
  const bool sparse = rng.uniform() < 0.4;
  auto pattern = complete_pattern(n);
  if (sparse) {
    do {
      pattern = random_connected_pattern(n, 0.3, rng);
    } while (pattern.edge_count() < n);
  }
  return Pcm(pattern.to_matrix().cwiseProduct(random_pcm(n, rng.uniform(0.2, 2.0), rng).entries()));
}

Outcome tennis_scales() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const Pcm w = read_pcm_file(kTennisCsv);
  Vector nu = perron(adjacency_of(w).to_matrix()).nu;
  Vector g = perron(w.entries()).nu;
  nu /= nu.sum();
  g /= g.sum();
  const Vector f = incomplete_preference_scale(w);
  const double elapsed = seconds_since(t0);
  o.require(max_dev(nu, published::nu) <= 0.002, "max|nu - table| = " + fmt("%.4f", max_dev(nu, published::nu)));
  o.require(max_dev(g, published::g) <= 0.002, "max|g - table| = " + fmt("%.4f", max_dev(g, published::g)));
  o.require(max_dev(f, published::f) <= 0.002, "max|f - table| = " + fmt("%.4f", max_dev(f, published::f)));
  o.require(elapsed < 1.0, "compute " + fmt("%.4f", elapsed) + " s < 1 s");
  return o;
}

Outcome harker_fill_table() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream out, err;
  const std::vector<std::string> args{"fill", kTennisCsv.string()};
  const int code = cli::run(args, out, err);
  const double elapsed = seconds_since(t0);
  o.require(code == 0, "fill exit " + std::to_string(code));
  if (code != 0) return o;
  const Pcm filled = parse_pcm(out.str(), PcmFormat::csv);
  const Pcm known = read_pcm_file(kTennisCsv);
  double worst = 0.0, recip = 0.0;
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) {
      worst = std::max(worst, std::abs(filled(a, b) - published::tennis_filled()(static_cast<Eigen::Index>(a),
                                                                             static_cast<Eigen::Index>(b))));
      if (!known.has(a, b)) recip = std::max(recip, std::abs(filled(a, b) * filled(b, a) - 1.0));
    }
  }
  o.require(filled.is_complete(), "complete");
  o.require(worst <= 0.01, "max|fill - table| = " + fmt("%.4f", worst));
  o.require(recip <= 1e-12, "filled-pair |W_ab W_ba - 1| = " + fmt("%.1e", recip));
  o.require(elapsed < 1.0, "compute " + fmt("%.4f", elapsed) + " s < 1 s");
  return o;
}

Outcome scale_agreement() {
  Outcome o;
  const Pcm w = read_pcm_file(kTennisCsv);
  Vector fh = perron(harker_fill(w).entries()).nu;
  fh /= fh.sum();
  const Vector f = incomplete_preference_scale(w);
  const double r2 = pearson_r2(std::span<const double>(fh.data(), 6), std::span<const double>(f.data(), 6));
  o.require(r2 >= 0.98, "r2(f_H, f) = " + fmt("%.4f", r2) + " >= 0.98");
  o.require(std::abs(r2 - 0.99) <= 0.01, "within 0.01 of 0.99");
  o.detail += "; max|f_H - table| = " + fmt("%.4f", max_dev(fh, published::f_harker));
  return o;
}

Outcome correlation() {
  Outcome o;
  GeneratorSpec spec;
  spec.n = 5;
  spec.count = 500;
  spec.alpha_min = 0.0;
  spec.alpha_max = 4.0;
  spec.seed = 7;
  const auto t0 = std::chrono::steady_clock::now();
  const auto study = correlation_study(spec);
  const double elapsed = seconds_since(t0);
  o.require(study.r2_ci >= 0.95, "r2(sdot, CI) = " + fmt("%.3f", study.r2_ci) + " >= 0.95");
  o.require(study.r2_hci >= 0.55 && study.r2_hci <= 0.85, "r2(sdot, HCI) = " + fmt("%.3f", study.r2_hci) + " in [0.55, 0.85]");
  o.require(elapsed < 10.0, "compute " + fmt("%.2f", elapsed) + " s < 10 s");

  // Not part of the verdict: the same study on a narrower alpha range.
  spec.alpha_max = 1.0;
  const auto narrow = correlation_study(spec);
  o.detail += "; info alpha in [0, 1]: r2(CI) = " + fmt("%.3f", narrow.r2_ci) + ", r2(HCI) = " + fmt("%.3f", narrow.r2_hci);
  return o;
}

Outcome iff_consistency() {
  Outcome o;
  GeneratorSpec zero;
  zero.count = 200;
  zero.alpha_max = 0.0;
  zero.seed = 1;
  double worst_zero = 0.0, worst_balance = 0.0;
  for (const auto& g : generate_random_pcm(zero)) {
    const auto m = induce(g.pcm);
    worst_zero = std::max(worst_zero, m.sdot);
    for (Eigen::Index a = 0; a < m.k.rows(); ++a)
      for (Eigen::Index b = 0; b < m.k.cols(); ++b)
        worst_balance = std::max(worst_balance, std::abs(m.p(a) * m.k(a, b) - m.p(b) * m.k(b, a)));
  }
  GeneratorSpec noisy = zero;
  noisy.alpha_min = 0.5;
  noisy.alpha_max = 4.0;
  double least = std::numeric_limits<double>::infinity();
  for (const auto& g : generate_random_pcm(noisy)) least = std::min(least, entropy_production(g.pcm));
  o.require(worst_zero <= 1e-10, "alpha = 0: max sdot = " + fmt("%.1e", worst_zero));
  o.require(worst_balance <= 1e-10, "detailed-balance residual = " + fmt("%.1e", worst_balance));
  o.require(least > 1e-6, "alpha >= 0.5: min sdot = " + fmt("%.3e", least));
  return o;
}

Outcome spectral_identities() {
  Outcome o;
  Rng rng(2024);
  const double h = 1e-5;
  double sdot_gap = 0.0, fd_rel = 0.0, even = 0.0, odd = 0.0;
  std::size_t non_monotone = 0;
  std::vector<double> grid;
  for (int s = 0; s <= 30; ++s) grid.push_back(0.1 * s);
  for (int i = 0; i < 100; ++i) {
    const Pcm w = random_model_input(rng);
    const double gamma = rng.uniform(0.1, 3.0);
    const auto m = induce(w, gamma);
    sdot_gap = std::max(sdot_gap, std::abs(m.sdot - 2.0 * gamma * m.flux));

    const std::vector<double> gs{gamma - h, gamma + h};
    const auto c = flux_curve(w, gs);
    const double fd = (std::log(c[1].eta) - std::log(c[0].eta)) / (2 * h);
    fd_rel = std::max(fd_rel, std::abs(fd - m.flux) / std::abs(m.flux));

    const auto minus = induce(w, -gamma);
    even = std::max(even, std::abs(m.eta - minus.eta) / m.eta);
    odd = std::max(odd, std::abs(m.flux + minus.flux));

    const auto curve = flux_curve(w, grid);
    for (std::size_t s = 1; s < curve.size(); ++s) non_monotone += curve[s].flux < curve[s - 1].flux;
  }
  o.require(sdot_gap <= 1e-10, "max|sdot - 2 gamma <j>| = " + fmt("%.1e", sdot_gap));
  o.require(fd_rel <= 1e-6, "max rel |<j> - dlog(eta)/dgamma| = " + fmt("%.1e", fd_rel));
  o.require(even <= 1e-10, "max rel |eta(g) - eta(-g)| = " + fmt("%.1e", even));
  o.require(odd <= 1e-10, "max|<j>(g) + <j>(-g)| = " + fmt("%.1e", odd));
  o.require(non_monotone == 0, std::to_string(non_monotone) + " decreasing steps of <j> on [0, 3]");
  return o;
}

Outcome path_identity() {
  Outcome o;
  Rng rng(77);
  double worst = 0.0;
  std::size_t paths = 0;
  for (int model = 0; model < 20; ++model) {
    const Pcm w = random_model_input(rng);
    const double gamma = rng.uniform(-3.0, 3.0);
    const auto m = induce(w, gamma);
    const auto graph = adjacency_of(w);
    for (int k = 0; k < 5; ++k, ++paths) {
      std::vector<std::size_t> path{rng.below(w.size())};
      const std::size_t steps = 1 + rng.below(10);
      for (std::size_t s = 0; s < steps; ++s) {
        const auto nb = graph.neighbors(path.back());
        path.push_back(nb[rng.below(nb.size())]);
      }
      double js = 0.0;
      for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        const auto a = static_cast<Eigen::Index>(path[s]), b = static_cast<Eigen::Index>(path[s + 1]);
        js += 0.5 * (std::log(w.entries()(a, b)) - std::log(w.entries()(b, a)));
      }
      const double rhs = 2.0 * gamma * js + 2.0 * std::log(m.nu(static_cast<Eigen::Index>(path.back())) /
                                                           m.nu(static_cast<Eigen::Index>(path.front())));
      worst = std::max(worst, std::abs(path_log_ratio(m, path) - rhs));
    }
  }
  o.require(paths == 100, std::to_string(paths) + " paths");
  o.require(worst <= 1e-10, "max deviation = " + fmt("%.1e", worst));
  return o;
}

Outcome requirement_suite() {
  Outcome o;
  for (const auto& r : axiom_suite(200, 0)) {
    o.require(r.passed(), "req " + std::to_string(r.requirement) + " " + std::to_string(r.checks) + " checks");
  }
  double worst = 0.0;
  ConjectureSpec complete4;
  complete4.alpha = 3.0;
  ConjectureSpec ring5;
  ring5.n = 5;
  ring5.pattern = PatternKind::ring;
  ring5.alpha = 0.5;
  ConjectureSpec random6;
  random6.n = 6;
  random6.pattern = PatternKind::random_connected;
  random6.alpha = 2.5;
  random6.seed = 3;
  for (const auto& spec : {complete4, ring5, random6}) worst = std::max(worst, conjecture_check(spec));
  o.require(worst <= 1e-9, "conjecture max|k_W - k_Q| = " + fmt("%.1e", worst) + " over 3 x 100 trials");
  return o;
}

Outcome worked_3x3() {
  Outcome o;
  Matrix m(3, 3);
  m << 1, 2, 8, 0.5, 1, 2, 0.125, 0.5, 1;
  const Pcm w(m);
  const double ci_ref = (oracle::eta_3x3(m) - 3.0) / 2.0;
  const Vector cols = m.colwise().sum();
  const double hm = 3.0 / (1.0 / cols(0) + 1.0 / cols(1) + 1.0 / cols(2));
  const double hci_ref = (hm - 3.0) * 4.0 / 6.0;
  const double ci = saaty_ci(w), h = hci(w);
  o.require(std::abs(ci - 0.0268) <= 1e-3 && std::abs(ci - ci_ref) <= 1e-3,
            "CI = " + fmt("%.5f", ci) + " (oracle " + fmt("%.5f", ci_ref) + ")");
  o.require(std::abs(h - 0.0161) <= 1e-3 && std::abs(h - hci_ref) <= 1e-3,
            "HCI = " + fmt("%.5f", h) + " (oracle " + fmt("%.5f", hci_ref) + ")");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"tennis_scales", tennis_scales},     {"harker_fill", harker_fill_table},
      {"scale_agreement", scale_agreement}, {"correlation_study", correlation},
      {"iff_consistency", iff_consistency}, {"spectral_identities", spectral_identities},
      {"path_identity", path_identity},     {"requirement_suite", requirement_suite},
      {"worked_3x3", worked_3x3}};

  std::vector<std::string> wanted(argv + 1, argv + argc);
  if (wanted.empty())
    for (const auto& c : criteria) wanted.push_back(c.first);

  int failures = 0;
  for (const auto& name : wanted) {
    const auto it = std::find_if(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; });
    if (it == criteria.end()) {
      std::fprintf(stderr, "unknown criterion '%s'\n", name.c_str());
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = it->second();
    } catch (const std::exception& e) {
      outcome.require(false, std::string("threw: ") + e.what());
    }
    std::printf("%s %s (%.2f s): %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0),
                outcome.detail.c_str());
    failures += !outcome.pass;
  }
  return failures ? 1 : 0;
}
