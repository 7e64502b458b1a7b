#include "consist/indices.hpp"

#include <algorithm>

#include "consist/completion.hpp"
#include "consist/spectral.hpp"

namespace consist {

namespace {

void require_complete(const Pcm& pcm, const char* index) {
  if (!pcm.is_complete()) {
    throw IncompleteMatrixError(std::string(index) + " is defined only for complete matrices");
  }
}

}  // namespace

double saaty_ci(const Pcm& pcm) {
  require_complete(pcm, "CI");
  const double n = static_cast<double>(pcm.size());
  return (perron(pcm.entries()).eta - n) / (n - 1.0);
}

double hci(const Pcm& pcm) {
  require_complete(pcm, "HCI");
  const double n = static_cast<double>(pcm.size());
  const Vector t = pcm.entries().colwise().sum().transpose();
  const double hm = n / t.cwiseInverse().sum();
  return (hm - n) * (n + 1.0) / (n * (n - 1.0));
}

InconsistencyReport report(const Pcm& pcm, double gamma) {
  const MerwModel model = induce(pcm, gamma);
  InconsistencyReport r;
  r.gamma = gamma;
  r.sdot = model.sdot;
  r.complete = pcm.is_complete();
  if (r.complete) {
    r.ci = saaty_ci(pcm);
    r.hci = hci(pcm);
  }
  r.per_comparison = decompose(model, Decomposition::comparison);
  for (const auto& c : decompose(model, Decomposition::alternative)) r.per_alternative.push_back(c.value);
  const Vector scale = incomplete_preference_scale(pcm);
  r.scale.assign(scale.data(), scale.data() + scale.size());
  r.labels = pcm.labels();
  return r;
}

std::vector<Contribution> top_comparisons(const InconsistencyReport& report, std::size_t k,
                                          double threshold) {
  std::vector<Contribution> sorted;
  std::copy_if(report.per_comparison.begin(), report.per_comparison.end(), std::back_inserter(sorted),
               [&](const Contribution& c) { return c.value > threshold; });
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Contribution& x, const Contribution& y) { return x.value > y.value; });
  if (sorted.size() > k) sorted.resize(k);
  return sorted;
}

nlohmann::json to_json(const InconsistencyReport& report) {
  nlohmann::json j;
  j["gamma"] = report.gamma;
  j["sdot"] = report.sdot;
  j["ci"] = report.ci ? nlohmann::json(*report.ci) : nlohmann::json(nullptr);
  j["hci"] = report.hci ? nlohmann::json(*report.hci) : nlohmann::json(nullptr);
  j["complete"] = report.complete;
  j["labels"] = report.labels;
  j["scale"] = report.scale;
  auto per = nlohmann::json::array();
  for (const auto& c : report.per_comparison) {
    per.push_back({{"a", c.a}, {"b", c.b.value_or(c.a)}, {"value", c.value}});
  }
  j["perComparison"] = std::move(per);
  j["perAlternative"] = report.per_alternative;
  return j;
}

}  // namespace consist
