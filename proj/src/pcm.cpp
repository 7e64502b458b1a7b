#include "consist/pcm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace consist {

namespace {

using Index = Eigen::Index;

std::string pair_text(std::size_t a, std::size_t b) {
  return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(std::begin(buf), std::end(buf), v);
  return std::string(buf, end);
}

void check_labels(const std::vector<std::string>& labels, std::size_t n,
                  std::vector<Violation>& out) {
  if (labels.empty()) return;
  if (labels.size() != n) {
    out.push_back({Violation::Rule::labels, 0, 0,
                   "expected " + std::to_string(n) + " labels, got " +
                       std::to_string(labels.size())});
    return;
  }
  std::set<std::string> seen;
  for (std::size_t a = 0; a < n; ++a) {
    const auto& l = labels[a];
    if (l.empty() || l.find_first_of(",\r\n\"") != std::string::npos) {
      out.push_back({Violation::Rule::labels, a, a, "label " + std::to_string(a) +
                                                        " is empty or contains , \" or a newline"});
    } else if (!seen.insert(l).second) {
      out.push_back({Violation::Rule::labels, a, a, "duplicate label '" + l + "'"});
    }
  }
}

// Entry invariants only; connectivity is checked separately.
std::vector<Violation> check_entries(const Matrix& w, double tol) {
  std::vector<Violation> out;
  if (w.rows() != w.cols()) {
    out.push_back({Violation::Rule::size, 0, 0,
                   "matrix is " + std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                       ", not square"});
    return out;
  }
  const auto n = static_cast<std::size_t>(w.rows());
  if (n < 2) {
    out.push_back({Violation::Rule::size, 0, 0, "need at least 2 alternatives"});
    return out;
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double v = w(static_cast<Index>(a), static_cast<Index>(b));
      if (!std::isfinite(v)) {
        out.push_back({Violation::Rule::non_finite, a, b, "entry " + pair_text(a, b) + " is not finite"});
      } else if (v < 0.0) {
        out.push_back({Violation::Rule::negative, a, b,
                       "entry " + pair_text(a, b) + " is negative (" + format_double(v) + ")"});
      }
    }
  }
  if (!out.empty()) return out;

  for (std::size_t a = 0; a < n; ++a) {
    const double d = w(static_cast<Index>(a), static_cast<Index>(a));
    if (d != 1.0) {
      out.push_back({Violation::Rule::diagonal, a, a,
                     "diagonal entry " + pair_text(a, a) + " is " + format_double(d) + ", not 1"});
    }
    for (std::size_t b = a + 1; b < n; ++b) {
      const double ab = w(static_cast<Index>(a), static_cast<Index>(b));
      const double ba = w(static_cast<Index>(b), static_cast<Index>(a));
      if ((ab > 0.0) != (ba > 0.0)) {
        out.push_back({Violation::Rule::asymmetric_missing, a, b,
                       "entry " + pair_text(a, b) + " and its mirror disagree on missingness"});
      } else if (ab > 0.0 && std::abs(ab * ba - 1.0) > tol) {
        out.push_back({Violation::Rule::reciprocity, a, b,
                       "entries " + pair_text(a, b) + " are not reciprocal: " + format_double(ab) +
                           " * " + format_double(ba) + " = " + format_double(ab * ba)});
      }
    }
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    cells.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

Pcm parse_csv(std::string_view text, Reciprocity mode) {
  std::vector<std::vector<std::string_view>> rows;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    auto line = trim(text.substr(start, pos - start));
    if (!line.empty() && line.front() != '#') rows.push_back(split(line, ','));
    start = pos + 1;
  }
  if (rows.empty()) throw ParseError("empty CSV input");

  std::vector<std::string> labels;
  const bool header = std::any_of(rows.front().begin(), rows.front().end(),
                                  [](std::string_view c) { return !parse_number(c); });
  if (header) {
    for (auto c : rows.front()) labels.emplace_back(c);
    rows.erase(rows.begin());
  }
  const auto n = static_cast<Index>(rows.size());
  Matrix w(n, n);
  for (Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (static_cast<Index>(row.size()) != n) {
      throw ValidationError({{Violation::Rule::size, static_cast<std::size_t>(r), 0,
                              "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                  " cells, expected " + std::to_string(n)}});
    }
    for (Index c = 0; c < n; ++c) {
      auto v = parse_number(row[static_cast<std::size_t>(c)]);
      if (!v) {
        throw ParseError("row " + std::to_string(r) + ", column " + std::to_string(c) +
                         ": '" + std::string(row[static_cast<std::size_t>(c)]) + "' is not a number");
      }
      w(r, c) = *v;
    }
  }
  return Pcm(std::move(w), std::move(labels), mode);
}

Pcm parse_json(std::string_view text, Reciprocity mode) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array()) {
    throw ParseError("JSON PCM must be an object with an \"entries\" array");
  }
  const auto& rows = doc["entries"];
  const auto n = static_cast<Index>(rows.size());
  Matrix w(n, n);
  for (Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) {
      throw ValidationError({{Violation::Rule::size, static_cast<std::size_t>(r), 0,
                              "row " + std::to_string(r) + " is not an array of " +
                                  std::to_string(n) + " entries"}});
    }
    for (Index c = 0; c < n; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      if (cell.is_null()) {
        // Diagonal may be omitted; off-diagonal null is a missing comparison.
        w(r, c) = (r == c) ? 1.0 : 0.0;
      } else if (cell.is_number()) {
        w(r, c) = cell.get<double>();
        if (r == c && w(r, c) == 0.0) w(r, c) = 1.0;
      } else {
        throw ParseError("entry (" + std::to_string(r) + "," + std::to_string(c) +
                         ") is not a number");
      }
    }
  }
  std::vector<std::string> labels;
  if (doc.contains("labels")) {
    if (!doc["labels"].is_array()) throw ParseError("\"labels\" must be an array of strings");
    for (const auto& l : doc["labels"]) {
      if (!l.is_string()) throw ParseError("\"labels\" must be an array of strings");
      labels.push_back(l.get<std::string>());
    }
  }
  return Pcm(std::move(w), std::move(labels), mode);
}

}  // namespace

const char* rule_name(Violation::Rule rule) {
  switch (rule) {
    case Violation::Rule::size: return "size";
    case Violation::Rule::non_finite: return "non-finite";
    case Violation::Rule::negative: return "negative";
    case Violation::Rule::diagonal: return "diagonal";
    case Violation::Rule::asymmetric_missing: return "asymmetric-missing";
    case Violation::Rule::reciprocity: return "reciprocity";
    case Violation::Rule::labels: return "labels";
    case Violation::Rule::disconnected: return "disconnected";
  }
  return "unknown";
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error([&] {
        std::string msg = "invalid pairwise comparison matrix";
        for (const auto& v : violations) msg += "\n  [" + std::string(rule_name(v.rule)) + "] " + v.message;
        return msg;
      }()),
      violations_(std::move(violations)) {}

DisconnectedError::DisconnectedError(std::vector<std::vector<std::size_t>> components)
    : Error([&] {
        std::string msg = "comparison graph is disconnected (" +
                          std::to_string(components.size()) + " components):";
        for (const auto& comp : components) {
          msg += " {";
          for (std::size_t i = 0; i < comp.size(); ++i) msg += (i ? "," : "") + std::to_string(comp[i]);
          msg += "}";
        }
        return msg;
      }()),
      components_(std::move(components)) {}

double reciprocity_tolerance(Reciprocity mode) {
  return mode == Reciprocity::strict ? kStrictReciprocityTolerance : kLenientReciprocityTolerance;
}

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels(n);
  for (std::size_t a = 0; a < n; ++a) labels[a] = "a" + std::to_string(a + 1);
  return labels;
}

Pcm::Pcm(Matrix entries, std::vector<std::string> labels, Reciprocity mode)
    : entries_(std::move(entries)), labels_(std::move(labels)) {
  auto violations = check_entries(entries_, reciprocity_tolerance(mode));
  if (violations.empty()) check_labels(labels_, size(), violations);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  if (labels_.empty()) labels_ = default_labels(size());
}

std::optional<std::size_t> Pcm::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

bool Pcm::is_complete() const { return (entries_.array() > 0.0).all(); }

Pcm Pcm::transposed() const {
  return Pcm(entries_.transpose(), labels_, Reciprocity::lenient);
}

Pcm Pcm::permuted(const std::vector<std::size_t>& perm) const {
  const auto n = size();
  Matrix w(entries_.rows(), entries_.cols());
  std::vector<std::string> labels(n);
  for (std::size_t a = 0; a < n; ++a) {
    labels[perm.at(a)] = labels_[a];
    for (std::size_t b = 0; b < n; ++b) {
      w(static_cast<Index>(perm[a]), static_cast<Index>(perm.at(b))) = (*this)(a, b);
    }
  }
  return Pcm(std::move(w), std::move(labels), Reciprocity::lenient);
}

AdjacencyGraph::AdjacencyGraph(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> adj)
    : adj_(std::move(adj)) {}

std::vector<std::size_t> AdjacencyGraph::neighbors(std::size_t a) const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < size(); ++b) {
    if (b != a && has_edge(a, b)) out.push_back(b);
  }
  return out;
}

std::size_t AdjacencyGraph::edge_count() const {
  std::size_t count = 0;
  for (std::size_t a = 0; a < size(); ++a) {
    for (std::size_t b = a + 1; b < size(); ++b) count += has_edge(a, b) ? 1 : 0;
  }
  return count;
}

Matrix AdjacencyGraph::to_matrix() const { return adj_.cast<double>(); }

AdjacencyGraph adjacency_of(const Matrix& entries) {
  return AdjacencyGraph((entries.array() > 0.0).cast<std::uint8_t>());
}

AdjacencyGraph adjacency_of(const Pcm& pcm) { return adjacency_of(pcm.entries()); }

std::vector<std::vector<std::size_t>> connected_components(const AdjacencyGraph& graph) {
  const auto n = graph.size();
  std::vector<int> comp(n, -1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<std::size_t> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      out.back().push_back(v);
      // Treat the pattern as undirected even if it is not symmetric.
      for (std::size_t u = 0; u < n; ++u) {
        if (u != v && comp[u] < 0 && (graph.has_edge(v, u) || graph.has_edge(u, v))) {
          comp[u] = id;
          stack.push_back(u);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

bool is_connected(const AdjacencyGraph& graph) {
  return graph.size() > 0 && connected_components(graph).size() == 1;
}

std::vector<Violation> validate(const Matrix& entries, Reciprocity mode,
                                const std::vector<std::string>& labels) {
  auto out = check_entries(entries, reciprocity_tolerance(mode));
  const bool shape_ok = std::none_of(out.begin(), out.end(), [](const Violation& v) {
    return v.rule == Violation::Rule::size;
  });
  if (!shape_ok) return out;
  check_labels(labels, static_cast<std::size_t>(entries.rows()), out);
  const auto comps = connected_components(adjacency_of(entries));
  if (comps.size() > 1) {
    std::string msg = "comparison graph has " + std::to_string(comps.size()) + " components";
    out.push_back({Violation::Rule::disconnected, comps[0].front(), comps[1].front(), msg});
  }
  return out;
}

std::vector<Violation> validate(const Pcm& pcm, Reciprocity mode) {
  return validate(pcm.entries(), mode, pcm.labels());
}

Pcm parse_pcm(std::string_view text, PcmFormat format, Reciprocity mode) {
  return format == PcmFormat::json ? parse_json(text, mode) : parse_csv(text, mode);
}

std::string serialize_pcm(const Pcm& pcm, PcmFormat format) {
  const auto n = pcm.size();
  if (format == PcmFormat::json) {
    nlohmann::json doc;
    doc["labels"] = pcm.labels();
    auto rows = nlohmann::json::array();
    for (std::size_t a = 0; a < n; ++a) {
      auto row = nlohmann::json::array();
      for (std::size_t b = 0; b < n; ++b) row.push_back(pcm(a, b));
      rows.push_back(std::move(row));
    }
    doc["entries"] = std::move(rows);
    return doc.dump() + "\n";
  }
  std::ostringstream os;
  for (std::size_t a = 0; a < n; ++a) os << (a ? "," : "") << pcm.label(a);
  os << "\n";
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) os << (b ? "," : "") << format_double(pcm(a, b));
    os << "\n";
  }
  return os.str();
}

PcmFormat format_for_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".json" ? PcmFormat::json : PcmFormat::csv;
}

Pcm read_pcm_file(const std::filesystem::path& path, std::optional<PcmFormat> format,
                  Reciprocity mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pcm(buf.str(), format.value_or(format_for_path(path)), mode);
}

}  // namespace consist
