#include "consist/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <vector>

#include "CLI11.hpp"
#include "consist/completion.hpp"
#include "consist/experiments.hpp"
#include "consist/indices.hpp"
#include "consist/service.hpp"

namespace consist::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : Error {
  using Error::Error;
};

struct InputOptions {
  std::string path;
  std::string format;
  bool strict = false;
};

void add_input(CLI::App& cmd, InputOptions& in) {
  cmd.add_option("pcm", in.path, "Comparison matrix file (CSV or JSON)")->required();
  cmd.add_option("--format", in.format, "Input format; default from the file extension")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd.add_flag("--strict", in.strict, "Require exact reciprocity (1e-12) instead of 0.05");
}

Pcm load(const InputOptions& in) {
  if (!fs::exists(in.path)) throw ParseError("no such file '" + in.path + "'");
  std::optional<PcmFormat> format;
  if (in.format == "csv") format = PcmFormat::csv;
  if (in.format == "json") format = PcmFormat::json;
  return read_pcm_file(in.path, format, in.strict ? Reciprocity::strict : Reciprocity::lenient);
}

// Disconnected input is reported with labelled components.
void require_connected(const Pcm& pcm) {
  const auto components = connected_components(adjacency_of(pcm));
  if (components.size() <= 1) return;
  std::string msg = "comparison graph is disconnected; components:";
  for (const auto& comp : components) {
    msg += " {";
    for (std::size_t i = 0; i < comp.size(); ++i) msg += (i ? ", " : "") + pcm.label(comp[i]);
    msg += "}";
  }
  throw Error(msg);
}

fs::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return ".";
}

fs::path output_file(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) p = fs::path(env) / p;
  }
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << content;
}

std::size_t resolve(const Pcm& pcm, const std::string& token) {
  if (auto idx = pcm.index_of(token)) return *idx;
  try {
    std::size_t pos = 0;
    const auto v = std::stoul(token, &pos);
    if (pos == token.size() && v < pcm.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("'" + token + "' is neither a label nor an index of the matrix");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consistency analysis of pairwise comparison matrices", "consist"};
  app.require_subcommand(1);

  InputOptions input;
  double gamma = 1.0;

  auto* evaluate = app.add_subcommand("evaluate", "Print the inconsistency report as JSON");
  add_input(*evaluate, input);
  evaluate->add_option("--gamma", gamma, "Walk parameter")->check(CLI::Number);

  std::string fill_out;
  auto* fill = app.add_subcommand("fill", "Write the path-averaged completion as CSV");
  add_input(*fill, input);
  fill->add_option("-o,--output", fill_out, "Output file (default stdout)");

  auto* rank = app.add_subcommand("rank", "Print the preference scale, highest first");
  add_input(*rank, input);

  std::string from, to;
  std::size_t budget = kPathBudget;
  auto* paths = app.add_subcommand("paths", "List simple paths between two alternatives");
  add_input(*paths, input);
  paths->add_option("a", from, "Source label or index")->required();
  paths->add_option("b", to, "Target label or index")->required();
  paths->add_option("--budget", budget, "Maximum number of paths");

  GeneratorSpec spec;
  std::string exp_out;
  auto* experiment = app.add_subcommand("experiment", "Random-matrix correlation study");
  experiment->add_option("--n", spec.n, "Alternatives per matrix")->capture_default_str();
  experiment->add_option("--count", spec.count, "Number of matrices")->capture_default_str();
  experiment->add_option("--alpha-min", spec.alpha_min, "Lower end of the alpha range")->capture_default_str();
  experiment->add_option("--alpha-max", spec.alpha_max, "Upper end of the alpha range")->capture_default_str();
  experiment->add_option("--seed", spec.seed, "RNG seed")->capture_default_str();
  experiment->add_option("--gamma", gamma, "Walk parameter")->capture_default_str();
  experiment->add_option("--out", exp_out, std::string("Output directory (default $") + kOutputDirEnv + " or .)");

  std::size_t samples = 200;
  std::uint64_t axiom_seed = 0;
  auto* axioms = app.add_subcommand("axioms", "Check the six index requirements numerically");
  axioms->add_option("--samples", samples, "Random instances per requirement")->capture_default_str();
  axioms->add_option("--seed", axiom_seed, "RNG seed")->capture_default_str();

  int port = 8080;
  std::string host = "127.0.0.1";
  std::string journal;
  auto* serve = app.add_subcommand("serve", "Run the session HTTP service");
  serve->add_option("--port", port, "TCP port")->capture_default_str();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--journal", journal, "Append-only JSON-lines file for crash recovery");

  std::vector<std::string> owned{"consist"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : owned) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*evaluate) {
      if (!std::isfinite(gamma)) throw UsageError("gamma must be finite");
      const Pcm pcm = load(input);
      require_connected(pcm);
      out << to_json(report(pcm, gamma)).dump(2) << "\n";
    } else if (*fill) {
      const Pcm pcm = load(input);
      require_connected(pcm);
      const auto csv = serialize_pcm(harker_fill(pcm), PcmFormat::csv);
      if (fill_out.empty()) {
        out << csv;
      } else {
        const auto path = output_file(fill_out);
        write_file(path, csv);
        err << "wrote " << path.string() << "\n";
      }
    } else if (*rank) {
      const Pcm pcm = load(input);
      require_connected(pcm);
      const Vector scale = incomplete_preference_scale(pcm);
      std::vector<std::size_t> order(pcm.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return scale(static_cast<Eigen::Index>(x)) > scale(static_cast<Eigen::Index>(y));
      });
      char buf[32];
      for (auto a : order) {
        std::snprintf(buf, sizeof buf, "%.4f", scale(static_cast<Eigen::Index>(a)));
        out << pcm.label(a) << " " << buf << "\n";
      }
    } else if (*paths) {
      const Pcm pcm = load(input);
      const auto a = resolve(pcm, from);
      const auto b = resolve(pcm, to);
      if (a == b) throw UsageError("source and target must differ");
      const auto set = enumerate_paths(adjacency_of(pcm), a, b, budget);
      for (const auto& path : set.paths) {
        for (std::size_t i = 0; i < path.size(); ++i) out << (i ? "-" : "") << pcm.label(path[i]);
        out << "\n";
      }
      err << set.paths.size() << " simple paths\n";
    } else if (*experiment) {
      const auto result = correlation_study(spec, gamma);
      const auto summary = study_summary(result, spec, gamma);
      const auto dir = output_dir(exp_out);
      write_file(dir / "study.csv", study_csv(result));
      write_file(dir / "summary.json", summary.dump(2) + "\n");
      write_file(dir / "scatter.vl.json", study_scatter(result).dump() + "\n");
      out << summary.dump(2) << "\n";
      err << "wrote study.csv, summary.json, scatter.vl.json to " << dir.string() << "\n";
    } else if (*axioms) {
      bool all = true;
      for (const auto& r : axiom_suite(samples, axiom_seed)) {
        all = all && r.passed();
        out << "requirement " << r.requirement << " (" << r.name << "): " << (r.passed() ? "PASS" : "FAIL")
            << " [" << r.checks << " checks]\n";
        for (const auto& w : r.witnesses) out << "  witness: " << w << "\n";
      }
      out << "verdict: " << (all ? "PASS" : "FAIL") << "\n";
      return all ? kExitOk : kExitValidation;
    } else if (*serve) {
      service::SessionStore store(journal.empty() ? std::nullopt : std::optional<fs::path>(journal));
      err << "listening on http://" << host << ":" << port << "\n";
      if (!service::serve(store, host, port)) {
        err << "error: could not listen on " << host << ":" << port << "\n";
        return kExitValidation;
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace consist::cli
