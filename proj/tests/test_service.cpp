#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "doctest.h"

#include "consist/cli.hpp"
#include "consist/experiments.hpp"
#include "consist/service.hpp"
#include "oracles.hpp"

// After Eigen: resolv.h defines a _res macro.
#include "httplib.h"

namespace fs = std::filesystem;
using namespace consist;
using service::ServiceError;
using service::SessionStore;

namespace {

const std::vector<std::pair<std::size_t, std::size_t>> kTennisPairs{{0, 1}, {0, 3}, {0, 4}, {0, 5}, {1, 5},
                                                                    {2, 3}, {2, 4}, {3, 4}, {3, 5}};

int status_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    return e.status();
  }
  return 0;
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ServiceError& e) {
    return e.code();
  }
  return {};
}

std::string tennis_session(SessionStore& store) {
  const auto id = store.create_session(published::tennis_labels());
  const Matrix t = published::tennis();
  for (auto [a, b] : kTennisPairs) store.set_entry(id, a, b, t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
  return id;
}

void check_same(const InconsistencyReport& x, const InconsistencyReport& y, double tol) {
  CHECK(std::abs(x.sdot - y.sdot) <= tol);
  REQUIRE(x.scale.size() == y.scale.size());
  for (std::size_t a = 0; a < x.scale.size(); ++a) {
    CHECK(std::abs(x.scale[a] - y.scale[a]) <= tol);
    CHECK(std::abs(x.per_alternative[a] - y.per_alternative[a]) <= tol);
  }
  REQUIRE(x.per_comparison.size() == y.per_comparison.size());
  for (std::size_t i = 0; i < x.per_comparison.size(); ++i) {
    CHECK(x.per_comparison[i].a == y.per_comparison[i].a);
    CHECK(std::abs(x.per_comparison[i].value - y.per_comparison[i].value) <= tol);
  }
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("consist-service-" + std::to_string(::getpid()) + "-" + name);
}

}  // namespace

TEST_CASE("create_session limits") {
  SessionStore store;
  CHECK(status_of([&] { store.create_session({"x"}); }) == 400);
  std::vector<std::string> many;
  for (int i = 0; i < 51; ++i) many.push_back("L" + std::to_string(i));
  CHECK(code_of([&] { store.create_session(many); }) == "invalid-labels");
  many.pop_back();
  CHECK_NOTHROW(store.create_session(many));
  CHECK(code_of([&] { store.create_session({"x", "y", "x"}); }) == "invalid-labels");
  CHECK(code_of([&] { store.create_session({"x", "y"}, std::nan("")); }) == "invalid-gamma");
  CHECK(store.size() == 1);
}

TEST_CASE("fresh session is disconnected") {
  SessionStore store;
  const auto id = store.create_session(published::tennis_labels());
  const auto d = store.describe(id);
  CHECK(d["connected"] == false);
  CHECK(d["components"].size() == 6);
  CHECK(d["complete"] == false);
  try {
    store.get_report(id);
    FAIL("expected a 409");
  } catch (const ServiceError& e) {
    CHECK(e.status() == 409);
    CHECK(e.code() == "disconnected");
    CHECK(e.detail()["components"].size() == 6);
  }
  CHECK(status_of([&] { store.get_report("nope"); }) == 404);
  CHECK(status_of([&] { store.set_entry("nope", 0, 1, 2.0); }) == 404);
}

TEST_CASE("two-way session") {
  SessionStore store;
  const auto id = store.create_session({"x", "y"});
  const auto u = store.set_entry(id, 0, 1, 2.0);
  REQUIRE(u.report);
  CHECK(u.report->sdot == 0.0);
  CHECK(u.report->scale[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(u.report->scale[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(store.matrix(id)(1, 0) == 0.5);
  CHECK(store.get_report(id).top.empty());

  CHECK(code_of([&] { store.set_entry(id, 0, 0, 2.0); }) == "diagonal");
  CHECK(code_of([&] { store.set_entry(id, 0, 2, 2.0); }) == "out-of-range");
  CHECK(code_of([&] { store.set_entry(id, 0, 1, -1.0); }) == "negative");
  CHECK(code_of([&] { store.set_entry(id, 0, 1, std::numeric_limits<double>::infinity()); }) == "non-finite");
  CHECK(store.history(id).size() == 1);

  const auto r = store.set_entry(id, 1, 0, 0.0);
  CHECK_FALSE(r.report);
  CHECK(r.components.size() == 2);
  CHECK(store.matrix(id)(0, 1) == 0.0);
}

TEST_CASE("tennis entered one comparison at a time") {
  SessionStore store;
  const auto id = store.create_session(published::tennis_labels());
  const Matrix t = published::tennis();
  std::optional<InconsistencyReport> last;
  for (std::size_t i = 0; i < kTennisPairs.size(); ++i) {
    auto [a, b] = kTennisPairs[i];
    const auto u = store.set_entry(id, a, b, t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    last = u.report;
  }
  REQUIRE(last);
  for (std::size_t a = 0; a < 6; ++a) CHECK(std::abs(last->scale[a] - published::f[a]) <= 0.002);
  CHECK(store.history(id).size() == 9);

  const auto view = store.get_report(id);
  CHECK(view.report.per_comparison.size() == 9);
  double total = 0;
  for (const auto& c : view.report.per_comparison) total += c.value;
  CHECK(std::abs(total - view.report.sdot) <= 1e-10);
  CHECK(view.top.size() == 3);
  CHECK(store.get_report(id, 9).top.size() <= 9);

  const auto g2 = store.get_report(id, 3, 2.0);
  CHECK(g2.report.gamma == 2.0);
  CHECK(store.get_report(id).report.gamma == 1.0);
}

TEST_CASE("set then retract restores the report") {
  SessionStore store;
  const auto id = tennis_session(store);
  const auto before = store.get_report(id).report;
  const Matrix m0 = store.matrix(id).entries();
  store.set_entry(id, 0, 2, 3.5);
  CHECK(std::abs(store.get_report(id).report.sdot - before.sdot) > 1e-6);
  store.set_entry(id, 0, 2, 0.0);
  CHECK(store.matrix(id).entries() == m0);
  check_same(store.get_report(id).report, before, 1e-12);
  CHECK(store.history(id).size() == 11);
}

TEST_CASE("top comparison finds the perturbed entry") {
  Rng rng(21);
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 4 + rng.below(4);
    SessionStore store;
    const Pcm w = consistent_pcm(random_scale(n, rng), complete_pattern(n));
    const auto id = store.create_session(w.labels(), 1.0, w.entries());
    CHECK(store.get_report(id).top.empty());
    const std::size_t a = rng.below(n - 1);
    const std::size_t b = a + 1 + rng.below(n - 1 - a);
    store.set_entry(id, a, b, w(a, b) * 5.0);
    const auto view = store.get_report(id, 1);
    REQUIRE(view.top.size() == 1);
    CHECK(view.top[0].a == a);
    CHECK(*view.top[0].b == b);
  }
}

TEST_CASE("initial entries are validated") {
  SessionStore store;
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = 2;
  CHECK(code_of([&] { store.create_session({"x", "y"}, 1.0, bad); }) == "invalid-matrix");
  CHECK(code_of([&] { store.create_session({"x", "y", "z"}, 1.0, Matrix::Identity(2, 2)); }) == "invalid-matrix");
}

TEST_CASE("report matches evaluate on the export") {
  SessionStore store;
  const auto id = tennis_session(store);
  store.set_entry(id, 1, 2, 0.8);
  for (auto format : {PcmFormat::csv, PcmFormat::json}) {
    const auto path = temp_path(format == PcmFormat::csv ? "export.csv" : "export.json");
    std::ofstream(path) << store.export_matrix(id, format);
    std::ostringstream out, err;
    const std::vector<std::string> args{"evaluate", path.string()};
    REQUIRE(cli::run(args, out, err) == 0);
    fs::remove(path);
    CHECK(nlohmann::json::parse(out.str()) == consist::to_json(store.get_report(id).report));
  }
}

TEST_CASE("concurrent writers serialize") {
  SessionStore store;
  const std::size_t n = 6;
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("v" + std::to_string(i));
  const auto id = store.create_session(labels);
  const auto other = store.create_session(labels);
  store.set_entry(other, 0, 1, 3.0);
  const auto other_before = store.describe(other);

  const int threads = 8, per_thread = 40;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      Rng rng(100 + static_cast<std::uint64_t>(t));
      for (int i = 0; i < per_thread; ++i) {
        const std::size_t a = rng.below(n - 1);
        store.set_entry(id, a, a + 1 + rng.below(n - 1 - a), rng.uniform(0.2, 5.0));
        if (i % 10 == 0) (void)store.describe(id);
      }
    });
  }
  for (auto& th : pool) th.join();

  const auto history = store.history(id);
  REQUIRE(history.size() == threads * per_thread);

  // Replaying the history in order must land on the final state, and each
  // record's old value must be the previous write to that cell.
  Matrix replay = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& h : history) {
    const auto a = static_cast<Eigen::Index>(h.a), b = static_cast<Eigen::Index>(h.b);
    CHECK(replay(a, b) == h.old_value);
    replay(a, b) = h.new_value;
    replay(b, a) = 1.0 / h.new_value;
  }
  CHECK(replay == store.matrix(id).entries());
  CHECK(store.describe(other) == other_before);
}

TEST_CASE("sessions are isolated") {
  SessionStore store;
  const auto x = tennis_session(store);
  const auto y = tennis_session(store);
  CHECK(x != y);
  store.set_entry(x, 0, 1, 9.0);
  CHECK(store.matrix(y)(0, 1) == published::tennis()(0, 1));
  store.delete_session(x);
  CHECK(store.size() == 1);
  CHECK_NOTHROW(store.get_report(y));
  CHECK(status_of([&] { store.delete_session(x); }) == 404);
}

TEST_CASE("journal replay") {
  const auto path = temp_path("journal.jsonl");
  fs::remove(path);
  std::string kept, gone;
  nlohmann::json snapshot;
  {
    SessionStore store(path);
    kept = tennis_session(store);
    store.set_entry(kept, 0, 2, 1.7);
    gone = store.create_session({"p", "q"});
    store.delete_session(gone);
    snapshot = store.describe(kept);
  }
  {
    std::ofstream(path, std::ios::app) << R"({"op":"set","id":")" << kept << R"(","a":0,)";
  }
  SessionStore restored(path);
  CHECK(restored.size() == 1);
  CHECK(restored.describe(kept) == snapshot);
  CHECK(status_of([&] { restored.describe(gone); }) == 404);
  fs::remove(path);
}

TEST_CASE("http routes") {
  SessionStore store;
  httplib::Server server;
  service::register_routes(server, store);
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  const auto json = [](const httplib::Result& r) { return nlohmann::json::parse(r->body); };

  auto created = client.Post("/sessions", R"({"labels":["A","B","D","F","N","S"]})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  CHECK(created->get_header_value("Access-Control-Allow-Origin") == "*");
  const std::string id = json(created)["id"];
  const std::string base = "/sessions/" + id;

  auto report = client.Get(base + "/report");
  CHECK(report->status == 409);
  CHECK(json(report)["code"] == "disconnected");
  CHECK(json(report)["detail"]["components"].size() == 6);

  const Matrix t = published::tennis();
  const auto labels = published::tennis_labels();
  for (std::size_t i = 0; i < kTennisPairs.size(); ++i) {
    auto [a, b] = kTennisPairs[i];
    nlohmann::json body{{"value", t(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))}};
    // Alternate between labels and indices.
    if (i % 2) {
      body["a"] = labels[a];
      body["b"] = labels[b];
    } else {
      body["a"] = a;
      body["b"] = b;
    }
    auto put = client.Put(base + "/entries", body.dump(), "application/json");
    REQUIRE(put);
    CHECK(put->status == 200);
    if (i == 0) CHECK(json(put)["status"] == "disconnected");
    if (i + 1 == kTennisPairs.size()) CHECK(json(put)["status"] == "ok");
  }

  report = client.Get(base + "/report?k=2");
  REQUIRE(report->status == 200);
  const auto r = json(report);
  CHECK(r["top"].size() == 2);
  CHECK(r["perComparison"].size() == 9);
  for (std::size_t a = 0; a < 6; ++a) CHECK(std::abs(r["scale"][a].get<double>() - published::f[a]) <= 0.002);
  CHECK(json(client.Get(base + "/report?gamma=2"))["gamma"] == 2.0);
  CHECK(client.Get(base + "/report?k=abc")->status == 400);

  auto described = json(client.Get(base));
  CHECK(described["history"].size() == 9);
  CHECK(described["connected"] == true);

  auto csv = client.Get(base + "/export");
  CHECK(csv->status == 200);
  CHECK(csv->get_header_value("Content-Type") == "text/csv");
  CHECK(csv->body == store.export_matrix(id, PcmFormat::csv));
  auto exported = client.Get(base + "/export?format=json");
  CHECK(parse_pcm(exported->body, PcmFormat::json).entries() == store.matrix(id).entries());
  CHECK(client.Get(base + "/export?format=xml")->status == 400);

  SUBCASE("errors are JSON") {
    const auto expect = [](const httplib::Result& res, int status, const std::string& code) {
      REQUIRE(res);
      CHECK(res->status == status);
      const auto body = nlohmann::json::parse(res->body);
      CHECK(body["code"] == code);
      CHECK(body.contains("message"));
      CHECK(body.contains("detail"));
    };
    const auto put = [&](const char* body) { return client.Put(base + "/entries", body, "application/json"); };
    expect(put(R"({"a":"A","b":"Z","value":2})"), 400, "unknown-label");
    expect(put(R"({"a":0,"b":0,"value":2})"), 400, "diagonal");
    expect(put(R"({"a":0,"b":1,"value":"2"})"), 400, "bad-request");
    expect(put("{"), 400, "bad-request");
    expect(client.Post("/sessions", R"({"labels":["x"]})", "application/json"), 400, "invalid-labels");
    expect(client.Get("/sessions/unknown"), 404, "not-found");
  }

  SUBCASE("preflight") {
    auto opt = client.Options(base + "/entries");
    REQUIRE(opt);
    CHECK(opt->status == 204);
    CHECK(opt->get_header_value("Access-Control-Allow-Methods").find("PUT") != std::string::npos);
  }

  SUBCASE("create with entries, then delete") {
    nlohmann::json body{{"labels", {"x", "y"}}, {"gamma", 0.5}, {"entries", {{nullptr, 2}, {0.5, nullptr}}}};
    auto res = client.Post("/sessions", body.dump(), "application/json");
    REQUIRE(res->status == 201);
    const std::string other = json(res)["id"];
    CHECK(json(res)["gamma"] == 0.5);
    CHECK(json(client.Get("/sessions/" + other + "/report"))["sdot"].get<double>() <= 1e-12);
    CHECK(client.Delete("/sessions/" + other)->status == 204);
    CHECK(client.Delete("/sessions/" + other)->status == 404);
    CHECK(client.Get(base)->status == 200);
  }

  server.stop();
  thread.join();
}
