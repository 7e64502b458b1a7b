#include "consist/service.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "httplib.h"

namespace consist::service {

namespace {

using Index = Eigen::Index;

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string new_id() {
  static std::mutex mutex;
  static std::mt19937_64 engine{std::random_device{}()};
  std::lock_guard lock(mutex);
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << engine();
  return os.str();
}

nlohmann::json matrix_json(const Matrix& m) {
  auto rows = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    auto row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& rows) {
  if (!rows.is_array()) throw ServiceError(400, "bad-request", "entries must be an array of rows");
  const auto n = static_cast<Index>(rows.size());
  Matrix m(n, n);
  for (Index r = 0; r < n; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != n) {
      throw ServiceError(400, "bad-request", "entries must be a square array of numbers");
    }
    for (Index c = 0; c < n; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      if (cell.is_null()) {
        m(r, c) = r == c ? 1.0 : 0.0;
      } else if (cell.is_number()) {
        m(r, c) = cell.get<double>();
      } else {
        throw ServiceError(400, "bad-request", "entries must be a square array of numbers");
      }
    }
  }
  return m;
}

nlohmann::json labeled_components(const std::vector<std::vector<std::size_t>>& components,
                                   const std::vector<std::string>& labels) {
  auto out = nlohmann::json::array();
  for (const auto& comp : components) {
    auto names = nlohmann::json::array();
    for (auto v : comp) names.push_back(labels.at(v));
    out.push_back(std::move(names));
  }
  return out;
}

Update evaluate(const Pcm& pcm, double gamma) {
  Update u;
  u.components = connected_components(adjacency_of(pcm));
  if (u.components.size() == 1) {
    u.report = report(pcm, gamma);
    u.components.clear();
  }
  return u;
}

ServiceError not_found(const std::string& id) {
  return ServiceError(404, "not-found", "no session '" + id + "'");
}

}  // namespace

ServiceError::ServiceError(int status, std::string code, const std::string& message, nlohmann::json detail)
    : Error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}

nlohmann::json ServiceError::to_json() const {
  return {{"code", code_}, {"message", what()}, {"detail", detail_}};
}

struct SessionStore::Session {
  Session(std::string id_, Pcm pcm_, double gamma_)
      : id(std::move(id_)), pcm(std::move(pcm_)), gamma(gamma_) {}

  mutable std::mutex mutex;
  std::string id;
  Pcm pcm;
  double gamma;
  std::vector<HistoryEntry> history;
  Update latest;
};

SessionStore::SessionStore(std::optional<std::filesystem::path> journal) {
  if (!journal) return;
  if (std::filesystem::exists(*journal)) replay(*journal);
  journal_.emplace(*journal, std::ios::app);
  if (!*journal_) throw Error("cannot open journal '" + journal->string() + "'");
}

SessionStore::~SessionStore() = default;

void SessionStore::append_journal(const nlohmann::json& record) {
  std::lock_guard lock(journal_mutex_);
  if (!journal_) return;
  *journal_ << record.dump() << '\n';
  journal_->flush();
}

void SessionStore::replay(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto op = rec.at("op").get<std::string>();
      const auto id = rec.at("id").get<std::string>();
      if (op == "create") {
        std::optional<Matrix> entries;
        if (!rec.at("entries").is_null()) entries = matrix_from_json(rec["entries"]);
        insert(id, rec.at("labels").get<std::vector<std::string>>(), rec.at("gamma").get<double>(),
               std::move(entries), false);
      } else if (op == "set") {
        if (auto s = find(id)) {
          std::lock_guard lock(s->mutex);
          apply(*s, rec.at("a").get<std::size_t>(), rec.at("b").get<std::size_t>(),
                rec.at("value").get<double>(), rec.at("ts").get<std::int64_t>(), false);
        }
      } else if (op == "delete") {
        std::unique_lock lock(sessions_mutex_);
        sessions_.erase(id);
      }
    } catch (const std::exception&) {
      // A crash can leave a truncated final line; records that do not parse
      // or no longer apply are skipped.
    }
  }
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string SessionStore::insert(std::string id, std::vector<std::string> labels, double gamma,
                                 std::optional<Matrix> entries, bool journal) {
  const auto n = labels.size();
  if (n < kMinLabels || n > kMaxLabels) {
    throw ServiceError(400, "invalid-labels",
                       "a session needs between 2 and 50 labels, got " + std::to_string(n));
  }
  if (std::set<std::string>(labels.begin(), labels.end()).size() != n) {
    throw ServiceError(400, "invalid-labels", "labels must be unique");
  }
  if (!std::isfinite(gamma)) throw ServiceError(400, "invalid-gamma", "gamma must be finite");
  if (entries && (static_cast<std::size_t>(entries->rows()) != n || entries->cols() != entries->rows())) {
    throw ServiceError(400, "invalid-matrix", "entries must be an n x n matrix matching the labels");
  }
  const bool initial = entries.has_value();
  Matrix w = initial ? *entries : Matrix::Identity(static_cast<Index>(n), static_cast<Index>(n));
  std::optional<Pcm> pcm;
  try {
    pcm.emplace(std::move(w), labels);
  } catch (const ValidationError& e) {
    auto detail = nlohmann::json::array();
    for (const auto& v : e.violations()) detail.push_back({{"rule", rule_name(v.rule)}, {"a", v.a}, {"b", v.b}, {"message", v.message}});
    throw ServiceError(400, "invalid-matrix", "entries do not form a valid comparison matrix", detail);
  }
  auto session = std::make_shared<Session>(id, std::move(*pcm), gamma);
  session->latest = evaluate(session->pcm, gamma);
  {
    std::unique_lock lock(sessions_mutex_);
    if (!sessions_.emplace(id, session).second) throw ServiceError(409, "conflict", "session id in use");
  }
  if (journal) {
    append_journal({{"op", "create"},
                    {"id", id},
                    {"labels", session->pcm.labels()},
                    {"gamma", gamma},
                    {"entries", initial ? matrix_json(session->pcm.entries()) : nlohmann::json(nullptr)},
                    {"ts", now_ms()}});
  }
  return id;
}

std::string SessionStore::create_session(std::vector<std::string> labels, double gamma,
                                         std::optional<Matrix> entries) {
  return insert(new_id(), std::move(labels), gamma, std::move(entries), true);
}

Update SessionStore::apply(Session& s, std::size_t a, std::size_t b, double value, std::int64_t ts,
                           bool journal) {
  const auto n = s.pcm.size();
  if (a >= n || b >= n) throw ServiceError(400, "out-of-range", "alternative index out of range");
  if (a == b) throw ServiceError(400, "diagonal", "the diagonal is fixed at 1");
  if (!std::isfinite(value)) throw ServiceError(400, "non-finite", "value must be finite");
  if (value < 0.0) throw ServiceError(400, "negative", "value must be positive, or 0 to retract");

  Matrix w = s.pcm.entries();
  const double old_value = w(static_cast<Index>(a), static_cast<Index>(b));
  w(static_cast<Index>(a), static_cast<Index>(b)) = value;
  w(static_cast<Index>(b), static_cast<Index>(a)) = value > 0.0 ? 1.0 / value : 0.0;
  Pcm next(std::move(w), s.pcm.labels());
  Update update = evaluate(next, s.gamma);

  s.pcm = std::move(next);
  s.latest = update;
  s.history.push_back({ts, a, b, old_value, value});
  if (journal) {
    append_journal({{"op", "set"}, {"id", s.id}, {"a", a}, {"b", b}, {"value", value}, {"ts", ts}});
  }
  return update;
}

Update SessionStore::set_entry(const std::string& id, std::size_t a, std::size_t b, double value) {
  auto s = find(id);
  if (!s) throw not_found(id);
  std::lock_guard lock(s->mutex);
  return apply(*s, a, b, value, now_ms(), true);
}

ReportView SessionStore::get_report(const std::string& id, std::size_t k, std::optional<double> gamma) const {
  auto s = find(id);
  if (!s) throw not_found(id);
  std::unique_lock lock(s->mutex);
  if (!s->latest.report) {
    throw ServiceError(409, "disconnected",
                       "comparison graph is not connected; add comparisons linking the components",
                       {{"components", labeled_components(s->latest.components, s->pcm.labels())}});
  }
  ReportView view;
  if (gamma && *gamma != s->gamma) {
    if (!std::isfinite(*gamma)) throw ServiceError(400, "invalid-gamma", "gamma must be finite");
    const Pcm pcm = s->pcm;
    lock.unlock();
    view.report = report(pcm, *gamma);
  } else {
    view.report = *s->latest.report;
  }
  view.top = top_comparisons(view.report, k);
  return view;
}

Pcm SessionStore::matrix(const std::string& id) const {
  auto s = find(id);
  if (!s) throw not_found(id);
  std::lock_guard lock(s->mutex);
  return s->pcm;
}

std::vector<HistoryEntry> SessionStore::history(const std::string& id) const {
  auto s = find(id);
  if (!s) throw not_found(id);
  std::lock_guard lock(s->mutex);
  return s->history;
}

nlohmann::json SessionStore::describe(const std::string& id) const {
  auto s = find(id);
  if (!s) throw not_found(id);
  std::lock_guard lock(s->mutex);
  auto history = nlohmann::json::array();
  for (const auto& h : s->history) {
    history.push_back({{"timestamp", h.timestamp_ms}, {"a", h.a}, {"b", h.b}, {"old", h.old_value}, {"new", h.new_value}});
  }
  return {{"id", s->id},
          {"labels", s->pcm.labels()},
          {"gamma", s->gamma},
          {"entries", matrix_json(s->pcm.entries())},
          {"complete", s->pcm.is_complete()},
          {"connected", s->latest.report.has_value()},
          {"components", labeled_components(s->latest.components, s->pcm.labels())},
          {"history", std::move(history)}};
}

std::string SessionStore::export_matrix(const std::string& id, PcmFormat format) const {
  return serialize_pcm(matrix(id), format);
}

void SessionStore::delete_session(const std::string& id) {
  {
    std::unique_lock lock(sessions_mutex_);
    if (sessions_.erase(id) == 0) throw not_found(id);
  }
  append_journal({{"op", "delete"}, {"id", id}, {"ts", now_ms()}});
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

nlohmann::json to_json(const Update& update, const std::vector<std::string>& labels) {
  if (update.report) return {{"status", "ok"}, {"report", consist::to_json(*update.report)}};
  return {{"status", "disconnected"}, {"components", labeled_components(update.components, labels)}};
}

nlohmann::json to_json(const ReportView& view) {
  auto j = consist::to_json(view.report);
  auto top = nlohmann::json::array();
  for (const auto& c : view.top) top.push_back({{"a", c.a}, {"b", c.b.value_or(c.a)}, {"value", c.value}});
  j["top"] = std::move(top);
  return j;
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_json(res, e.status(), e.to_json());
    } catch (const nlohmann::json::exception& e) {
      send_json(res, 400, {{"code", "bad-request"}, {"message", e.what()}, {"detail", nullptr}});
    } catch (const ValidationError& e) {
      send_json(res, 400, {{"code", "invalid-matrix"}, {"message", e.what()}, {"detail", nullptr}});
    } catch (const std::exception& e) {
      send_json(res, 500, {{"code", "internal"}, {"message", e.what()}, {"detail", nullptr}});
    }
  };
}

std::size_t resolve_alternative(const nlohmann::json& v, const Pcm& pcm) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_string()) {
    if (auto idx = pcm.index_of(v.get<std::string>())) return *idx;
    throw ServiceError(400, "unknown-label", "no alternative labelled '" + v.get<std::string>() + "'");
  }
  throw ServiceError(400, "bad-request", "a and b must be indices or labels");
}

}  // namespace

void register_routes(httplib::Server& server, SessionStore& store) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, PUT, DELETE, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/sessions", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    auto labels = body.at("labels").get<std::vector<std::string>>();
    const double gamma = body.value("gamma", 1.0);
    std::optional<Matrix> entries;
    if (body.contains("entries") && !body["entries"].is_null()) entries = matrix_from_json(body["entries"]);
    const auto id = store.create_session(std::move(labels), gamma, std::move(entries));
    send_json(res, 201, store.describe(id));
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, store.describe(req.matches[1]));
  }));

  server.Delete(R"(/sessions/([^/]+))", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    store.delete_session(req.matches[1]);
    res.status = 204;
  }));

  server.Put(R"(/sessions/([^/]+)/entries)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto body = nlohmann::json::parse(req.body);
    const Pcm current = store.matrix(id);
    const auto a = resolve_alternative(body.at("a"), current);
    const auto b = resolve_alternative(body.at("b"), current);
    if (!body.at("value").is_number()) throw ServiceError(400, "bad-request", "value must be a number");
    const auto update = store.set_entry(id, a, b, body["value"].get<double>());
    send_json(res, 200, to_json(update, current.labels()));
  }));

  server.Get(R"(/sessions/([^/]+)/report)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    std::size_t k = 3;
    std::optional<double> gamma;
    try {
      if (req.has_param("k")) k = std::stoul(req.get_param_value("k"));
      if (req.has_param("gamma")) gamma = std::stod(req.get_param_value("gamma"));
    } catch (const std::exception&) {
      throw ServiceError(400, "bad-request", "k must be a count and gamma a number");
    }
    send_json(res, 200, to_json(store.get_report(req.matches[1], k, gamma)));
  }));

  server.Get(R"(/sessions/([^/]+)/export)", guarded([&store](const httplib::Request& req, httplib::Response& res) {
    const auto format = req.has_param("format") ? req.get_param_value("format") : std::string("csv");
    if (format != "csv" && format != "json") throw ServiceError(400, "bad-request", "format must be csv or json");
    const bool json = format == "json";
    res.status = 200;
    res.set_content(store.export_matrix(req.matches[1], json ? PcmFormat::json : PcmFormat::csv),
                    json ? "application/json" : "text/csv");
  }));
}

bool serve(SessionStore& store, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, store);
  return server.listen(host, port);
}

}  // namespace consist::service
