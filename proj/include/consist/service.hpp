#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "consist/indices.hpp"
#include "consist/pcm.hpp"
#include "json.hpp"

namespace httplib {
class Server;
}

namespace consist::service {

/// Error with an HTTP status and a machine-readable code; serialized as
/// {"code", "message", "detail"}.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message,
               nlohmann::json detail = nullptr);

  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const nlohmann::json& detail() const noexcept { return detail_; }
  nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  nlohmann::json detail_;
};

struct HistoryEntry {
  std::int64_t timestamp_ms = 0;
  std::size_t a = 0;
  std::size_t b = 0;
  double old_value = 0.0;
  double new_value = 0.0;
};

/// Result of a mutation: a fresh report, or the components that keep the
/// comparison graph from being connected.
struct Update {
  std::optional<InconsistencyReport> report;
  std::vector<std::vector<std::size_t>> components;
};

struct ReportView {
  InconsistencyReport report;
  std::vector<Contribution> top;
};

/// In-memory comparison sessions, optionally journaled to an append-only
/// JSON-lines file that is replayed on construction.
///
/// Every public member is safe to call concurrently. Writers on one session
/// are serialized by that session's mutex; the journal line for a mutation
/// is written while that mutex is held, so journal order matches history
/// order.
class SessionStore {
 public:
  static constexpr std::size_t kMinLabels = 2;
  static constexpr std::size_t kMaxLabels = 50;

  explicit SessionStore(std::optional<std::filesystem::path> journal = std::nullopt);
  ~SessionStore();
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  /// Starts from the identity matrix (nothing compared) unless entries are
  /// given, in which case they must form a valid matrix.
  std::string create_session(std::vector<std::string> labels, double gamma = 1.0,
                             std::optional<Matrix> entries = std::nullopt);

  /// Sets W_ab = value and W_ba = 1 / value together; value 0 retracts the
  /// comparison. The report is recomputed whenever the graph is connected.
  Update set_entry(const std::string& id, std::size_t a, std::size_t b, double value);

  /// Cached report plus the k largest positive comparison contributions.
  /// A gamma other than the session's is evaluated on the fly. Throws a 409
  /// ServiceError listing the components while the graph is disconnected.
  ReportView get_report(const std::string& id, std::size_t k = 3,
                        std::optional<double> gamma = std::nullopt) const;

  Pcm matrix(const std::string& id) const;
  std::vector<HistoryEntry> history(const std::string& id) const;
  nlohmann::json describe(const std::string& id) const;
  std::string export_matrix(const std::string& id, PcmFormat format) const;
  void delete_session(const std::string& id);
  std::size_t size() const;

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::string insert(std::string id, std::vector<std::string> labels, double gamma,
                     std::optional<Matrix> entries, bool journal);
  Update apply(Session& s, std::size_t a, std::size_t b, double value, std::int64_t ts, bool journal);
  void append_journal(const nlohmann::json& record);
  void replay(const std::filesystem::path& path);

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mutex journal_mutex_;
  std::optional<std::ofstream> journal_;
};

nlohmann::json to_json(const Update& update, const std::vector<std::string>& labels);
nlohmann::json to_json(const ReportView& view);

/// Registers the REST routes:
///   POST   /sessions                      {labels, gamma?, entries?}
///   GET    /sessions/{id}
///   PUT    /sessions/{id}/entries         {a, b, value}   (a, b: index or label)
///   GET    /sessions/{id}/report?k=3&gamma=1
///   GET    /sessions/{id}/export?format=csv|json
///   DELETE /sessions/{id}
void register_routes(httplib::Server& server, SessionStore& store);

/// Blocks serving the routes on host:port.
bool serve(SessionStore& store, const std::string& host, int port);

}  // namespace consist::service
