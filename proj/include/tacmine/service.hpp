#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tacmine/cover.hpp"
#include "tacmine/error.hpp"
#include "tacmine/miner.hpp"
#include "tacmine/nl.hpp"
#include "tacmine/projection.hpp"
#include "tacmine/session.hpp"

namespace tacmine {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path data_dir = "tacmine-data";
  MetricParams metric;
  MinerConfig miner;
  // Builtin bank when empty.
  std::optional<std::filesystem::path> template_file;

  void validate() const;
};

// Keys: host, port, data_dir, alpha, beta, miner {...}, templates.
ServiceConfig service_config_from_json(const nlohmann::json& j);
nlohmann::json service_config_to_json(const ServiceConfig& c);

// TACMINE_HOST, TACMINE_PORT, TACMINE_DATA_DIR, TACMINE_ALPHA, TACMINE_BETA,
// TACMINE_MAX_ITERATIONS, TACMINE_PATIENCE, TACMINE_MINER_SEED and
// TACMINE_TEMPLATES override the matching fields. `getenv` is injectable for tests.
void apply_env_overrides(ServiceConfig& c,
                         const std::function<const char*(const char*)>& getenv = nullptr);

// File (when given) then environment.
ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file);

struct Response {
  int status = 200;
  nlohmann::json body;
};

int http_status(ErrorCode code);
nlohmann::json error_body(const Error& e);

// Transport-free request router. Every method is safe to call concurrently.
//
//   GET  /health
//   POST /datasets                          dataset document -> {id}
//   POST /datasets/generate                 SynthParams -> {id, ground_truth}
//   GET  /datasets/{id}
//   GET  /sessions
//   POST /sessions                          {dataset, alpha?, beta?, miner?, tactics?, async?}
//   GET  /sessions/{id}
//   GET  /sessions/{id}/tactics
//   GET  /sessions/{id}/tactics/{tid}/rallies
//   GET  /sessions/{id}/projection
//   POST /sessions/{id}/parse               {text, selected?}
//   POST /sessions/{id}/preview             {constraint}
//   POST /sessions/{id}/suggestions         {text, selected?}
//   POST /sessions/{id}/apply               {preview_id} | {constraint, version}
//   POST /sessions/{id}/undo                {version?}
//   POST /sessions/{id}/pin                 {tactic, pinned}
//   GET  /sessions/{id}/history
//   GET  /sessions/{id}/export
//   GET  /jobs/{id}
//   POST /templates/reload
//
// Global constraints preview through an asynchronous job (202 + job id)
// unless the request carries "async": false; local ones answer directly.
class Api {
 public:
  explicit Api(ServiceConfig cfg);
  ~Api();
  Api(const Api&) = delete;
  Api& operator=(const Api&) = delete;

  Response handle(std::string_view method, std::string_view path, std::string_view body);

  // Blocks until every submitted job has finished.
  void wait_for_jobs();
  const ServiceConfig& config() const { return cfg_; }

 private:
  struct Entry;
  struct Job;

  Response route(std::string_view method, const std::vector<std::string>& parts, const nlohmann::json& body);

  Response create_dataset(const nlohmann::json& body);
  Response generate_dataset(const nlohmann::json& body);
  Response get_dataset(const std::string& id);
  Response list_sessions();
  Response create_session(const nlohmann::json& body);
  Response session_summary(const std::string& id);
  Response tactics(const std::string& id);
  Response rallies(const std::string& id, int tactic_id);
  Response projection(const std::string& id);
  Response parse(const std::string& id, const nlohmann::json& body);
  Response preview(const std::string& id, const nlohmann::json& body);
  Response suggestion(const std::string& id, const nlohmann::json& body);
  Response apply(const std::string& id, const nlohmann::json& body);
  Response undo(const std::string& id, const nlohmann::json& body);
  Response pin(const std::string& id, const nlohmann::json& body);
  Response history(const std::string& id);
  Response export_session(const std::string& id);
  Response job_status(const std::string& id);
  Response reload_templates();

  std::shared_ptr<Entry> entry(const std::string& id) const;
  std::shared_ptr<const Dataset> dataset(const std::string& id) const;
  // Reloads the template file when its modification time changed.
  std::shared_ptr<const TemplateBank> bank() const;
  // Runs fn inline or as a job; either way the result is a Response.
  Response run(bool async, std::function<Response()> fn);
  Response preview_response(const std::shared_ptr<Entry>& e, const Session& snapshot, const Constraint& c,
                            const nlohmann::json& parsed);
  void persist(const Entry& e) const;
  void load_from_disk();

  ServiceConfig cfg_;
  mutable std::mutex registry_mu_;
  std::map<std::string, std::shared_ptr<const Dataset>> datasets_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::uint64_t next_dataset_ = 1;
  std::uint64_t next_session_ = 1;
  std::uint64_t next_job_ = 1;
  std::vector<std::thread> workers_;
  std::atomic<std::size_t> running_{0};
  std::condition_variable jobs_cv_;
  mutable std::mutex bank_mu_;
  mutable std::shared_ptr<const TemplateBank> bank_;
  mutable std::optional<std::filesystem::file_time_type> bank_mtime_;
};

// Serves api over HTTP until stop() is called from another thread.
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();
  // Returns the bound port (useful with port 0).
  int bind(const std::string& host, int port);
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tacmine
