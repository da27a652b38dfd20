#include "tacmine/service.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <iomanip>
#include <set>
#include <sstream>

#include <httplib.h>

#include "tacmine/constraints.hpp"
#include "tacmine/error.hpp"
#include "tacmine/io.hpp"
#include "tacmine/synth.hpp"

namespace tacmine {

using json = nlohmann::json;

namespace {

constexpr std::size_t kMaxCachedPreviews = 32;

template <typename T>
T parse_number(const char* name, const char* text) {
  T value{};
  const std::string_view s(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::kValidation, std::string(name) + ": not a number: " + std::string(s));
  return value;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  const auto q = path.find('?');
  if (q != std::string_view::npos) path = path.substr(0, q);
  std::size_t i = 0;
  while (i < path.size()) {
    const auto j = path.find('/', i);
    const auto end = j == std::string_view::npos ? path.size() : j;
    if (end > i) parts.emplace_back(path.substr(i, end - i));
    i = end + 1;
  }
  return parts;
}

std::uint64_t id_number(const std::string& id, char prefix) {
  if (id.size() < 2 || id[0] != prefix) return 0;
  std::uint64_t n = 0;
  const auto [ptr, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), n);
  return ec == std::errc() && ptr == id.data() + id.size() ? n : 0;
}

int tactic_id_from(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw Error(ErrorCode::kNotFound, "no tactic " + s);
  return v;
}

std::string preview_key(std::uint64_t version, const json& constraint) {
  std::ostringstream ss;
  ss << 'v' << version << '-' << std::hex << std::setw(16) << std::setfill('0')
     << std::hash<std::string>{}(constraint.dump());
  return ss.str();
}

json rally_to_json(const Rally& r, const Dataset& d, const std::vector<int>& starts) {
  json hits = json::array();
  for (std::size_t i = 0; i < r.length(); ++i) {
    json hit = json::array();
    for (std::size_t f = 0; f < r.k; ++f) hit.push_back(d.schema.feature(f).values.at(static_cast<std::size_t>(r.at(i, f))));
    hits.push_back(std::move(hit));
  }
  return {{"id", r.id},
          {"server", r.server},
          {"winner", r.winner},
          {"focal_won", r.winner == d.focal_player},
          {"starts", starts},
          {"hits", std::move(hits)}};
}

json point_to_json(const ProjectedPoint& p) {
  return {{"tactic", p.tactic_id},
          {"angle", p.angle},
          {"radius", p.radius},
          {"freq", p.freq},
          {"importance", p.importance},
          {"win_rate", p.win_rate ? json(*p.win_rate) : json(nullptr)}};
}

json parsed_to_json(const ParsedSuggestion& p, const FeatureSchema& schema) {
  json spans = json::array();
  for (const auto& s : p.slot_spans) spans.push_back({{"slot", s.slot}, {"begin", s.begin}, {"end", s.end}});
  return {{"constraint", constraint_to_json(p.constraint, schema)},
          {"description", describe(p.constraint, schema)},
          {"confidence", p.confidence},
          {"template", p.template_id},
          {"text", p.raw_text},
          {"slot_spans", std::move(spans)}};
}

const json& require(const json& body, const char* key) {
  if (!body.is_object() || !body.contains(key))
    throw Error(ErrorCode::kValidation, std::string("missing field \"") + key + "\"");
  return body[key];
}

}  // namespace

void ServiceConfig::validate() const {
  if (host.empty()) throw Error(ErrorCode::kValidation, "config: empty host");
  if (port < 0 || port > 65535) throw Error(ErrorCode::kValidation, "config: port out of range");
  if (data_dir.empty()) throw Error(ErrorCode::kValidation, "config: empty data_dir");
  metric.validate();
  miner.validate();
}

ServiceConfig service_config_from_json(const json& j) {
  ServiceConfig c;
  try {
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.data_dir = j.value("data_dir", c.data_dir.string());
    c.metric.alpha = j.value("alpha", c.metric.alpha);
    c.metric.beta = j.value("beta", c.metric.beta);
    if (j.contains("miner")) c.miner = miner_config_from_json(j["miner"]);
    if (j.contains("templates") && !j["templates"].is_null()) c.template_file = j["templates"].get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json service_config_to_json(const ServiceConfig& c) {
  return {{"host", c.host},
          {"port", c.port},
          {"data_dir", c.data_dir.string()},
          {"alpha", c.metric.alpha},
          {"beta", c.metric.beta},
          {"miner", miner_config_to_json(c.miner)},
          {"templates", c.template_file ? json(c.template_file->string()) : json(nullptr)}};
}

void apply_env_overrides(ServiceConfig& c, const std::function<const char*(const char*)>& getenv) {
  const auto get = [&](const char* name) -> const char* {
    const char* v = getenv ? getenv(name) : std::getenv(name);
    return v && *v ? v : nullptr;
  };
  if (const char* v = get("TACMINE_HOST")) c.host = v;
  if (const char* v = get("TACMINE_PORT")) c.port = parse_number<int>("TACMINE_PORT", v);
  if (const char* v = get("TACMINE_DATA_DIR")) c.data_dir = v;
  if (const char* v = get("TACMINE_ALPHA")) c.metric.alpha = parse_number<double>("TACMINE_ALPHA", v);
  if (const char* v = get("TACMINE_BETA")) c.metric.beta = parse_number<double>("TACMINE_BETA", v);
  if (const char* v = get("TACMINE_MAX_ITERATIONS"))
    c.miner.max_iterations = parse_number<int>("TACMINE_MAX_ITERATIONS", v);
  if (const char* v = get("TACMINE_PATIENCE")) c.miner.patience = parse_number<int>("TACMINE_PATIENCE", v);
  if (const char* v = get("TACMINE_MINER_SEED")) c.miner.seed = parse_number<std::uint64_t>("TACMINE_MINER_SEED", v);
  if (const char* v = get("TACMINE_TEMPLATES")) c.template_file = v;
  c.validate();
}

ServiceConfig load_service_config(const std::optional<std::filesystem::path>& file) {
  ServiceConfig c = file ? service_config_from_json(read_json_file(*file)) : ServiceConfig{};
  apply_env_overrides(c);
  return c;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return 400;
    case ErrorCode::kInvalidArgument: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kStaleVersion: return 409;
    case ErrorCode::kUnparsed: return 422;
    case ErrorCode::kNoCandidates: return 422;
  }
  return 500;
}

json error_body(const Error& e) {
  json err = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (!e.detail().is_null()) err["detail"] = e.detail();
  return {{"error", std::move(err)}};
}

struct Api::Entry {
  Entry(std::string dataset_id, Session s, ProjectionModel m)
      : dataset_id(std::move(dataset_id)), session(std::move(s)), model(std::move(m)) {}

  std::string dataset_id;
  // Guards session and model: shared for reads, exclusive for apply/undo/pin.
  mutable std::shared_mutex mu;
  Session session;
  ProjectionModel model;
  std::mutex preview_mu;
  std::map<std::string, AdjustmentDiff> previews;
};

struct Api::Job {
  std::mutex mu;
  std::string status = "running";
  Response result;
};

Api::Api(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  bank_ = std::make_shared<const TemplateBank>(TemplateBank::builtin());
  if (cfg_.template_file) {
    bank_ = std::make_shared<const TemplateBank>(TemplateBank::load(*cfg_.template_file));
    bank_mtime_ = std::filesystem::last_write_time(*cfg_.template_file);
  }
  load_from_disk();
}

Api::~Api() {
  wait_for_jobs();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(registry_mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers)
    if (t.joinable()) t.join();
}

void Api::wait_for_jobs() {
  std::unique_lock lock(registry_mu_);
  jobs_cv_.wait(lock, [&] { return running_.load() == 0; });
}

Response Api::handle(std::string_view method, std::string_view path, std::string_view body) {
  try {
    json parsed = json::object();
    if (!body.empty()) {
      parsed = json::parse(body, nullptr, false);
      if (parsed.is_discarded()) throw Error(ErrorCode::kValidation, "request body is not valid JSON");
    }
    return route(method, split_path(path), parsed);
  } catch (const Error& e) {
    return {http_status(e.code()), error_body(e)};
  } catch (const json::exception& e) {
    return {400, error_body(Error(ErrorCode::kValidation, e.what()))};
  } catch (const std::exception& e) {
    return {500, {{"error", {{"code", "INTERNAL"}, {"message", e.what()}}}}};
  }
}

Response Api::route(std::string_view method, const std::vector<std::string>& p, const json& body) {
  const bool get = method == "GET";
  const bool post = method == "POST";
  const std::size_t n = p.size();
  if (n == 1 && p[0] == "health" && get) return {200, {{"status", "ok"}}};
  if (n >= 1 && p[0] == "datasets") {
    if (n == 1 && post) return create_dataset(body);
    if (n == 2 && p[1] == "generate" && post) return generate_dataset(body);
    if (n == 2 && get) return get_dataset(p[1]);
  }
  if (n >= 1 && p[0] == "sessions") {
    if (n == 1 && get) return list_sessions();
    if (n == 1 && post) return create_session(body);
    if (n == 2 && get) return session_summary(p[1]);
    if (n == 3) {
      const auto& id = p[1];
      const auto& what = p[2];
      if (get && what == "tactics") return tactics(id);
      if (get && what == "projection") return projection(id);
      if (get && what == "history") return history(id);
      if (get && what == "export") return export_session(id);
      if (post && what == "parse") return parse(id, body);
      if (post && what == "preview") return preview(id, body);
      if (post && what == "suggestions") return suggestion(id, body);
      if (post && what == "apply") return apply(id, body);
      if (post && what == "undo") return undo(id, body);
      if (post && what == "pin") return pin(id, body);
    }
    if (n == 5 && get && p[2] == "tactics" && p[4] == "rallies") return rallies(p[1], tactic_id_from(p[3]));
  }
  if (n == 2 && p[0] == "jobs" && get) return job_status(p[1]);
  if (n == 2 && p[0] == "templates" && p[1] == "reload" && post) return reload_templates();
  std::string path;
  for (const auto& part : p) path += "/" + part;
  throw Error(ErrorCode::kNotFound, std::string(method) + " " + (path.empty() ? "/" : path) + " is not an endpoint");
}

std::shared_ptr<Api::Entry> Api::entry(const std::string& id) const {
  std::lock_guard lock(registry_mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::kNotFound, "no session " + id);
  return it->second;
}

std::shared_ptr<const Dataset> Api::dataset(const std::string& id) const {
  std::lock_guard lock(registry_mu_);
  const auto it = datasets_.find(id);
  if (it == datasets_.end()) throw Error(ErrorCode::kNotFound, "no dataset " + id);
  return it->second;
}

std::shared_ptr<const TemplateBank> Api::bank() const {
  std::lock_guard lock(bank_mu_);
  if (cfg_.template_file) {
    std::error_code ec;
    const auto mtime = std::filesystem::last_write_time(*cfg_.template_file, ec);
    if (!ec && mtime != bank_mtime_) {
      bank_ = std::make_shared<const TemplateBank>(TemplateBank::load(*cfg_.template_file));
      bank_mtime_ = mtime;
    }
  }
  return bank_;
}

Response Api::run(bool async, std::function<Response()> fn) {
  if (!async) return fn();
  auto job = std::make_shared<Job>();
  std::string id;
  {
    std::lock_guard lock(registry_mu_);
    id = "j" + std::to_string(next_job_++);
    jobs_[id] = job;
    ++running_;
    workers_.emplace_back([this, job, fn = std::move(fn)] {
      Response r;
      std::string status = "done";
      try {
        r = fn();
      } catch (const Error& e) {
        r = {http_status(e.code()), error_body(e)};
        status = "failed";
      } catch (const std::exception& e) {
        r = {500, {{"error", {{"code", "INTERNAL"}, {"message", e.what()}}}}};
        status = "failed";
      }
      {
        std::lock_guard jl(job->mu);
        job->result = std::move(r);
        job->status = status;
      }
      std::lock_guard lock(registry_mu_);
      --running_;
      jobs_cv_.notify_all();
    });
  }
  return {202, {{"job", id}, {"status", "running"}, {"poll", "/jobs/" + id}}};
}

Response Api::job_status(const std::string& id) {
  std::shared_ptr<Job> job;
  {
    std::lock_guard lock(registry_mu_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::kNotFound, "no job " + id);
    job = it->second;
  }
  std::lock_guard lock(job->mu);
  json out = {{"job", id}, {"status", job->status}};
  if (job->status != "running") {
    out["http_status"] = job->result.status;
    out["result"] = job->result.body;
  }
  return {200, out};
}

void Api::persist(const Entry& e) const {
  json record = {{"format", "tacmine.session-record"},
                 {"dataset", e.dataset_id},
                 {"session", e.session.to_json()},
                 {"projection", e.model.to_json(e.session.dataset().schema)}};
  write_json_file(cfg_.data_dir / "sessions" / (e.session.id() + ".json"), record);
}

void Api::load_from_disk() {
  namespace fs = std::filesystem;
  const auto ddir = cfg_.data_dir / "datasets";
  const auto sdir = cfg_.data_dir / "sessions";
  std::error_code ec;
  if (fs::is_directory(ddir, ec))
    for (const auto& f : fs::directory_iterator(ddir)) {
      if (f.path().extension() != ".json") continue;
      const std::string id = f.path().stem().string();
      datasets_[id] = std::make_shared<const Dataset>(load_dataset(f.path()));
      next_dataset_ = std::max(next_dataset_, id_number(id, 'd') + 1);
    }
  if (fs::is_directory(sdir, ec))
    for (const auto& f : fs::directory_iterator(sdir)) {
      if (f.path().extension() != ".json") continue;
      const json record = read_json_file(f.path());
      const std::string did = record.at("dataset").get<std::string>();
      const auto it = datasets_.find(did);
      if (it == datasets_.end()) throw Error(ErrorCode::kValidation, f.path().string() + ": unknown dataset " + did);
      Session s = Session::from_json(record.at("session"), it->second);
      auto model = ProjectionModel::from_json(record.at("projection"), it->second->schema);
      const std::string sid = s.id();
      next_session_ = std::max(next_session_, id_number(sid, 's') + 1);
      sessions_[sid] = std::make_shared<Entry>(did, std::move(s), std::move(model));
    }
}

Response Api::create_dataset(const json& body) {
  auto d = std::make_shared<const Dataset>(validate_dataset(body));
  std::string id;
  {
    std::lock_guard lock(registry_mu_);
    id = "d" + std::to_string(next_dataset_++);
    datasets_[id] = d;
  }
  save_dataset(*d, cfg_.data_dir / "datasets" / (id + ".json"));
  return {201, {{"id", id}, {"rallies", d->rallies.size()}, {"schema", schema_to_json(d->schema)}}};
}

Response Api::generate_dataset(const json& body) {
  const auto params = synth_params_from_json(body);
  params.validate();
  auto synth = generate(params);
  auto d = std::make_shared<const Dataset>(synth.dataset);
  std::string id;
  {
    std::lock_guard lock(registry_mu_);
    id = "d" + std::to_string(next_dataset_++);
    datasets_[id] = d;
  }
  save_dataset(*d, cfg_.data_dir / "datasets" / (id + ".json"));
  return {201, {{"id", id}, {"rallies", d->rallies.size()}, {"ground_truth", ground_truth_to_json(synth)}}};
}

Response Api::get_dataset(const std::string& id) { return {200, dataset_to_json(*dataset(id))}; }

Response Api::list_sessions() {
  json out = json::array();
  std::vector<std::pair<std::string, std::shared_ptr<Entry>>> all;
  {
    std::lock_guard lock(registry_mu_);
    all.assign(sessions_.begin(), sessions_.end());
  }
  for (const auto& [id, e] : all) {
    std::shared_lock lock(e->mu);
    out.push_back({{"id", id},
                   {"dataset", e->dataset_id},
                   {"version", e->session.version()},
                   {"tactics", e->session.tactics().size()}});
  }
  return {200, {{"sessions", std::move(out)}}};
}

Response Api::create_session(const json& body) {
  const std::string did = require(body, "dataset").get<std::string>();
  auto d = dataset(did);
  MetricParams base = cfg_.metric;
  base.alpha = body.value("alpha", base.alpha);
  base.beta = body.value("beta", base.beta);
  base.validate();
  const MinerConfig miner = body.contains("miner") ? miner_config_from_json(body["miner"]) : cfg_.miner;
  miner.validate();
  std::optional<std::vector<Tactic>> given;
  if (body.contains("tactics")) given = tactics_from_json(body["tactics"], d->schema);
  std::string sid;
  {
    std::lock_guard lock(registry_mu_);
    sid = "s" + std::to_string(next_session_++);
  }
  return run(body.value("async", true), [this, d, did, sid, base, miner, given] {
    Session s = given ? Session(sid, d, base, miner, *given) : Session::mine(sid, d, base, miner);
    const auto views = s.view();
    std::vector<std::size_t> freq;
    for (const auto& v : views) freq.push_back(v.stats.freq);
    if (s.tactics().empty()) throw Error(ErrorCode::kValidation, "session has no tactics to project");
    auto model = fit_projection(s.tactics(), freq, default_basis(s.tactics(), d->schema));
    auto e = std::make_shared<Entry>(did, std::move(s), std::move(model));
    persist(*e);
    {
      std::lock_guard lock(registry_mu_);
      sessions_[sid] = e;
    }
    return session_summary(sid);
  });
}

Response Api::session_summary(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  const auto& s = e->session;
  return {200,
          {{"id", id},
           {"dataset", e->dataset_id},
           {"version", s.version()},
           {"score", s.score()},
           {"params", metric_params_to_json(s.params(), s.dataset().schema)},
           {"tactics", s.tactics().size()},
           {"history", s.history().size()}}};
}

Response Api::tactics(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  const auto& schema = e->session.dataset().schema;
  json out = json::array();
  for (const auto& v : e->session.view()) {
    json t = tactic_to_json(v.tactic, schema);
    t["stats"] = tactic_stats_to_json(v.stats);
    out.push_back(std::move(t));
  }
  return {200, {{"version", e->session.version()}, {"score", e->session.score()}, {"tactics", std::move(out)}}};
}

Response Api::rallies(const std::string& id, int tactic_id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  const Dataset& d = e->session.dataset();
  for (const auto& v : e->session.view()) {
    if (v.tactic.id != tactic_id) continue;
    std::map<int, std::vector<int>> starts;
    for (const auto& u : v.usages) starts[u.rally_id].push_back(u.start);
    json rs = json::array();
    for (const auto& [rid, st] : starts) rs.push_back(rally_to_json(d.rallies.at(*d.rally_index(rid)), d, st));
    json usages = json::array();
    for (const auto& u : v.usages) usages.push_back({{"rally", u.rally_id}, {"start", u.start}});
    return {200,
            {{"tactic", tactic_to_json(v.tactic, d.schema)},
             {"stats", tactic_stats_to_json(v.stats)},
             {"usages", std::move(usages)},
             {"rallies", std::move(rs)}}};
  }
  throw Error(ErrorCode::kNotFound, "no tactic " + std::to_string(tactic_id) + " in session " + id);
}

Response Api::projection(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  json points = json::array();
  for (const auto& v : e->session.view()) points.push_back(point_to_json(project(e->model, v.tactic, v.stats)));
  const auto& schema = e->session.dataset().schema;
  json features = json::array();
  for (const auto& f : schema.features()) features.push_back(f.name);
  return {200, {{"version", e->session.version()}, {"features", std::move(features)}, {"points", std::move(points)}}};
}

Response Api::parse(const std::string& id, const json& body) {
  auto e = entry(id);
  const std::string text = require(body, "text").get<std::string>();
  const auto selected = body.value("selected", std::vector<int>{});
  auto b = bank();
  std::shared_lock lock(e->mu);
  const auto& schema = e->session.dataset().schema;
  const auto ctx = make_parse_context(schema, e->session.tactics(), selected);
  return {200, {{"version", e->session.version()}, {"parsed", parsed_to_json(b->parse(text, ctx), schema)}}};
}

Response Api::preview_response(const std::shared_ptr<Entry>& e, const Session& snapshot, const Constraint& c,
                               const json& parsed) {
  const auto diff = snapshot.preview(c);
  const auto& schema = snapshot.dataset().schema;
  json dj = diff_to_json(diff, schema);
  if (!diff.reason.empty()) {
    json detail = {{"diff", dj}};
    if (!parsed.is_null()) detail["parsed"] = parsed;
    throw Error(ErrorCode::kNoCandidates, diff.reason, std::move(detail));
  }
  json points = json::array();
  for (std::size_t i = 0; i < diff.added.size(); ++i)
    points.push_back(point_to_json(project(e->model, diff.added[i], diff.added_stats[i])));
  dj["added_points"] = std::move(points);
  const std::string key = preview_key(diff.version, dj["constraint"]);
  {
    std::lock_guard lock(e->preview_mu);
    if (e->previews.size() >= kMaxCachedPreviews) e->previews.erase(e->previews.begin());
    e->previews[key] = diff;
  }
  json out = {{"version", diff.version}, {"preview_id", key}, {"diff", std::move(dj)}};
  if (!parsed.is_null()) out["parsed"] = parsed;
  return {200, out};
}

Response Api::preview(const std::string& id, const json& body) {
  auto e = entry(id);
  std::optional<Session> snapshot;
  {
    std::shared_lock lock(e->mu);
    snapshot.emplace(e->session);
  }
  const Constraint c = constraint_from_json(require(body, "constraint"), snapshot->dataset().schema);
  const bool async = is_global(c) && body.value("async", true);
  return run(async, [this, e, s = std::move(*snapshot), c] { return preview_response(e, s, c, nullptr); });
}

Response Api::suggestion(const std::string& id, const json& body) {
  auto e = entry(id);
  const std::string text = require(body, "text").get<std::string>();
  const auto selected = body.value("selected", std::vector<int>{});
  auto b = bank();
  std::optional<Session> snapshot;
  {
    std::shared_lock lock(e->mu);
    snapshot.emplace(e->session);
  }
  const auto& schema = snapshot->dataset().schema;
  const auto parsed = b->parse(text, make_parse_context(schema, snapshot->tactics(), selected));
  json pj = parsed_to_json(parsed, schema);
  const bool async = is_global(parsed.constraint) && body.value("async", true);
  return run(async, [this, e, s = std::move(*snapshot), c = parsed.constraint, pj] {
    return preview_response(e, s, c, pj);
  });
}

Response Api::apply(const std::string& id, const json& body) {
  auto e = entry(id);
  std::optional<AdjustmentDiff> diff;
  if (body.contains("preview_id")) {
    const std::string key = body["preview_id"].get<std::string>();
    std::lock_guard lock(e->preview_mu);
    const auto it = e->previews.find(key);
    if (it == e->previews.end()) throw Error(ErrorCode::kNotFound, "no preview " + key);
    diff = it->second;
  } else {
    std::optional<Session> snapshot;
    {
      std::shared_lock lock(e->mu);
      snapshot.emplace(e->session);
    }
    const auto version = require(body, "version").get<std::uint64_t>();
    if (version != snapshot->version())
      throw Error(ErrorCode::kStaleVersion, "session changed since version " + std::to_string(version));
    diff = snapshot->preview(constraint_from_json(require(body, "constraint"), snapshot->dataset().schema));
  }
  {
    std::unique_lock lock(e->mu);
    e->session.apply(*diff);
    persist(*e);
  }
  {
    std::lock_guard lock(e->preview_mu);
    e->previews.clear();
  }
  return session_summary(id);
}

Response Api::undo(const std::string& id, const json& body) {
  auto e = entry(id);
  {
    std::unique_lock lock(e->mu);
    if (body.contains("version") && body["version"].get<std::uint64_t>() != e->session.version())
      throw Error(ErrorCode::kStaleVersion, "session changed since version " + body["version"].dump());
    e->session.undo();
    persist(*e);
  }
  {
    std::lock_guard lock(e->preview_mu);
    e->previews.clear();
  }
  return session_summary(id);
}

Response Api::pin(const std::string& id, const json& body) {
  auto e = entry(id);
  const int tid = require(body, "tactic").get<int>();
  const bool pinned = body.value("pinned", true);
  {
    std::unique_lock lock(e->mu);
    e->session.set_pinned(tid, pinned);
    persist(*e);
  }
  return {200, {{"tactic", tid}, {"pinned", pinned}}};
}

Response Api::history(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  const auto& schema = e->session.dataset().schema;
  json out = json::array();
  for (const auto& h : e->session.history())
    out.push_back({{"constraint", constraint_to_json(h.constraint, schema)},
                   {"description", describe(h.constraint, schema)},
                   {"removed", h.removed},
                   {"added", h.added},
                   {"old_score", h.old_score},
                   {"new_score", h.new_score}});
  return {200, {{"version", e->session.version()}, {"history", std::move(out)}}};
}

Response Api::export_session(const std::string& id) {
  auto e = entry(id);
  std::shared_lock lock(e->mu);
  const auto& d = e->session.dataset();
  return {200,
          {{"format", "tacmine.export"},
           {"dataset", dataset_to_json(d)},
           {"session", e->session.to_json()},
           {"projection", e->model.to_json(d.schema)}}};
}

Response Api::reload_templates() {
  if (!cfg_.template_file) return {200, {{"templates", bank()->templates().size()}, {"source", "builtin"}}};
  auto fresh = std::make_shared<const TemplateBank>(TemplateBank::load(*cfg_.template_file));
  std::lock_guard lock(bank_mu_);
  bank_ = fresh;
  bank_mtime_ = std::filesystem::last_write_time(*cfg_.template_file);
  return {200, {{"templates", bank_->templates().size()}, {"source", cfg_.template_file->string()}}};
}

struct HttpServer::Impl {
  Api& api;
  httplib::Server server;
  explicit Impl(Api& a) : api(a) {}
};

HttpServer::HttpServer(Api& api) : impl_(std::make_unique<Impl>(api)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    const auto r = impl_->api.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  impl_->server.Get(".*", handler);
  impl_->server.Post(".*", handler);
  impl_->server.Put(".*", handler);
  impl_->server.Delete(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::kInvalidArgument, "cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port))
    throw Error(ErrorCode::kInvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace tacmine
