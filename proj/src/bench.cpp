#include "tacmine/bench.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <thread>

#include "tacmine/error.hpp"
#include "tacmine/io.hpp"
#include "tacmine/projection.hpp"
#include "tacmine/session.hpp"

namespace tacmine {

std::size_t aligned_difference(const Tactic& a, const Tactic& b) {
  const int la = static_cast<int>(a.length());
  const int lb = static_cast<int>(b.length());
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (int offset = -lb; offset <= la; ++offset) {
    const int lo = std::min(0, offset);
    const int hi = std::max(la, offset + lb);
    std::size_t diff = 0;
    for (int e = lo; e < hi; ++e)
      for (std::size_t f = 0; f < a.k; ++f) {
        const ValueId x = e >= 0 && e < la ? a.at(static_cast<std::size_t>(e), f) : kNull;
        const int eb = e - offset;
        const ValueId y = eb >= 0 && eb < lb ? b.at(static_cast<std::size_t>(eb), f) : kNull;
        diff += x != y;
      }
    best = std::min(best, diff);
  }
  return best;
}

std::optional<double> recovery_rate(std::span<const Tactic> planted, std::span<const Tactic> mined) {
  if (planted.empty()) return std::nullopt;
  std::size_t found = 0;
  for (const auto& p : planted)
    found += std::any_of(mined.begin(), mined.end(), [&](const Tactic& m) { return aligned_difference(m, p) <= 1; });
  return static_cast<double>(found) / static_cast<double>(planted.size());
}

BenchConfig bench_config_from_json(const nlohmann::json& j) {
  BenchConfig cfg;
  try {
    for (const auto& r : j.at("rows")) cfg.rows.push_back(synth_params_from_json(r));
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.metric.alpha = j.value("alpha", 1.0);
    cfg.metric.beta = j.value("beta", 1.0);
    if (j.contains("miner")) cfg.miner = miner_config_from_json(j["miner"]);
    cfg.deterministic = j.value("deterministic", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("bench config: ") + e.what());
  }
  if (cfg.rows.empty()) throw Error(ErrorCode::kValidation, "bench config: no rows");
  for (const auto& r : cfg.rows) r.validate();
  cfg.metric.validate();
  cfg.miner.validate();
  return cfg;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Nearest current tactic to each planted id, keeping the picks distinct
// where the set allows it.
std::vector<int> resolve(const std::vector<int>& planted_ids, const SynthResult& synth, std::span<const Tactic> current) {
  std::vector<int> out;
  for (int pid : planted_ids) {
    const Tactic& p = synth.planted.at(static_cast<std::size_t>(pid - 1));
    int best = -1;
    double best_d = 2;
    for (const auto& t : current) {
      if (std::find(out.begin(), out.end(), t.id) != out.end()) continue;
      const double d = tactic_distance(p, t);
      if (d < best_d) best_d = d, best = t.id;
    }
    if (best >= 0) out.push_back(best);
  }
  return out;
}

std::optional<Constraint> retarget(const Constraint& c, const SynthResult& synth, std::span<const Tactic> current) {
  return std::visit(
      [&](const auto& x) -> std::optional<Constraint> {
        using T = std::decay_t<decltype(x)>;
        auto y = x;
        if constexpr (requires { y.tactics; }) {
          y.tactics = resolve(x.tactics, synth, current);
          const std::size_t need = std::is_same_v<T, constraint::MergeTactics> ? 2 : 1;
          if (y.tactics.size() < need) return std::nullopt;
        } else if constexpr (requires { y.tactic; }) {
          const auto ids = resolve({x.tactic}, synth, current);
          if (ids.empty()) return std::nullopt;
          y.tactic = ids.front();
        }
        return Constraint(y);
      },
      c);
}

// Small mine that touches every code path once before timing starts.
void warm_up(const BenchConfig& cfg) {
  SynthParams p;
  p.n_sequences = 20;
  p.n_tactics = 2;
  p.seed = cfg.seed;
  const auto synth = generate(p);
  MinerConfig m = cfg.miner;
  m.max_iterations = std::min(m.max_iterations, 5);
  mine_initial(synth.dataset, cfg.metric, m);
}

BenchRow run_row(const SynthParams& params, const BenchConfig& cfg) {
  BenchRow row;
  row.params = params;
  auto synth = generate(params);
  auto dataset = std::make_shared<const Dataset>(synth.dataset);

  const auto t0 = Clock::now();
  Session session = Session::mine("bench", dataset, cfg.metric, cfg.miner);
  row.t_initial = seconds_since(t0);
  row.mined_tactics = session.tactics().size();
  row.recovery = recovery_rate(synth.planted, session.tactics());
  row.initial_score = session.score();

  auto suite = generate_constraint_suite(synth, cfg.seed ^ params.seed);
  std::vector<Constraint> globals, locals;
  for (auto& c : suite) (is_global(c) ? globals : locals).push_back(std::move(c));
  std::mt19937_64 rng(cfg.seed * 0x9E3779B97F4A7C15ULL + params.seed);
  std::shuffle(globals.begin(), globals.end(), rng);
  std::shuffle(locals.begin(), locals.end(), rng);

  double total = 0;
  for (const auto& c : globals) {
    const auto t = Clock::now();
    session.apply(session.preview(c));
    const double dt = seconds_since(t);
    total += dt;
    row.max_t_global = std::max(row.max_t_global, dt);
    ++row.globals_applied;
  }
  row.avg_t_global = globals.empty() ? 0 : total / static_cast<double>(globals.size());

  total = 0;
  std::size_t timed = 0;
  for (const auto& c : locals) {
    const auto t = Clock::now();
    const auto target = retarget(c, synth, session.tactics());
    try {
      if (!target) throw Error(ErrorCode::kNotFound, "no tactic left to target");
      const auto diff = session.preview(*target);
      if (!diff.reason.empty()) throw Error(ErrorCode::kNoCandidates, diff.reason);
      session.apply(diff);
      ++row.locals_applied;
    } catch (const Error&) {
      ++row.locals_without_candidates;
    }
    const double dt = seconds_since(t);
    total += dt;
    row.max_t_local = std::max(row.max_t_local, dt);
    ++timed;
  }
  row.avg_t_local = timed == 0 ? 0 : total / static_cast<double>(timed);
  row.final_score = session.score();
  return row;
}

std::string read_cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) return line.substr(line.find_first_not_of(' ', colon + 1));
    }
  return "unknown";
}

}  // namespace

nlohmann::json hardware_info() {
#if defined(__clang__)
  const std::string compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  const std::string compiler = "gcc " __VERSION__;
#else
  const std::string compiler = "unknown";
#endif
#ifdef NDEBUG
  const std::string build = "optimized";
#else
  const std::string build = "debug";
#endif
  return {{"cpu", read_cpu_model()},
          {"logical_cores", std::thread::hardware_concurrency()},
          {"compiler", compiler},
          {"build", build}};
}

BenchReport run_benchmark(const BenchConfig& cfg) {
  for (const auto& r : cfg.rows) r.validate();
  cfg.metric.validate();
  cfg.miner.validate();
  BenchReport report;
  report.deterministic = cfg.deterministic;
  if (!cfg.deterministic) report.hardware = hardware_info();
  warm_up(cfg);
  for (const auto& params : cfg.rows) {
    auto row = run_row(params, cfg);
    if (cfg.deterministic) row.t_initial = row.avg_t_global = row.avg_t_local = row.max_t_global = row.max_t_local = 0;
    report.rows.push_back(row);
  }
  return report;
}

nlohmann::json bench_report_to_json(const BenchReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j = {{"S", row.params.n_sequences},
                        {"s_i", row.params.sequence_length},
                        {"k", row.params.n_features},
                        {"T", row.params.n_tactics},
                        {"V", row.params.values_per_feature},
                        {"seed", row.params.seed},
                        {"recovery", row.recovery ? nlohmann::json(*row.recovery) : nlohmann::json("n/a")},
                        {"mined_tactics", row.mined_tactics},
                        {"globals_applied", row.globals_applied},
                        {"locals_applied", row.locals_applied},
                        {"locals_without_candidates", row.locals_without_candidates},
                        {"initial_score", row.initial_score},
                        {"final_score", row.final_score}};
    if (!r.deterministic) {
      j["t_i"] = row.t_initial;
      j["avg_t_g"] = row.avg_t_global;
      j["avg_t_l"] = row.avg_t_local;
      j["max_t_g"] = row.max_t_global;
      j["max_t_l"] = row.max_t_local;
    }
    rows.push_back(std::move(j));
  }
  nlohmann::json out = {{"format", "tacmine.bench"}, {"version", 1}, {"rows", std::move(rows)}};
  if (!r.deterministic) out["hardware"] = r.hardware;
  return out;
}

std::string bench_report_to_text(const BenchReport& r) {
  std::ostringstream ss;
  if (!r.deterministic)
    ss << "# cpu: " << r.hardware.value("cpu", "unknown") << ", cores: " << r.hardware.value("logical_cores", 0)
       << ", " << r.hardware.value("compiler", "") << " (" << r.hardware.value("build", "") << ")\n";
  ss << std::left << std::setw(6) << "|S|" << std::setw(7) << "|s_i|" << std::setw(4) << "k" << std::setw(5) << "|T|"
     << std::setw(5) << "|V|";
  if (!r.deterministic) ss << std::setw(10) << "t_i(s)" << std::setw(12) << "avg.t_g(s)" << std::setw(12) << "avg.t_l(s)";
  ss << "recovery\n";
  for (const auto& row : r.rows) {
    ss << std::left << std::setw(6) << row.params.n_sequences << std::setw(7) << row.params.sequence_length
       << std::setw(4) << row.params.n_features << std::setw(5) << row.params.n_tactics << std::setw(5)
       << row.params.values_per_feature;
    if (!r.deterministic) {
      ss << std::fixed << std::setprecision(2) << std::setw(10) << row.t_initial << std::setw(12) << row.avg_t_global
         << std::setprecision(3) << std::setw(12) << row.avg_t_local;
    }
    if (row.recovery)
      ss << std::fixed << std::setprecision(2) << *row.recovery;
    else
      ss << "n/a";
    ss << "\n";
  }
  return ss.str();
}

}  // namespace tacmine
