#include "tacmine/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

#include <Eigen/Eigenvalues>

#include "tacmine/error.hpp"
#include "tacmine/io.hpp"

namespace tacmine {
namespace {

double substitution_cost(const Tactic& a, std::size_t ea, const Tactic& b, std::size_t eb) {
  double cost = 0;
  for (std::size_t f = 0; f < a.k; ++f) {
    const ValueId x = a.at(ea, f);
    const ValueId y = b.at(eb, f);
    if (x == y) continue;
    cost += (x == kNull || y == kNull) ? 0.5 : 1.0;
  }
  return cost / static_cast<double>(a.k);
}

}  // namespace

double tactic_distance(const Tactic& a, const Tactic& b) {
  if (a.k != b.k) throw Error(ErrorCode::kInvalidArgument, "tactic_distance: feature counts differ");
  const std::size_t n = a.length();
  const std::size_t m = b.length();
  if (n == 0 && m == 0) return 0;
  std::vector<double> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<double>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<double>(i);
    for (std::size_t j = 1; j <= m; ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + substitution_cost(a, i - 1, b, j - 1)});
    std::swap(prev, cur);
  }
  return prev[m] / static_cast<double>(std::max(n, m));
}

BasisSet default_basis(std::span<const Tactic> tactics, const FeatureSchema& schema, std::size_t size) {
  if (size < 2) throw Error(ErrorCode::kInvalidArgument, "basis: need at least two tactics");
  const std::size_t k = schema.size();
  std::vector<const Tactic*> pool;
  std::unordered_set<Tactic, PatternHash, PatternEqual> distinct;
  for (const auto& t : tactics)
    if (distinct.insert(t).second) pool.push_back(&t);
  std::sort(pool.begin(), pool.end(), [](const Tactic* a, const Tactic* b) { return a->id < b->id; });

  BasisSet basis;
  std::unordered_set<const Tactic*> used;
  auto take = [&](const Tactic* t, const std::string& name) {
    if (!t || used.count(t) || basis.tactics.size() >= size) return;
    used.insert(t);
    basis.tactics.push_back(*t);
    basis.names.push_back(name);
  };
  // Strict comparisons keep the lowest id among ties.
  auto best = [&](auto better) {
    const Tactic* pick = nullptr;
    for (const Tactic* t : pool)
      if (!used.count(t) && (!pick || better(*t, *pick))) pick = t;
    return pick;
  };
  take(best([](const Tactic& a, const Tactic& b) { return a.length() < b.length(); }), "shortest");
  take(best([](const Tactic& a, const Tactic& b) { return a.length() > b.length(); }), "longest");
  for (std::size_t f = 0; f < k; ++f)
    take(best([f](const Tactic& a, const Tactic& b) { return a.non_null_count(f) > b.non_null_count(f); }),
         schema.feature(f).name + "-specific");
  while (basis.tactics.size() < size) {
    const Tactic* t = best([](const Tactic& a, const Tactic& b) { return a.non_null_count() > b.non_null_count(); });
    if (!t) break;
    take(t, "specific-" + std::to_string(basis.tactics.size() + 1));
  }
  for (std::size_t f = 0; basis.tactics.size() < 2; ++f) {
    Tactic t(0, k, std::vector<ValueId>(k, kNull));
    t.at(0, f % k) = static_cast<ValueId>(f / k % schema.value_count(f % k));
    if (std::any_of(basis.tactics.begin(), basis.tactics.end(), [&](const Tactic& b) { return b.same_pattern(t); }))
      continue;
    basis.tactics.push_back(std::move(t));
    basis.names.push_back("filler-" + std::to_string(basis.tactics.size()));
  }
  for (std::size_t i = 0; i < basis.tactics.size(); ++i) {
    basis.tactics[i].id = static_cast<int>(i + 1);
    basis.tactics[i].pinned = false;
  }
  return basis;
}

std::vector<double> similarity_vector(const Tactic& t, const BasisSet& basis) {
  const std::size_t b = basis.tactics.size();
  std::vector<double> v(b);
  double norm2 = 0;
  for (std::size_t i = 0; i < b; ++i) {
    v[i] = 1.0 - tactic_distance(t, basis.tactics[i]);
    norm2 += v[i] * v[i];
  }
  if (norm2 <= 0) {
    std::fill(v.begin(), v.end(), 1.0 / std::sqrt(static_cast<double>(b)));
    return v;
  }
  const double norm = std::sqrt(norm2);
  for (double& x : v) x /= norm;
  return v;
}

double ProjectionModel::coordinate(const Tactic& t) const {
  const auto v = similarity_vector(t, basis_);
  double x = 0;
  for (std::size_t i = 0; i < v.size(); ++i) x += (v[i] - center_[i]) * axis_[i];
  return x;
}

double ProjectionModel::radius(const Tactic& t) const {
  if (upper_ - lower_ <= 1e-12) return (kMinRadius + kMaxRadius) / 2;
  const double u = (coordinate(t) - lower_) / (upper_ - lower_);
  return std::clamp(kMinRadius + u * (kMaxRadius - kMinRadius), kMinRadius, kMaxRadius);
}

std::pair<std::size_t, std::size_t> top_two_features(const Tactic& t) {
  std::size_t primary = 0;
  for (std::size_t f = 1; f < t.k; ++f)
    if (t.non_null_count(f) > t.non_null_count(primary)) primary = f;
  std::optional<std::size_t> secondary;
  for (std::size_t f = 0; f < t.k; ++f) {
    if (f == primary) continue;
    if (!secondary || t.non_null_count(f) > t.non_null_count(*secondary)) secondary = f;
  }
  return {primary, secondary.value_or(primary)};
}

double ProjectionModel::angle(const Tactic& t) const {
  const double sector = 2 * std::numbers::pi / static_cast<double>(k_);
  const auto [primary, secondary] = top_two_features(t);
  if (k_ < 2) return sector / 2;
  // Rank of the secondary among the features other than the primary.
  const std::size_t rank = secondary - (secondary > primary ? 1 : 0);
  const double sub = sector / static_cast<double>(k_ - 1);
  return static_cast<double>(primary) * sector + (static_cast<double>(rank) + 0.5) * sub;
}

ProjectionModel fit_projection(std::span<const Tactic> initial, std::span<const std::size_t> freq, BasisSet basis) {
  if (initial.empty()) throw Error(ErrorCode::kInvalidArgument, "projection: empty initial set");
  if (basis.tactics.size() < 2) throw Error(ErrorCode::kInvalidArgument, "projection: basis needs at least two tactics");
  if (!freq.empty() && freq.size() != initial.size())
    throw Error(ErrorCode::kInvalidArgument, "projection: frequency list does not match the tactic list");
  for (const auto& b : basis.tactics)
    if (b.k != initial.front().k) throw Error(ErrorCode::kInvalidArgument, "projection: basis feature count differs");

  ProjectionModel m;
  m.k_ = initial.front().k;
  m.basis_ = std::move(basis);
  const std::size_t dim = m.basis_.tactics.size();
  const std::size_t n = initial.size();

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = similarity_vector(initial[i], m.basis_);
    for (std::size_t j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v[j];
  }
  const Eigen::VectorXd mean = x.colwise().mean();
  m.center_.assign(mean.data(), mean.data() + dim);

  bool distinct = false;
  for (Eigen::Index i = 1; i < x.rows() && !distinct; ++i) distinct = x.row(i) != x.row(0);
  Eigen::VectorXd axis = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  axis(0) = 1;
  if (distinct) {
    const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // Eigenvalues come in ascending order.
    if (solver.info() == Eigen::Success && solver.eigenvalues()(static_cast<Eigen::Index>(dim) - 1) > 1e-15)
      axis = solver.eigenvectors().col(static_cast<Eigen::Index>(dim) - 1).normalized();
  }
  m.axis_.assign(axis.data(), axis.data() + dim);

  std::size_t top = 0;
  for (std::size_t i = 1; i < freq.size(); ++i)
    if (freq[i] > freq[top]) top = i;
  if (m.coordinate(initial[top]) < 0)
    for (double& a : m.axis_) a = -a;

  m.lower_ = m.upper_ = m.coordinate(initial[0]);
  for (const auto& t : initial) {
    const double c = m.coordinate(t);
    m.lower_ = std::min(m.lower_, c);
    m.upper_ = std::max(m.upper_, c);
  }
  return m;
}

ProjectedPoint project(const ProjectionModel& model, const Tactic& t, const TacticStats& stats) {
  return {t.id, model.angle(t), model.radius(t), stats.freq, stats.importance, stats.win_rate};
}

nlohmann::json ProjectionModel::to_json(const FeatureSchema& schema) const {
  return {{"basis", tactics_to_json(basis_.tactics, schema)},
          {"basis_names", basis_.names},
          {"axis", axis_},
          {"center", center_},
          {"lower", lower_},
          {"upper", upper_},
          {"k", k_}};
}

ProjectionModel ProjectionModel::from_json(const nlohmann::json& j, const FeatureSchema& schema) {
  ProjectionModel m;
  try {
    m.basis_.tactics = tactics_from_json(j.at("basis"), schema);
    m.basis_.names = j.at("basis_names").get<std::vector<std::string>>();
    m.axis_ = j.at("axis").get<std::vector<double>>();
    m.center_ = j.at("center").get<std::vector<double>>();
    m.lower_ = j.at("lower").get<double>();
    m.upper_ = j.at("upper").get<double>();
    m.k_ = j.at("k").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("projection model: ") + e.what());
  }
  const std::size_t dim = m.basis_.tactics.size();
  if (dim < 2 || m.axis_.size() != dim || m.center_.size() != dim || m.basis_.names.size() != dim)
    throw Error(ErrorCode::kValidation, "projection model: basis, axis and center sizes disagree");
  return m;
}

}  // namespace tacmine
