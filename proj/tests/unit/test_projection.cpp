#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tacmine/error.hpp"
#include "tacmine/projection.hpp"

using namespace tacmine;

namespace {

struct Fixture {
  Dataset d;
  std::vector<Tactic> ts;
  std::vector<std::size_t> freq;
};

Fixture fixture(std::uint64_t seed, int n = 12) {
  std::mt19937_64 rng(seed);
  Fixture f;
  f.d = oracle::random_dataset(rng, 10, 4, 10, 3, 4);
  for (int i = 0; i < n; ++i) {
    f.ts.push_back(oracle::random_tactic(rng, f.d, 4, 0.6, i + 1));
    f.freq.push_back(1 + rng() % 20);
  }
  return f;
}

std::vector<std::vector<double>> covariance(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size(), m = rows[0].size();
  std::vector<double> mean(m, 0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < m; ++j) mean[j] += r[j] / static_cast<double>(n);
  std::vector<std::vector<double>> c(m, std::vector<double>(m, 0));
  for (const auto& r : rows)
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) c[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / static_cast<double>(n);
  return c;
}

double rayleigh(const std::vector<std::vector<double>>& c, const std::vector<double>& v) {
  double num = 0, den = 0;
  for (std::size_t a = 0; a < v.size(); ++a) {
    den += v[a] * v[a];
    for (std::size_t b = 0; b < v.size(); ++b) num += v[a] * c[a][b] * v[b];
  }
  return num / den;
}

}  // namespace

TEST_SUITE("projection") {
  TEST_CASE("distance agrees with the reference and is bounded") {
    const auto f = fixture(41, 30);
    for (const auto& a : f.ts)
      for (const auto& b : f.ts) {
        const double x = tactic_distance(a, b);
        CHECK(x == doctest::Approx(oracle::edit_distance(a, b)).epsilon(1e-12));
        CHECK(x >= 0);
        CHECK(x <= 1);
        CHECK(x == doctest::Approx(tactic_distance(b, a)));
      }
    CHECK(tactic_distance(f.ts[0], f.ts[0]) == 0);
    CHECK_THROWS_AS(tactic_distance(Tactic(1, 1, {0}), Tactic(2, 2, {0, 0})), Error);
  }

  TEST_CASE("similarity vectors are unit length") {
    const auto f = fixture(42);
    const auto basis = default_basis(f.ts, f.d.schema);
    for (const auto& t : f.ts) {
      const auto v = similarity_vector(t, basis);
      double n = 0;
      for (double x : v) n += x * x;
      CHECK(n == doctest::Approx(1.0));
    }
  }

  TEST_CASE("the axis maximises the variance of the initial set") {
    for (std::uint64_t seed = 50; seed < 60; ++seed) {
      const auto f = fixture(seed);
      const auto basis = default_basis(f.ts, f.d.schema);
      const auto m = fit_projection(f.ts, f.freq, basis);
      std::vector<std::vector<double>> rows;
      for (const auto& t : f.ts) rows.push_back(similarity_vector(t, basis));
      const auto c = covariance(rows);
      std::vector<double> v(basis.tactics.size(), 1.0);
      for (int it = 0; it < 5000; ++it) {
        std::vector<double> w(v.size(), 0);
        for (std::size_t a = 0; a < v.size(); ++a)
          for (std::size_t b = 0; b < v.size(); ++b) w[a] += c[a][b] * v[b];
        double n = 0;
        for (double x : w) n += x * x;
        n = std::sqrt(n);
        if (n == 0) break;
        for (std::size_t a = 0; a < v.size(); ++a) v[a] = w[a] / n;
      }
      CHECK(rayleigh(c, m.axis()) >= rayleigh(c, v) - 1e-9);
    }
  }

  TEST_CASE("orientation, radius range and clamping") {
    const auto f = fixture(43);
    const auto m = fit_projection(f.ts, f.freq, default_basis(f.ts, f.d.schema));
    const auto top = std::max_element(f.freq.begin(), f.freq.end()) - f.freq.begin();
    CHECK(m.coordinate(f.ts[static_cast<std::size_t>(top)]) >= 0);
    double lo = 2, hi = -1;
    for (const auto& t : f.ts) {
      lo = std::min(lo, m.radius(t));
      hi = std::max(hi, m.radius(t));
    }
    CHECK(lo == doctest::Approx(kMinRadius));
    CHECK(hi == doctest::Approx(kMaxRadius));
    std::mt19937_64 rng(44);
    for (int i = 0; i < 50; ++i) {
      const auto t = oracle::random_tactic(rng, f.d, 6, 0.5, 100 + i, false);
      CHECK(m.radius(t) >= kMinRadius);
      CHECK(m.radius(t) <= kMaxRadius);
    }
  }

  TEST_CASE("angle falls in the primary feature's sector") {
    const auto f = fixture(45, 40);
    const auto m = fit_projection(f.ts, f.freq, default_basis(f.ts, f.d.schema));
    const double sector = 2 * std::numbers::pi / 3;
    for (const auto& t : f.ts) {
      std::size_t primary = 0;
      for (std::size_t x = 1; x < 3; ++x)
        if (t.non_null_count(x) > t.non_null_count(primary)) primary = x;
      const double a = m.angle(t);
      CHECK(a > static_cast<double>(primary) * sector);
      CHECK(a < static_cast<double>(primary + 1) * sector);
    }
  }

  TEST_CASE("model JSON round-trip") {
    const auto f = fixture(46);
    const auto m = fit_projection(f.ts, f.freq, default_basis(f.ts, f.d.schema));
    const auto back = ProjectionModel::from_json(m.to_json(f.d.schema), f.d.schema);
    for (const auto& t : f.ts) CHECK(back.coordinate(t) == doctest::Approx(m.coordinate(t)).epsilon(1e-12));
    CHECK(back.basis() == m.basis());
    CHECK(back.lower() == doctest::Approx(m.lower()));
    CHECK(back.upper() == doctest::Approx(m.upper()));
  }

  TEST_CASE("default basis") {
    const auto f = fixture(47, 30);
    const auto b = default_basis(f.ts, f.d.schema);
    CHECK(b.tactics.size() == kDefaultBasisSize);
    CHECK(b.names.size() == b.tactics.size());
    CHECK(b.names[0] == "shortest");
    CHECK(b.names[1] == "longest");
    for (std::size_t i = 0; i < b.tactics.size(); ++i)
      for (std::size_t j = i + 1; j < b.tactics.size(); ++j) CHECK_FALSE(b.tactics[i].same_pattern(b.tactics[j]));

    const std::vector<Tactic> one{Tactic(1, 3, {0, 0, 0})};
    const auto small = default_basis(one, f.d.schema);
    CHECK(small.tactics.size() == 2);
    CHECK_FALSE(small.tactics[0].same_pattern(small.tactics[1]));
    CHECK_THROWS_AS(default_basis(one, f.d.schema, 1), Error);
  }

  TEST_CASE("degenerate initial sets still project") {
    const auto f = fixture(48);
    const std::vector<Tactic> same{f.ts[0], f.ts[0]};
    const auto m = fit_projection(same, std::vector<std::size_t>{}, default_basis(f.ts, f.d.schema));
    CHECK(m.radius(f.ts[0]) == doctest::Approx((kMinRadius + kMaxRadius) / 2));
    CHECK_THROWS_AS(fit_projection(std::vector<Tactic>{}, {}, default_basis(f.ts, f.d.schema)), Error);
  }
}
