#include <doctest.h>

#include <cmath>

#include "checks.hpp"
#include "oracles.hpp"
#include "torsionscope/diagmetrics.hpp"
#include "torsionscope/error.hpp"

using namespace torsionscope;

TEST_CASE("distance examples") {
  const DiagramPoints a = {{0, 2}}, e = {};
  CHECK(bottleneck(a, a) == 0.0);
  CHECK(wasserstein1(a, a) == 0.0);
  CHECK(bottleneck(a, e) == 1.0);
  CHECK(wasserstein1(DiagramPoints{{0, 2}, {0, 4}}, a) == 2.0);
  CHECK(bottleneck(e, e) == 0.0);
}

TEST_CASE("distances equal the exhaustive oracle") {
  Rng rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 600; ++trial) {
    const auto a = oracle::random_diagram(rng, 6), b = oracle::random_diagram(rng, 6);
    const auto [bn, w1] = oracle::brute_force_distances(a, b);
    CAPTURE(trial);
    CHECK(std::abs(bottleneck(a, b) - bn) <= 1e-9);
    CHECK(std::abs(wasserstein1(a, b) - w1) <= 1e-9);
    ++compared;
  }
  CHECK(compared == 600);
}

TEST_CASE("metric axioms on random triples") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = oracle::random_diagram(rng, 8), b = oracle::random_diagram(rng, 8),
               c = oracle::random_diagram(rng, 8);
    for (auto* f : {+[](const DiagramPoints& x, const DiagramPoints& y) { return bottleneck(x, y); },
                    +[](const DiagramPoints& x, const DiagramPoints& y) { return wasserstein1(x, y); }}) {
      CHECK(std::abs(f(a, b) - f(b, a)) <= 1e-9);
      CHECK(f(a, c) <= f(a, b) + f(b, c) + 1e-9);
      CHECK(f(a, a) == 0.0);
    }
  }
}

TEST_CASE("infinite bars") {
  const PersistenceDiagram d1(Coefficients::prime(2), {{0, 1, 0, 0, 3}, {0, kInfinity, 0, 1, std::nullopt}}, 0);
  const PersistenceDiagram d2(Coefficients::prime(2), {{0, 1.5, 0, 0, 3}, {0.25, kInfinity, 0, 1, std::nullopt}}, 0);
  const PersistenceDiagram d3(Coefficients::prime(2), {{0, 1.5, 0, 0, 3}}, 0);
  CHECK(bottleneck(d1, d2, 0) == 0.5);
  CHECK(bottleneck(d1, d2, 0, {InfiniteBars::Match}) == 0.5);
  CHECK(bottleneck(d1, d3, 0, {InfiniteBars::Exclude}) == 0.5);
  CHECK_THROWS_AS(bottleneck(d1, d3, 0, {InfiniteBars::Match}), Error);
  // capped at 3: (0,3) vs (0.25,3) costs 0.25
  CHECK(wasserstein1(d1, d2, 0, {InfiniteBars::Cap, 3.0}) == doctest::Approx(0.75));
}

TEST_CASE("entropy") {
  CHECK(persistence_entropy(BarLengthSet({2, 2, 2, 2})) == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(persistence_entropy(BarLengthSet({5})) == 0.0);
  CHECK(persistence_entropy(BarLengthSet({1, 3})) == doctest::Approx(0.5623351446188083).epsilon(1e-14));
  CHECK_THROWS_AS(persistence_entropy(BarLengthSet()), Error);
  for (std::size_t n = 1; n <= 40; ++n) {
    const BarLengthSet equal(std::vector<double>(n, 0.37));
    CHECK(std::abs(persistence_entropy(equal) - std::log(double(n))) <= 1e-12);
  }
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> L(1 + rng.below(30));
    for (auto& l : L) l = rng.uniform(0.01, 3.0);
    const double e = persistence_entropy(BarLengthSet(L));
    CHECK(e >= 0.0);
    CHECK(e <= std::log(double(L.size())) + 1e-12);
    if (L.size() > 1) CHECK(e < std::log(double(L.size())) - 1e-12);  // distinct lengths, strictly below
  }
}

TEST_CASE("bar sets") {
  const BarLengthSet s({1, 3, 2});
  CHECK(s.total() == 6.0);
  CHECK(s.sorted_descending().lengths() == std::vector<double>{3, 2, 1});
  CHECK_THROWS_AS(BarLengthSet({1, 0}), Error);
  CHECK_THROWS_AS(BarLengthSet({1, INFINITY}), Error);
  const PersistenceDiagram d(Coefficients::prime(2), {{0, 1, 0, 0, 3}, {0, kInfinity, 0, 1, std::nullopt}, {1, 1, 1, 4, 5}},
                             1);
  CHECK(BarLengthSet::from_diagram(d, 0).size() == 1);
  CHECK(BarLengthSet::from_diagram(d, 0, 4.0).lengths() == std::vector<double>{1, 4});
  CHECK(BarLengthSet::from_diagram(d, 1).empty());
}

TEST_CASE("entropy substitution inequality") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) CHECK(checks::entropy_substitution_margin(seed) >= -1e-12);
}

TEST_CASE("maximum feature count") {
  CHECK(max_feature_count(100, 0.5) == doctest::Approx(38.62943611198906).epsilon(1e-14));
  CHECK(max_feature_count(10, 0.1) == doctest::Approx(1.7316).epsilon(1e-4));
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng.below(1000);
    const double a = rng.uniform(0.01, 0.99);
    const double direct = double(n) * (a * std::log(1 / a) - a * (1 - a)) / ((1 - a) * (1 - a));
    CHECK(std::abs(max_feature_count(n, a) - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
    CHECK(std::abs(max_feature_count(2 * n, a) - 2 * max_feature_count(n, a)) <= 1e-12 * std::abs(direct) + 1e-15);
  }
  CHECK_THROWS_AS(max_feature_count(3, 0.0), Error);
  CHECK_THROWS_AS(max_feature_count(3, 1.0), Error);
}

TEST_CASE("noise classification") {
  SUBCASE("one long bar among short ones") {
    const auto c = classify_noise(BarLengthSet({100, 1, 1, 1, 1}), 0.2);
    CHECK(c.q_bound == doctest::Approx(max_feature_count(5, 0.2)));
    CHECK(c.feature_count == 1);
    CHECK(c.features == std::vector<double>{100});
    CHECK(c.noise.size() == 4);
    CHECK(c.quotients[0] == doctest::Approx(104.0 / 5.0));
    CHECK(c.quotients[1] == doctest::Approx(1.0));
  }
  SUBCASE("equal bars stop at the first step") {
    const auto c = classify_noise(BarLengthSet({1, 1, 1, 1}), 0.05);
    CHECK(c.feature_count == 0);
    CHECK(c.quotients.size() == 1);
  }
  SUBCASE("unsorted input is rejected") { CHECK_THROWS_AS(classify_noise(BarLengthSet({1, 2}), 0.5), Error); }
  SUBCASE("empty set is rejected") { CHECK_THROWS_AS(classify_noise(BarLengthSet(), 0.5), Error); }
}

TEST_CASE("minimum feature length bound") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> R(2 + rng.below(10));
    for (auto& l : R) l = rng.uniform(0.1, 1.0);
    std::sort(R.rbegin(), R.rend());
    const BarLengthSet rs(R);
    const double m = min_feature_length(rs);
    CHECK(m == doctest::Approx(rs.total() / std::exp(persistence_entropy(rs))));
    // a bar put in front of R: the first quotient (l + P) / (P + m) crosses 1 at l = m
    const double l = R.front() * (1 + 1e-6);
    std::vector<double> L{l};
    L.insert(L.end(), R.begin(), R.end());
    const auto c = classify_noise(BarLengthSet(L), 0.999);
    CHECK(c.quotients[0] == doctest::Approx((l + rs.total()) / (rs.total() + m)).epsilon(1e-12));
    CHECK(m <= R.front() * (1 + 1e-12));
    CHECK(c.quotients[0] > 1.0);
  }
  // equal bars: the bound is the common length, so a bar just below it
  // gives a quotient below 1 and one just above a quotient above 1
  const BarLengthSet eq(std::vector<double>(6, 0.5));
  const double m = min_feature_length(eq);
  CHECK(m == doctest::Approx(0.5).epsilon(1e-14));
  for (double f : {1 + 1e-6, 1 - 1e-6}) {
    const double l = m * f;
    const double C = (l + eq.total()) / (eq.total() + m);
    CHECK((C > 1.0) == (f > 1.0));
  }
}

TEST_CASE("minimum torsion bottleneck") {
  const PersistenceDiagram one(Coefficients::prime(2), {{0, 2, 1, 0, 1}}, 1);
  CHECK(min_torsion_bottleneck(one) == 1.0);
  const PersistenceDiagram two(Coefficients::prime(2), {{0, 2, 1, 0, 1}, {1, 1.5, 1, 2, 3}}, 1);
  CHECK(min_torsion_bottleneck(two) == 0.25);
  CHECK_THROWS_AS(min_torsion_bottleneck(PersistenceDiagram()), Error);

  // latent with one extra bar matched to the diagonal
  const DiagramPoints in = {{0, 2}, {1, 1.5}};
  DiagramPoints latent = in;
  latent.emplace_back(0.2, 0.2 + 2 * 0.3);  // persistence 0.6 > 2 * 0.25
  CHECK(bottleneck(in, latent) >= min_torsion_bottleneck(two) - 1e-9);
}

TEST_CASE("scale ratios") {
  const auto s = scale_ratios(PointCloud(2, {0, 0, 1, 0, 1, 1, 0, 1}));
  CHECK(s.r == 1.0);
  CHECK(s.T == doctest::Approx(std::sqrt(2.0) / 2));
  REQUIRE(s.candidates.size() == 2);
  for (double a : s.candidates) CHECK((a > 0 && a < 1));
  CHECK_THROWS_AS(scale_ratios(PointCloud(2, {0, 0, 0, 0})), Error);
}
