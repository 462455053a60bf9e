#include <doctest.h>

#include <functional>

#include "oracles.hpp"
#include "torsionscope/error.hpp"
#include "torsionscope/ph_torsion.hpp"
#include "torsionscope/random.hpp"

using namespace torsionscope;

namespace {

std::vector<long> diag_longs(const SmithNormalForm& s) {
  std::vector<long> v;
  for (const auto& d : s.diagonal) v.push_back(d.get_si());
  return v;
}

// exact determinant by cofactor expansion (k <= 6)
mpz_class det(const IntegerMatrix& m, const std::vector<std::size_t>& rows, const std::vector<std::size_t>& cols) {
  const std::size_t k = rows.size();
  if (k == 0) return 1;
  if (k == 1) return m(rows[0], cols[0]);
  mpz_class acc = 0;
  std::vector<std::size_t> rest(rows.begin() + 1, rows.end());
  for (std::size_t j = 0; j < k; ++j) {
    if (m(rows[0], cols[j]) == 0) continue;
    std::vector<std::size_t> sub;
    for (std::size_t t = 0; t < k; ++t)
      if (t != j) sub.push_back(cols[t]);
    const mpz_class term = m(rows[0], cols[j]) * det(m, rest, sub);
    acc += (j % 2 ? -term : term);
  }
  return acc;
}

void subsets(std::size_t n, std::size_t k, const std::function<void(const std::vector<std::size_t>&)>& fn) {
  std::vector<std::size_t> s(k);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t start) {
    if (pos == k) return fn(s);
    for (std::size_t i = start; i < n; ++i) {
      s[pos] = i;
      rec(pos + 1, i + 1);
    }
  };
  rec(0, 0);
}

// gcd of all k x k minors
mpz_class minor_gcd(const IntegerMatrix& m, std::size_t k) {
  mpz_class g = 0;
  subsets(m.rows, k, [&](const auto& r) {
    subsets(m.cols, k, [&](const auto& c) {
      const mpz_class d = det(m, r, c);
      mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), d.get_mpz_t());
    });
  });
  return g;
}

Filtration moebius_rel_boundary() {
  // boundary circle first, the rest of the band later
  std::vector<oracle::Simplex> tops = oracle::moebius_boundary();
  std::vector<double> births(tops.size(), 0.0);
  for (const auto& t : oracle::moebius_triangles()) {
    tops.push_back(t);
    births.push_back(1.0);
  }
  return oracle::closure_filtration(tops, births);
}

}  // namespace

TEST_CASE("Smith normal form examples") {
  CHECK(diag_longs(smith_normal_form(IntegerMatrix::from_rows({{2, 0}, {0, 3}}))) == std::vector<long>{1, 6});
  const auto z = smith_normal_form(IntegerMatrix(3, 4));
  CHECK(z.diagonal.empty());
  CHECK(z.rank == 0);
  CHECK(diag_longs(smith_normal_form(IntegerMatrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}))) ==
        std::vector<long>{1, 1, 1});
  CHECK(diag_longs(smith_normal_form(IntegerMatrix::from_rows({{2, 4, 4}, {-6, 6, 12}, {10, -4, -16}}))) ==
        std::vector<long>{2, 6, 12});
}

TEST_CASE("Smith normal form: divisibility chain and determinantal divisors") {
  Rng rng(17);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t r = 1 + rng.below(6), c = 1 + rng.below(6);
    IntegerMatrix m(r, c);
    for (auto& v : m.values) v = long(rng.below(2) ? 0 : long(rng.below(13)) - 6);
    const auto s = smith_normal_form(m);
    CAPTURE(trial);
    REQUIRE(s.diagonal.size() == s.rank);
    for (std::size_t k = 0; k < s.rank; ++k) {
      CHECK(s.diagonal[k] > 0);
      if (k) CHECK(s.diagonal[k] % s.diagonal[k - 1] == 0);
    }
    // d1...dk = gcd of k x k minors; rank is where minors vanish
    mpz_class prod = 1;
    for (std::size_t k = 1; k <= std::min(r, c); ++k) {
      const auto g = minor_gcd(m, k);
      if (k <= s.rank) {
        prod *= s.diagonal[k - 1];
        CHECK(prod == g);
      } else {
        CHECK(g == 0);
      }
    }
  }
}

TEST_CASE("large entries take the arbitrary precision path") {
  const long big = 1L << 40;
  const auto s = smith_normal_form(IntegerMatrix::from_rows({{big, big + 1}, {big - 1, big}}));
  // det = big^2 - (big^2 - 1) = 1
  CHECK(diag_longs(s) == std::vector<long>{1, 1});
  const auto t = smith_normal_form(IntegerMatrix::from_rows({{big, 0}, {0, big}}));
  CHECK(t.diagonal[1] == mpz_class(big));
}

TEST_CASE("integral homology of small complexes") {
  SUBCASE("tetrahedron") {
    const auto f = oracle::closure_filtration({{0, 1, 2, 3}});
    const auto h = integral_homology(f, 0.0, 3);
    CHECK(h.groups[0].to_string() == "Z");
    for (int d = 1; d <= 3; ++d) CHECK(h.groups[d].to_string() == "0");
  }
  SUBCASE("circle") {
    const auto h = integral_homology(oracle::closure_filtration({{0, 1}, {1, 2}, {0, 2}}), 0.0, 1);
    CHECK(h.groups[1].free_rank == 1);
    CHECK_FALSE(h.groups[1].has_torsion());
  }
  SUBCASE("projective plane") {
    const auto h = integral_homology(oracle::closure_filtration(oracle::rp2_triangles()), 0.0, 2);
    CHECK(h.groups[0].to_string() == "Z");
    CHECK(h.groups[1].to_string() == "Z/2");
    CHECK(h.groups[2].to_string() == "0");
    CHECK(h.torsion_primes() == std::vector<std::uint64_t>{2});
  }
  SUBCASE("mod 3 Moore space") {
    const auto h = integral_homology(oracle::closure_filtration(oracle::moore3_triangles()), 0.0, 2);
    CHECK(h.groups[1].to_string() == "Z/3");
    CHECK(h.groups[2].to_string() == "0");
  }
  SUBCASE("cap") {
    CHECK_THROWS_AS(integral_homology(oracle::closure_filtration(oracle::rp2_triangles()), 0.0, 2, {10}), Error);
  }
}

TEST_CASE("relative homology") {
  const auto f = moebius_rel_boundary();
  SUBCASE("Moebius band relative to its boundary") {
    const auto h = relative_integral_homology(f, 0.0, 1.0, 2);
    CHECK(h.groups[1].to_string() == "Z/2");
    CHECK(h.groups[2].to_string() == "0");
    CHECK(h.groups[0].to_string() == "0");
  }
  SUBCASE("equal radii give trivial groups") {
    const auto h = relative_integral_homology(f, 1.0, 1.0, 2);
    for (const auto& g : h.groups) CHECK(g.to_string() == "0");
  }
  SUBCASE("empty lower complex is absolute homology") {
    const auto a = relative_integral_homology_by_prefix(f, 0, f.size(), 2);
    const auto b = integral_homology(f, 1.0, 2);
    for (int d = 0; d <= 2; ++d) CHECK(a.groups[d].to_string() == b.groups[d].to_string());
  }
}

TEST_CASE("torsion_check examples") {
  SUBCASE("projective plane filtered at once") {
    const auto r = torsion_check(oracle::closure_filtration(oracle::rp2_triangles()), kDefaultTorsionPrimes, 2);
    REQUIRE(r.has_torsion);
    CHECK(r.findings.size() == 1);
    CHECK(r.findings[0].prime == 2);
    CHECK(r.summary().rfind("Torsion: (2, ", 0) == 0);
  }
  SUBCASE("Moebius band relative to boundary: 2-torsion in degree 1") {
    const auto r = torsion_check(moebius_rel_boundary(), {2, 3, 5}, 2);
    REQUIRE(r.has_torsion);
    CHECK(r.findings[0].prime == 2);
    CHECK(r.findings[0].hom_dim == 1);
  }
  SUBCASE("Moore space: 3 only") {
    const auto r = torsion_check(oracle::closure_filtration(oracle::moore3_triangles()), {2, 3, 5, 7}, 2);
    REQUIRE(r.findings.size() == 1);
    CHECK(r.findings[0].prime == 3);
  }
  SUBCASE("plain annulus") {
    LoopBandParams p;
    p.windings = 1;
    p.twist = 0;
    p.n_points = 100;
    p.seed = 0;
    const auto r = torsion_check(build_rips(generate_loop_band(p), {2, std::nullopt}), {2, 3, 5, 7}, 1);
    CHECK_FALSE(r.has_torsion);
    CHECK(r.summary() == "No Torsion");
  }
  SUBCASE("bad primes") {
    const auto f = oracle::closure_filtration({{0, 1}});
    CHECK_THROWS_AS(torsion_check(f, {4}, 1), Error);
    CHECK_THROWS_AS(torsion_check(f, {}, 1), Error);
  }
}

TEST_CASE("report invariants") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto f = oracle::random_filtration(seed);
    const auto r = torsion_check(f, {2, 3, 5}, 2);
    CHECK(r.has_torsion == !r.findings.empty());
    for (std::size_t k = 0; k < r.findings.size(); ++k) {
      CHECK(std::find(r.primes_tested.begin(), r.primes_tested.end(), r.findings[k].prime) != r.primes_tested.end());
      CHECK(r.findings[k].first_index < f.size());
      if (k) CHECK(r.findings[k - 1].prime < r.findings[k].prime);
    }
  }
}

TEST_CASE("detector agrees with the SNF scan (sample)") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const auto f = oracle::random_filtration(seed);
    const int top = std::min(f.max_dim(), 3);
    const auto fast = torsion_check(f, {2, 3, 5}, top);
    const auto slow = torsion_oracle(f, {2, 3, 5}, top);
    CAPTURE(seed);
    CHECK(fast.has_torsion == slow.has_torsion);
    std::vector<std::uint32_t> a, b;
    for (const auto& x : fast.findings) a.push_back(x.prime);
    for (const auto& x : slow.findings) b.push_back(x.prime);
    CHECK(a == b);
  }
}

TEST_CASE("no top-degree torsion below the ambient bound") {
  for (std::size_t lambda : {2u, 3u}) {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const auto c = generate_random_cloud(12, lambda, seed);
      const auto r = torsion_check(build_rips(c, {int(lambda) + 1, std::nullopt}), {2, 3, 5}, int(lambda));
      for (const auto& x : r.findings) CHECK(x.hom_dim < int(lambda) - 1);
    }
  }
}
