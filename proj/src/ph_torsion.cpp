#include "torsionscope/ph_torsion.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "torsionscope/error.hpp"

namespace torsionscope {

IntegerMatrix IntegerMatrix::from_rows(const std::vector<std::vector<long>>& rows) {
  IntegerMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    require(rows[i].size() == m.cols, ErrorCode::InvalidArgument, "ragged matrix rows");
    for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

namespace {

struct Overflow {};

inline std::int64_t ck_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw Overflow{};
  return r;
}
inline std::int64_t ck_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw Overflow{};
  return r;
}
inline mpz_class ck_mul(const mpz_class& a, const mpz_class& b) { return a * b; }
inline mpz_class ck_sub(const mpz_class& a, const mpz_class& b) { return a - b; }
inline std::int64_t mag(std::int64_t a) {
  if (a == INT64_MIN) throw Overflow{};
  return a < 0 ? -a : a;
}
inline mpz_class mag(const mpz_class& a) { return abs(a); }
inline bool nz(std::int64_t a) { return a != 0; }
inline bool nz(const mpz_class& a) { return sgn(a) != 0; }
inline std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a / b; }  // truncation is fine here
inline mpz_class floor_div(const mpz_class& a, const mpz_class& b) {
  mpz_class q;
  mpz_tdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}
inline std::int64_t gcd_v(std::int64_t a, std::int64_t b) { return std::gcd(a, b); }
inline mpz_class gcd_v(const mpz_class& a, const mpz_class& b) {
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}
inline mpz_class to_mpz(std::int64_t a) {
  mpz_class z;
  mpz_set_si(z.get_mpz_t(), a);
  return z;
}
inline mpz_class to_mpz(const mpz_class& a) { return a; }

/// Diagonalizes by elementary row/column operations, then fixes the
/// divisibility chain with gcd/lcm exchanges.
template <typename V>
std::vector<V> snf_diagonal(std::vector<V> a, std::size_t m, std::size_t n) {
  auto at = [&](std::size_t i, std::size_t j) -> V& { return a[i * n + j]; };
  std::vector<V> diag;
  const std::size_t lim = std::min(m, n);
  for (std::size_t t = 0; t < lim; ++t) {
    // smallest nonzero magnitude in the trailing block
    std::size_t pi = m, pj = n;
    V best{};
    for (std::size_t i = t; i < m; ++i)
      for (std::size_t j = t; j < n; ++j)
        if (nz(at(i, j)) && (pi == m || mag(at(i, j)) < best)) {
          best = mag(at(i, j));
          pi = i;
          pj = j;
        }
    if (pi == m) break;
    for (;;) {
      if (pi != t)
        for (std::size_t j = t; j < n; ++j) std::swap(at(pi, j), at(t, j));
      if (pj != t)
        for (std::size_t i = t; i < m; ++i) std::swap(at(i, pj), at(i, t));
      const V piv = at(t, t);
      bool clean = true;
      for (std::size_t i = t + 1; i < m; ++i) {
        if (!nz(at(i, t))) continue;
        const V qt = floor_div(at(i, t), piv);
        if (nz(qt))
          for (std::size_t j = t; j < n; ++j)
            if (nz(at(t, j))) at(i, j) = ck_sub(at(i, j), ck_mul(qt, at(t, j)));
        if (nz(at(i, t))) clean = false;
      }
      for (std::size_t j = t + 1; j < n; ++j) {
        if (!nz(at(t, j))) continue;
        const V qt = floor_div(at(t, j), piv);
        if (nz(qt))
          for (std::size_t i = t; i < m; ++i)
            if (nz(at(i, t))) at(i, j) = ck_sub(at(i, j), ck_mul(qt, at(i, t)));
        if (nz(at(t, j))) clean = false;
      }
      if (clean) break;
      // a remainder survived: move the smallest one onto the pivot
      pi = t;
      pj = t;
      best = mag(at(t, t));
      for (std::size_t i = t + 1; i < m; ++i)
        if (nz(at(i, t)) && mag(at(i, t)) < best) {
          best = mag(at(i, t));
          pi = i;
          pj = t;
        }
      for (std::size_t j = t + 1; j < n; ++j)
        if (nz(at(t, j)) && mag(at(t, j)) < best) {
          best = mag(at(t, j));
          pi = t;
          pj = j;
        }
    }
    diag.push_back(mag(at(t, t)));
  }
  // divisibility chain
  for (std::size_t i = 0; i < diag.size(); ++i)
    for (std::size_t j = i + 1; j < diag.size(); ++j) {
      const V g = gcd_v(diag[i], diag[j]);
      if (g == diag[i]) continue;
      const V l = ck_mul(floor_div(diag[i], g), diag[j]);
      diag[i] = g;
      diag[j] = l;
    }
  return diag;
}

}  // namespace

SmithNormalForm smith_normal_form(const IntegerMatrix& matrix) {
  require(matrix.values.size() == matrix.rows * matrix.cols, ErrorCode::InvalidArgument,
          "matrix storage does not match its shape");
  SmithNormalForm out;
  bool small = true;
  for (const auto& v : matrix.values)
    if (!v.fits_slong_p() || abs(v) > mpz_class(1) << 31) {
      small = false;
      break;
    }
  if (small) {
    try {
      std::vector<std::int64_t> a(matrix.values.size());
      for (std::size_t k = 0; k < a.size(); ++k) a[k] = matrix.values[k].get_si();
      for (auto d : snf_diagonal(std::move(a), matrix.rows, matrix.cols)) out.diagonal.push_back(to_mpz(d));
      out.rank = out.diagonal.size();
      return out;
    } catch (const Overflow&) {
      out.diagonal.clear();
    }
  }
  out.diagonal = snf_diagonal(matrix.values, matrix.rows, matrix.cols);
  out.rank = out.diagonal.size();
  return out;
}

// ----------------------------------------------------------- integral homology

std::string HomologyGroup::to_string() const {
  std::string s;
  if (free_rank > 0) s = free_rank == 1 ? "Z" : "Z^" + std::to_string(free_rank);
  for (const auto& t : torsion) {
    if (!s.empty()) s += " + ";
    s += "Z/" + t.get_str();
  }
  return s.empty() ? "0" : s;
}

std::vector<std::uint64_t> IntegralHomologySummary::torsion_primes() const {
  std::set<std::uint64_t> primes;
  for (const auto& g : groups)
    for (mpz_class t : g.torsion) {
      for (mpz_class p = 2; p * p <= t; ++p)
        while (t % p == 0) {
          primes.insert(p.get_ui());
          t /= p;
        }
      if (t > 1) primes.insert(t.get_ui());
    }
  return {primes.begin(), primes.end()};
}

namespace {

/// Homology of the chain complex spanned by filtration simplices in
/// [lower, upper), with boundary entries outside the range dropped.
IntegralHomologySummary range_homology(const Filtration& f, const BoundaryMatrix& bd, std::size_t lower,
                                       std::size_t upper, int max_hom_dim) {
  const int top = std::max(f.max_dim(), 0);
  std::vector<std::vector<std::size_t>> by_dim(std::size_t(top) + 2);
  for (std::size_t i = lower; i < upper; ++i) by_dim[std::size_t(f.dim(i))].push_back(i);

  // rank and SNF of the boundary from dim p to p-1, p = 1..max_hom_dim+1
  std::vector<SmithNormalForm> snf(std::size_t(max_hom_dim) + 2);
  for (int p = 1; p <= max_hom_dim + 1; ++p) {
    if (p > top) continue;
    const auto& cols = by_dim[std::size_t(p)];
    const auto& rows = by_dim[std::size_t(p - 1)];
    if (cols.empty() || rows.empty()) continue;
    std::map<std::size_t, std::size_t> row_pos;
    for (std::size_t r = 0; r < rows.size(); ++r) row_pos[rows[r]] = r;
    IntegerMatrix m(rows.size(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c)
      for (const auto& e : bd.column(cols[c])) {
        auto it = row_pos.find(e.row);
        if (it != row_pos.end()) m(it->second, c) = e.coeff;
      }
    snf[std::size_t(p)] = smith_normal_form(m);
  }

  IntegralHomologySummary out;
  for (int p = 0; p <= max_hom_dim; ++p) {
    HomologyGroup g;
    g.dim = p;
    const std::size_t np = p <= top ? by_dim[std::size_t(p)].size() : 0;
    const std::size_t rank_in = snf[std::size_t(p)].rank;  // rank of boundary out of dim p
    const std::size_t rank_out = snf[std::size_t(p) + 1].rank;
    g.free_rank = np - rank_in - rank_out;
    for (const auto& d : snf[std::size_t(p) + 1].diagonal)
      if (d > 1) g.torsion.push_back(d);
    out.groups.push_back(std::move(g));
  }
  return out;
}

}  // namespace

IntegralHomologySummary relative_integral_homology_by_prefix(const Filtration& f, std::size_t lower,
                                                             std::size_t upper, int max_hom_dim,
                                                             const OracleLimits& limits) {
  require(max_hom_dim >= 0, ErrorCode::InvalidArgument, "max_hom_dim must be nonnegative");
  require(lower <= upper && upper <= f.size(), ErrorCode::InvalidArgument, "invalid prefix pair");
  require(upper - lower <= limits.simplex_cap, ErrorCode::CapacityExceeded,
          "relative complex has " + std::to_string(upper - lower) + " simplices, above the oracle cap of " +
              std::to_string(limits.simplex_cap));
  return range_homology(f, boundary_matrix(f), lower, upper, max_hom_dim);
}

IntegralHomologySummary integral_homology(const Filtration& f, double radius, int max_hom_dim,
                                          const OracleLimits& limits) {
  return relative_integral_homology_by_prefix(f, 0, f.prefix_size(radius), max_hom_dim, limits);
}

IntegralHomologySummary relative_integral_homology(const Filtration& f, double radius_j, double radius_i,
                                                   int max_hom_dim, const OracleLimits& limits) {
  require(radius_j <= radius_i, ErrorCode::InvalidArgument, "radius_j must not exceed radius_i");
  return relative_integral_homology_by_prefix(f, f.prefix_size(radius_j), f.prefix_size(radius_i),
                                              max_hom_dim, limits);
}

// ----------------------------------------------------------------- detection

const TorsionFinding* TorsionReport::earliest() const {
  const TorsionFinding* best = nullptr;
  for (const auto& f : findings)
    if (!best || f.first_index < best->first_index) best = &f;
  return best;
}

std::string TorsionReport::summary() const {
  if (!has_torsion) return "No Torsion";
  const auto* e = earliest();
  return "Torsion: (" + std::to_string(e->prime) + ", " + std::to_string(e->first_index) + ")";
}

namespace {

void validate_primes(const std::vector<std::uint32_t>& primes) {
  require(!primes.empty(), ErrorCode::InvalidArgument, "prime list must not be empty");
  for (auto q : primes) require(is_prime(q), ErrorCode::InvalidArgument, std::to_string(q) + " is not prime");
}

std::vector<std::int64_t> pivots(const PersistenceDiagram& d, std::size_t n) {
  std::vector<std::int64_t> low(n, -1);
  for (const auto& p : d.pairs())
    if (p.death_index) low[*p.death_index] = std::int64_t(p.birth_index);
  return low;
}

std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

TorsionReport torsion_check(const Filtration& f, const std::vector<std::uint32_t>& primes, int max_hom_dim) {
  validate_primes(primes);
  require(max_hom_dim >= 0, ErrorCode::InvalidArgument, "max_hom_dim must be nonnegative");
  TorsionReport report;
  report.primes_tested = sorted_unique(primes);
  report.method = TorsionMethod::PrimeComparison;
  if (f.size() == 0) return report;

  const BoundaryMatrix bd = boundary_matrix(f);
  const auto rational = pivots(reduce(f, bd, Coefficients::rational(), max_hom_dim), f.size());
  for (auto q : report.primes_tested) {
    const auto modq = pivots(reduce(f, bd, Coefficients::prime(q), max_hom_dim), f.size());
    for (std::size_t j = 0; j < f.size(); ++j)
      if (rational[j] != modq[j]) {
        report.findings.push_back({q, j, f.dim(j) - 1});
        break;
      }
  }
  report.has_torsion = !report.findings.empty();
  return report;
}

TorsionReport torsion_oracle(const Filtration& f, const std::vector<std::uint32_t>& primes, int max_hom_dim,
                             const OracleLimits& limits) {
  validate_primes(primes);
  require(max_hom_dim >= 0, ErrorCode::InvalidArgument, "max_hom_dim must be nonnegative");
  require(f.size() <= limits.simplex_cap, ErrorCode::CapacityExceeded,
          "filtration has " + std::to_string(f.size()) + " simplices, above the oracle cap of " +
              std::to_string(limits.simplex_cap));
  TorsionReport report;
  report.primes_tested = sorted_unique(primes);
  report.method = TorsionMethod::SnfOracle;
  if (f.size() == 0) return report;

  const BoundaryMatrix bd = boundary_matrix(f);
  const int top = std::min(max_hom_dim + 1, f.max_dim());
  std::set<std::uint32_t> found;
  for (std::size_t b = 0; b < f.size() && found.size() < report.primes_tested.size(); ++b) {
    // a new column only changes the SNF when it enters some boundary block
    if (f.dim(b) < 1 || f.dim(b) > top) continue;
    std::set<std::uint32_t> here;
    for (std::size_t a = 0; a <= b; ++a) {
      const auto h = range_homology(f, bd, a, b + 1, top - 1);
      for (auto p : h.torsion_primes())
        if (std::binary_search(report.primes_tested.begin(), report.primes_tested.end(), std::uint32_t(p)) &&
            !found.count(std::uint32_t(p)))
          here.insert(std::uint32_t(p));
    }
    for (auto q : here) {
      found.insert(q);
      report.findings.push_back({q, b, f.dim(b) - 1});
    }
  }
  std::sort(report.findings.begin(), report.findings.end(),
            [](const auto& x, const auto& y) { return x.prime < y.prime; });
  report.has_torsion = !report.findings.empty();
  return report;
}

}  // namespace torsionscope
