#include "torsionscope/ph_field.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <numeric>
#include <tuple>

#include <gmpxx.h>

#include "torsionscope/error.hpp"

namespace torsionscope {

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

Coefficients Coefficients::prime(std::uint32_t q) {
  require(is_prime(q), ErrorCode::InvalidArgument, std::to_string(q) + " is not prime");
  return Coefficients(Kind::Prime, q);
}

Coefficients Coefficients::parse(const std::string& text) {
  std::string t;
  for (char c : text) t += char(std::tolower(static_cast<unsigned char>(c)));
  if (t == "rational" || t == "q" || t == "qq") return rational();
  if (!t.empty() && t[0] == 'q') t = t.substr(1);
  require(!t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(c); }),
          ErrorCode::InvalidArgument, "invalid coefficient '" + text + "'");
  const unsigned long long q = std::stoull(t);
  require(q <= UINT32_MAX, ErrorCode::InvalidArgument, "prime too large");
  return prime(std::uint32_t(q));
}

std::string Coefficients::name() const {
  return is_rational() ? std::string("rational") : "q" + std::to_string(q_);
}

PersistenceDiagram::PersistenceDiagram(Coefficients coeffs, std::vector<PersistencePair> pairs,
                                       int max_hom_dim)
    : coefficients_(coeffs), pairs_(std::move(pairs)), max_hom_dim_(max_hom_dim) {
  std::sort(pairs_.begin(), pairs_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dim, a.birth_index) < std::tie(b.dim, b.birth_index);
  });
}

std::vector<PersistencePair> PersistenceDiagram::view(int dim) const {
  std::vector<PersistencePair> out;
  for (const auto& p : pairs_)
    if (p.dim == dim && p.death > p.birth) out.push_back(p);
  return out;
}

std::vector<PersistencePair> PersistenceDiagram::all_in_dim(int dim) const {
  std::vector<PersistencePair> out;
  for (const auto& p : pairs_)
    if (p.dim == dim) out.push_back(p);
  return out;
}

bool PersistenceDiagram::same_intervals(const PersistenceDiagram& other, int dim) const {
  auto key = [](const PersistenceDiagram& d, int k) {
    std::vector<std::pair<double, double>> v;
    for (const auto& p : d.view(k)) v.emplace_back(p.birth, p.death);
    std::sort(v.begin(), v.end());
    return v;
  };
  return key(*this, dim) == key(other, dim);
}

// ------------------------------------------------------------------ reduction

namespace {

struct OverflowSignal {};

/// Z/qZ with q < 2^32.
struct ModPRing {
  using Value = std::uint32_t;
  std::uint64_t q;

  Value from_int(int c) const { return c >= 0 ? Value(c % q) : Value((q - (std::uint64_t(-c) % q)) % q); }
  Value inverse(Value a) const {
    // extended Euclid
    std::int64_t t = 0, nt = 1, r = std::int64_t(q), nr = a;
    while (nr) {
      const std::int64_t quo = r / nr;
      std::tie(t, nt) = std::make_tuple(nt, t - quo * nt);
      std::tie(r, nr) = std::make_tuple(nr, r - quo * nr);
    }
    if (t < 0) t += std::int64_t(q);
    return Value(t);
  }
  Value mul(Value a, Value b) const { return Value(std::uint64_t(a) * b % q); }
  // a - f * b
  Value sub_mul(Value a, Value f, Value b) const {
    const std::uint64_t fb = std::uint64_t(f) * b % q;
    return Value((a + q - fb) % q);
  }
};

template <typename V>
struct Column {
  std::vector<std::uint32_t> rows;
  std::vector<V> vals;
  bool empty() const { return rows.empty(); }
  std::uint32_t low() const { return rows.back(); }
};

// col <- col - f * pivot (mod q), merged by row
void eliminate_modp(const ModPRing& ring, Column<std::uint32_t>& col, const Column<std::uint32_t>& pivot,
                    std::uint32_t f, Column<std::uint32_t>& scratch) {
  scratch.rows.clear();
  scratch.vals.clear();
  std::size_t a = 0, b = 0;
  while (a < col.rows.size() || b < pivot.rows.size()) {
    if (b == pivot.rows.size() || (a < col.rows.size() && col.rows[a] < pivot.rows[b])) {
      scratch.rows.push_back(col.rows[a]);
      scratch.vals.push_back(col.vals[a]);
      ++a;
    } else if (a == col.rows.size() || pivot.rows[b] < col.rows[a]) {
      const auto v = ring.sub_mul(0, f, pivot.vals[b]);
      scratch.rows.push_back(pivot.rows[b]);
      scratch.vals.push_back(v);
      ++b;
    } else {
      const auto v = ring.sub_mul(col.vals[a], f, pivot.vals[b]);
      if (v) {
        scratch.rows.push_back(col.rows[a]);
        scratch.vals.push_back(v);
      }
      ++a;
      ++b;
    }
  }
  std::swap(col, scratch);
}

// Integer arithmetic helpers: int64 with overflow signalling, or GMP.
inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowSignal{};
  return r;
}
inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw OverflowSignal{};
  return r;
}
inline std::int64_t gcd_of(std::int64_t a, std::int64_t b) { return std::gcd(a, b); }
inline mpz_class gcd_of(const mpz_class& a, const mpz_class& b) {
  mpz_class g;
  mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return g;
}
inline std::int64_t ring_mul(std::int64_t a, std::int64_t b) { return checked_mul(a, b); }
inline mpz_class ring_mul(const mpz_class& a, const mpz_class& b) { return a * b; }
inline std::int64_t ring_sub(std::int64_t a, std::int64_t b) { return checked_sub(a, b); }
inline mpz_class ring_sub(const mpz_class& a, const mpz_class& b) { return a - b; }
inline bool is_zero(std::int64_t a) { return a == 0; }
inline bool is_zero(const mpz_class& a) { return sgn(a) == 0; }
inline bool is_negative(std::int64_t a) { return a < 0; }
inline bool is_negative(const mpz_class& a) { return sgn(a) < 0; }
inline bool is_one(std::int64_t a) { return a == 1; }
inline bool is_one(const mpz_class& a) { return a == 1; }
inline std::int64_t abs_of(std::int64_t a) {
  if (a == INT64_MIN) throw OverflowSignal{};
  return a < 0 ? -a : a;
}
inline mpz_class abs_of(const mpz_class& a) { return abs(a); }

// col <- (a/g) col - (b/g) pivot, then divide out the content
template <typename V>
void eliminate_integer(Column<V>& col, const Column<V>& pivot, Column<V>& scratch) {
  const V a = pivot.vals.back();
  const V b = col.vals.back();
  const V g = gcd_of(abs_of(a), abs_of(b));
  const V ca = a / g, cb = b / g;
  scratch.rows.clear();
  scratch.vals.clear();
  std::size_t i = 0, k = 0;
  while (i < col.rows.size() || k < pivot.rows.size()) {
    if (k == pivot.rows.size() || (i < col.rows.size() && col.rows[i] < pivot.rows[k])) {
      scratch.rows.push_back(col.rows[i]);
      scratch.vals.push_back(ring_mul(ca, col.vals[i]));
      ++i;
    } else if (i == col.rows.size() || pivot.rows[k] < col.rows[i]) {
      scratch.rows.push_back(pivot.rows[k]);
      scratch.vals.push_back(ring_sub(V(0), ring_mul(cb, pivot.vals[k])));
      ++k;
    } else {
      V v = ring_sub(ring_mul(ca, col.vals[i]), ring_mul(cb, pivot.vals[k]));
      if (!is_zero(v)) {
        scratch.rows.push_back(col.rows[i]);
        scratch.vals.push_back(std::move(v));
      }
      ++i;
      ++k;
    }
  }
  std::swap(col, scratch);
  if (col.empty()) return;
  V content = abs_of(col.vals[0]);
  for (std::size_t t = 1; t < col.vals.size() && !is_one(content); ++t) content = gcd_of(content, abs_of(col.vals[t]));
  const bool flip = is_negative(col.vals.back());
  if (!is_one(content) || flip) {
    if (flip) content = ring_sub(V(0), content);
    for (auto& v : col.vals) v /= content;
  }
}

struct PairingResult {
  // low_of[j] = row paired with column j, or -1
  std::vector<std::int64_t> low_of;
};

/// Dimension range of columns to reduce.
std::pair<int, int> column_dims(const Filtration& f, int max_hom_dim) {
  const int top = std::min(max_hom_dim + 1, f.max_dim());
  return {1, top};
}

PairingResult reduce_modp(const Filtration& f, const BoundaryMatrix& bd, std::uint32_t q, int max_hom_dim) {
  const ModPRing ring{q};
  const std::size_t n = f.size();
  PairingResult res;
  res.low_of.assign(n, -1);
  std::vector<std::int64_t> pivot_col(n, -1);  // row -> column
  std::vector<Column<std::uint32_t>> reduced(n);
  std::vector<bool> cleared(n, false);
  Column<std::uint32_t> col, scratch;
  const auto [lo, hi] = column_dims(f, max_hom_dim);
  for (int p = hi; p >= lo; --p) {
    for (std::size_t j = 0; j < n; ++j) {
      if (f.dim(j) != p || cleared[j]) continue;
      col.rows.clear();
      col.vals.clear();
      for (const auto& e : bd.column(j)) {
        col.rows.push_back(e.row);
        col.vals.push_back(ring.from_int(e.coeff));
      }
      while (!col.empty()) {
        const std::int64_t k = pivot_col[col.low()];
        if (k < 0) break;
        const auto& piv = reduced[std::size_t(k)];
        // pivot columns are normalized to low coefficient 1
        eliminate_modp(ring, col, piv, col.vals.back(), scratch);
      }
      if (!col.empty()) {
        const std::uint32_t low = col.low();
        const auto inv = ring.inverse(col.vals.back());
        for (auto& v : col.vals) v = ring.mul(v, inv);
        pivot_col[low] = std::int64_t(j);
        res.low_of[j] = low;
        cleared[low] = true;
        reduced[j] = col;
      }
    }
  }
  return res;
}

template <typename V>
PairingResult reduce_integer(const Filtration& f, const BoundaryMatrix& bd, int max_hom_dim) {
  const std::size_t n = f.size();
  PairingResult res;
  res.low_of.assign(n, -1);
  std::vector<std::int64_t> pivot_col(n, -1);
  std::vector<Column<V>> reduced(n);
  std::vector<bool> cleared(n, false);
  Column<V> col, scratch;
  const auto [lo, hi] = column_dims(f, max_hom_dim);
  for (int p = hi; p >= lo; --p) {
    for (std::size_t j = 0; j < n; ++j) {
      if (f.dim(j) != p || cleared[j]) continue;
      col.rows.clear();
      col.vals.clear();
      for (const auto& e : bd.column(j)) {
        col.rows.push_back(e.row);
        col.vals.push_back(V(e.coeff));
      }
      while (!col.empty()) {
        const std::int64_t k = pivot_col[col.low()];
        if (k < 0) break;
        eliminate_integer(col, reduced[std::size_t(k)], scratch);
      }
      if (!col.empty()) {
        const std::uint32_t low = col.low();
        pivot_col[low] = std::int64_t(j);
        res.low_of[j] = low;
        cleared[low] = true;
        reduced[j] = std::move(col);
        col = Column<V>{};
      }
    }
  }
  return res;
}

PersistenceDiagram assemble(const Filtration& f, const PairingResult& r, const Coefficients& coeffs,
                            int max_hom_dim) {
  std::vector<PersistencePair> pairs;
  std::vector<bool> is_birth(f.size(), false);
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (r.low_of[j] < 0) continue;
    const auto i = std::size_t(r.low_of[j]);
    is_birth[i] = true;
    pairs.push_back({f.birth(i), f.birth(j), f.dim(i), i, j});
  }
  // columns of dims <= max_hom_dim with no low are cycles; unpaired ones live forever
  std::vector<bool> negative(f.size(), false);
  for (std::size_t j = 0; j < f.size(); ++j)
    if (r.low_of[j] >= 0) negative[j] = true;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.dim(i) > max_hom_dim || negative[i] || is_birth[i]) continue;
    pairs.push_back({f.birth(i), kInfinity, f.dim(i), i, std::nullopt});
  }
  return PersistenceDiagram(coeffs, std::move(pairs), max_hom_dim);
}

}  // namespace

PersistenceDiagram reduce(const Filtration& filtration, const Coefficients& coeffs, int max_hom_dim) {
  return reduce(filtration, boundary_matrix(filtration), coeffs, max_hom_dim);
}

PersistenceDiagram reduce(const Filtration& f, const BoundaryMatrix& bd, const Coefficients& coeffs,
                          int max_hom_dim) {
  require(max_hom_dim >= 0, ErrorCode::InvalidArgument, "max_hom_dim must be nonnegative");
  require(bd.columns() == f.size(), ErrorCode::InvalidArgument, "boundary matrix does not match filtration");
  PairingResult r;
  if (coeffs.is_rational()) {
    try {
      r = reduce_integer<std::int64_t>(f, bd, max_hom_dim);
    } catch (const OverflowSignal&) {
      r = reduce_integer<mpz_class>(f, bd, max_hom_dim);
    }
  } else {
    require(is_prime(coeffs.characteristic()), ErrorCode::InvalidArgument, "coefficient modulus not prime");
    r = reduce_modp(f, bd, coeffs.characteristic(), max_hom_dim);
  }
  return assemble(f, r, coeffs, max_hom_dim);
}

std::vector<Bar> barcode(const PersistenceDiagram& diagram, int dim) {
  std::vector<Bar> bars;
  for (const auto& p : diagram.view(dim)) bars.push_back({p.persistence(), !p.finite()});
  return bars;
}

std::size_t betti_curve(const PersistenceDiagram& diagram, int dim, double radius) {
  std::size_t count = 0;
  for (const auto& p : diagram.pairs())
    if (p.dim == dim && p.birth <= radius && radius < p.death) ++count;
  return count;
}

long euler_characteristic(const PersistenceDiagram& diagram, double radius) {
  long chi = 0;
  for (int p = 0; p <= diagram.max_hom_dim(); ++p) {
    const long b = long(betti_curve(diagram, p, radius));
    chi += (p % 2 == 0) ? b : -b;
  }
  return chi;
}

}  // namespace torsionscope
