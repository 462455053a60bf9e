#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "torsionscope/rips.hpp"

namespace torsionscope {

bool is_prime(std::uint64_t n);

/// Coefficient ring for persistence: a prime field Z/qZ or the rationals.
class Coefficients {
 public:
  enum class Kind { Prime, Rational };

  static Coefficients prime(std::uint32_t q);
  static Coefficients rational() { return Coefficients(Kind::Rational, 0); }
  /// Parses "q2", "2", "rational", "Q".
  static Coefficients parse(const std::string& text);

  Kind kind() const noexcept { return kind_; }
  std::uint32_t characteristic() const noexcept { return q_; }
  bool is_rational() const noexcept { return kind_ == Kind::Rational; }
  std::string name() const;

  friend bool operator==(const Coefficients&, const Coefficients&) = default;

 private:
  Coefficients(Kind k, std::uint32_t q) : kind_(k), q_(q) {}
  Kind kind_;
  std::uint32_t q_;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PersistencePair {
  double birth = 0.0;
  double death = kInfinity;
  int dim = 0;
  std::size_t birth_index = 0;
  std::optional<std::size_t> death_index;

  bool finite() const noexcept { return death_index.has_value(); }
  double persistence() const noexcept { return death - birth; }

  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

/// Persistence intervals over one coefficient ring. Zero-length pairs are
/// kept (their indices matter for comparing pairings) but excluded from
/// `view`, the default view used by metrics and entropy.
class PersistenceDiagram {
 public:
  PersistenceDiagram() : coefficients_(Coefficients::rational()) {}
  PersistenceDiagram(Coefficients coeffs, std::vector<PersistencePair> pairs, int max_hom_dim);

  const Coefficients& coefficients() const noexcept { return coefficients_; }
  const std::vector<PersistencePair>& pairs() const noexcept { return pairs_; }
  int max_hom_dim() const noexcept { return max_hom_dim_; }

  /// Pairs of one dimension with positive persistence (infinite ones included).
  std::vector<PersistencePair> view(int dim) const;
  /// Every pair of one dimension, zero-length ones included.
  std::vector<PersistencePair> all_in_dim(int dim) const;

  /// Same intervals as (birth, death, dim) multisets, ignoring indices and
  /// zero-length pairs.
  bool same_intervals(const PersistenceDiagram& other, int dim) const;

 private:
  Coefficients coefficients_;
  std::vector<PersistencePair> pairs_;
  int max_hom_dim_ = 0;
};

/// Standard left-to-right column reduction with exact arithmetic in the
/// chosen ring. Rational reduction runs fraction-free on integer columns
/// (machine words first, GMP integers if a word overflows). Columns are
/// processed from the top dimension down so that pivot rows found in
/// dimension p+1 are cleared from dimension p; the pairing is unchanged by
/// this.
PersistenceDiagram reduce(const Filtration& filtration, const Coefficients& coeffs, int max_hom_dim);
PersistenceDiagram reduce(const Filtration& filtration, const BoundaryMatrix& boundary,
                          const Coefficients& coeffs, int max_hom_dim);

struct Bar {
  double length = 0.0;
  bool infinite = false;
};

/// Interval lengths of one dimension (positive-length pairs only).
std::vector<Bar> barcode(const PersistenceDiagram& diagram, int dim);

/// Number of intervals of `dim` containing `radius` (birth <= radius < death).
std::size_t betti_curve(const PersistenceDiagram& diagram, int dim, double radius);

/// Alternating sum of Betti numbers at `radius`. The diagram must cover
/// every dimension of the complex (max_hom_dim = filtration max_dim).
long euler_characteristic(const PersistenceDiagram& diagram, double radius);

}  // namespace torsionscope
