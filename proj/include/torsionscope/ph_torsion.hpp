#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "torsionscope/ph_field.hpp"
#include "torsionscope/rips.hpp"

namespace torsionscope {

// ------------------------------------------------------------ Smith normal form

/// Dense integer matrix, row-major.
struct IntegerMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<mpz_class> values;

  IntegerMatrix() = default;
  IntegerMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0) {}
  static IntegerMatrix from_rows(const std::vector<std::vector<long>>& rows);

  mpz_class& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  const mpz_class& operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

struct SmithNormalForm {
  /// Nonzero diagonal entries d1 | d2 | ... | dr, all positive.
  std::vector<mpz_class> diagonal;
  std::size_t rank = 0;
};

/// Exact SNF diagonal. Works in machine words while they suffice and
/// restarts in arbitrary precision on overflow.
SmithNormalForm smith_normal_form(const IntegerMatrix& matrix);

// ----------------------------------------------------------- integral homology

struct HomologyGroup {
  int dim = 0;
  std::size_t free_rank = 0;
  /// Torsion coefficients >= 2 in divisibility-chain order.
  std::vector<mpz_class> torsion;

  bool has_torsion() const noexcept { return !torsion.empty(); }
  /// e.g. "Z^2 + Z/2", "0"
  std::string to_string() const;
};

struct IntegralHomologySummary {
  std::vector<HomologyGroup> groups;  // indexed by dimension
  /// Distinct primes dividing any torsion coefficient, ascending.
  std::vector<std::uint64_t> torsion_primes() const;
};

struct OracleLimits {
  std::size_t simplex_cap = 4000;
};

/// Integral homology of the sublevel complex at `radius`, dims 0..max_hom_dim.
IntegralHomologySummary integral_homology(const Filtration& filtration, double radius, int max_hom_dim,
                                          const OracleLimits& limits = {});

/// Homology of C(K_i)/C(K_j) where K_j, K_i are the sublevel complexes at
/// radius_j <= radius_i.
IntegralHomologySummary relative_integral_homology(const Filtration& filtration, double radius_j,
                                                   double radius_i, int max_hom_dim,
                                                   const OracleLimits& limits = {});

/// Index-level variant: the pair (first `upper` simplices, first `lower` simplices).
IntegralHomologySummary relative_integral_homology_by_prefix(const Filtration& filtration,
                                                             std::size_t lower, std::size_t upper,
                                                             int max_hom_dim,
                                                             const OracleLimits& limits = {});

// ----------------------------------------------------------------- detection

struct TorsionFinding {
  std::uint32_t prime = 0;
  std::size_t first_index = 0;
  int hom_dim = 0;

  friend bool operator==(const TorsionFinding&, const TorsionFinding&) = default;
};

enum class TorsionMethod { PrimeComparison, SnfOracle };

struct TorsionReport {
  bool has_torsion = false;
  std::vector<TorsionFinding> findings;  // ascending by prime
  std::vector<std::uint32_t> primes_tested;
  TorsionMethod method = TorsionMethod::PrimeComparison;

  /// Finding with the smallest first_index (ties: smallest prime).
  const TorsionFinding* earliest() const;
  /// "Torsion: (2, 8701)" or "No Torsion"
  std::string summary() const;
};

inline const std::vector<std::uint32_t> kDefaultTorsionPrimes = {2, 3, 5, 7, 11, 13};

/// Compares the rational pairing with the Z/qZ pairing for each tested
/// prime. q is reported iff the pairings differ; first_index is the first
/// column whose pivot differs and hom_dim the dimension of the class that
/// column kills.
TorsionReport torsion_check(const Filtration& filtration, const std::vector<std::uint32_t>& primes,
                            int max_hom_dim);

/// Same contract as torsion_check, computed by SNF over every pair of
/// filtration prefixes: q is reported iff some relative integral homology
/// group of the filtration has q-torsion, with first_index the smallest
/// upper prefix end at which that happens.
TorsionReport torsion_oracle(const Filtration& filtration, const std::vector<std::uint32_t>& primes,
                             int max_hom_dim, const OracleLimits& limits = {});

}  // namespace torsionscope
