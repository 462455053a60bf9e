#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "torsionscope/pointcloud.hpp"

namespace torsionscope {

using Vertex = std::uint32_t;

struct RipsOptions;
class Filtration;
class DistanceMatrix;
Filtration build_rips(const DistanceMatrix& distances, const RipsOptions& options);

/// Dense symmetric distance matrix with zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, std::vector<double> values);

  static DistanceMatrix from_cloud(const PointCloud& cloud);

  std::size_t size() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Min over points of the max distance to any other point. Beyond this
/// radius the Rips complex is a cone, hence contractible.
double enclosing_radius(const DistanceMatrix& d);

/// Non-owning view of one simplex of a filtration.
struct SimplexView {
  std::span<const Vertex> vertices;
  double birth;
  int dim() const noexcept { return static_cast<int>(vertices.size()) - 1; }
};

/// A totally ordered list of simplices with birth values. The order is
/// (birth, dim, lexicographic vertices), which puts every face before its
/// cofaces as long as face births do not exceed coface births.
class Filtration {
 public:
  struct Entry {
    std::vector<Vertex> vertices;
    double birth = 0.0;
  };

  Filtration() = default;

  /// Builds a filtration from an arbitrary simplex list. Vertices of each
  /// simplex are sorted; the list must be closed under taking faces with
  /// face births not exceeding coface births.
  static Filtration from_simplices(std::vector<Entry> simplices);

  std::size_t size() const noexcept { return births_.size(); }
  int max_dim() const noexcept { return max_dim_; }
  std::size_t vertex_count() const noexcept { return vertex_count_; }

  SimplexView simplex(std::size_t i) const {
    return {std::span<const Vertex>(verts_.data() + i * stride_, std::size_t(dims_[i]) + 1), births_[i]};
  }
  std::span<const Vertex> vertices(std::size_t i) const { return simplex(i).vertices; }
  double birth(std::size_t i) const { return births_[i]; }
  int dim(std::size_t i) const { return dims_[i]; }

  /// Position of the simplex with the given (sorted) vertex set.
  std::optional<std::size_t> index_of(std::span<const Vertex> vertices) const;

  /// Number of simplices with birth <= radius (the filtration is a prefix-closed order).
  std::size_t prefix_size(double radius) const;

 private:
  friend Filtration build_rips(const DistanceMatrix&, const RipsOptions&);
  std::uint64_t key(std::span<const Vertex> vertices) const;
  void finalize(std::vector<Vertex> verts, std::vector<std::uint8_t> dims, std::vector<double> births);

  int max_dim_ = -1;
  std::size_t stride_ = 1;
  std::size_t vertex_count_ = 0;
  std::vector<Vertex> verts_;
  std::vector<std::uint8_t> dims_;
  std::vector<double> births_;
  // binomial_[k][v] = C(v, k); used for the combinatorial-number-system key
  std::vector<std::vector<std::uint64_t>> binomial_;
  std::vector<std::unordered_map<std::uint64_t, std::uint32_t>> index_;
};

struct RipsOptions {
  int max_dim = 2;
  /// nullopt selects the enclosing radius.
  std::optional<double> max_radius;
  std::size_t simplex_cap = 5'000'000;
};

/// Vietoris-Rips filtration: every simplex of dimension <= max_dim whose
/// diameter is <= max_radius, born at its diameter.
Filtration build_rips(const PointCloud& cloud, const RipsOptions& options);
Filtration build_rips(const DistanceMatrix& distances, const RipsOptions& options);

/// Number of Rips simplices the options would produce; stops counting once
/// `stop_after` is exceeded.
std::size_t count_rips_simplices(const DistanceMatrix& distances, int max_dim, double max_radius,
                                 std::size_t stop_after = SIZE_MAX);

/// Sparse integer boundary matrix in compressed-column form. Column j lists
/// the codimension-1 faces of simplex j by filtration index in increasing
/// order, with coefficient (-1)^k for the face omitting the k-th vertex.
class BoundaryMatrix {
 public:
  struct Entry {
    std::uint32_t row;
    std::int8_t coeff;
  };

  std::size_t columns() const noexcept { return offsets_.size() - 1; }
  std::span<const Entry> column(std::size_t j) const {
    return {entries_.data() + offsets_[j], offsets_[j + 1] - offsets_[j]};
  }

 private:
  friend BoundaryMatrix boundary_matrix(const Filtration&);
  std::vector<std::size_t> offsets_{0};
  std::vector<Entry> entries_;
};

BoundaryMatrix boundary_matrix(const Filtration& filtration);

/// The prefix of the filtration with birth <= radius.
Filtration sublevel_restriction(const Filtration& filtration, double radius);

/// Text dump: one `birth dim v0 v1 ...` line per simplex in filtration order.
std::string dump_filtration(const Filtration& filtration);
/// Inverse of dump_filtration; blank lines and '#' comments are skipped.
Filtration parse_filtration(const std::string& text);

/// The vertex pair realizing the diameter of a simplex (first maximal pair
/// in lexicographic order). Requires at least two vertices.
std::pair<Vertex, Vertex> diameter_edge(std::span<const Vertex> vertices, const DistanceMatrix& d);

}  // namespace torsionscope
