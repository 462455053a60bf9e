#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "torsionscope/ph_field.hpp"
#include "torsionscope/pointcloud.hpp"

namespace torsionscope {

/// How infinite bars enter distance computations.
enum class InfiniteBars {
  Exclude,  // dropped (default)
  Match,    // matched infinite-to-infinite by sorted births; counts must agree
  Cap,      // death replaced by `cap`, then treated as finite
};

struct DistanceOptions {
  InfiniteBars infinite = InfiniteBars::Exclude;
  double cap = 0.0;
};

/// Points (birth, death) of one dimension with positive persistence.
using DiagramPoints = std::vector<std::pair<double, double>>;

/// Bottleneck distance with L-infinity ground cost and diagonal matching.
/// Exact: the answer is one of the candidate edge costs, found by binary
/// search with a Hopcroft-Karp feasibility test.
double bottleneck(const DiagramPoints& a, const DiagramPoints& b);
double bottleneck(const PersistenceDiagram& d1, const PersistenceDiagram& d2, int dim,
                  const DistanceOptions& options = {});

/// 1-Wasserstein distance, L-infinity ground cost, via the Hungarian method
/// on the diagonal-augmented cost matrix.
double wasserstein1(const DiagramPoints& a, const DiagramPoints& b);
double wasserstein1(const PersistenceDiagram& d1, const PersistenceDiagram& d2, int dim,
                    const DistanceOptions& options = {});

/// Positive finite bar lengths.
class BarLengthSet {
 public:
  BarLengthSet() = default;
  explicit BarLengthSet(std::vector<double> lengths);
  /// Finite positive-length bars of one dimension; infinite ones are
  /// dropped unless a cap is given.
  static BarLengthSet from_diagram(const PersistenceDiagram& diagram, int dim, std::optional<double> cap = {});

  const std::vector<double>& lengths() const noexcept { return lengths_; }
  std::size_t size() const noexcept { return lengths_.size(); }
  bool empty() const noexcept { return lengths_.empty(); }
  double total() const noexcept { return total_; }
  /// Copy sorted by decreasing length.
  BarLengthSet sorted_descending() const;

 private:
  std::vector<double> lengths_;
  double total_ = 0.0;
};

/// Shannon entropy (natural log) of the normalized bar lengths.
double persistence_entropy(const BarLengthSet& bars);

/// Upper bound on the number of features among n bars for a given alpha.
double max_feature_count(std::size_t n, double alpha);

struct NoiseClassification {
  std::size_t feature_count = 0;  // the first feature_count bars (descending) are features
  std::vector<double> features;
  std::vector<double> noise;
  std::vector<double> quotients;  // C at steps 1..k, where k is the step that stopped (or n)
  double q_bound = 0.0;
};

/// Walks the bars in decreasing order; at step i computes
/// C = S'(i-1) / S'(i) with S'(i) = P_i + i * P_i / exp(E(R_i)), where R_i
/// are the bars after i and P_i their total. Bar i and every later bar are
/// noise once C >= 1 and Q < i. For i = n, R_i is empty: exp(E) = 1, P = 0.
NoiseClassification classify_noise(const BarLengthSet& bars, double alpha);

/// P / exp(E) of a barcode: the length a newly added bar must exceed to
/// count as a feature.
double min_feature_length(const BarLengthSet& bars);

/// Half the shortest positive finite bar over all dimensions.
double min_torsion_bottleneck(const PersistenceDiagram& input);

struct ScaleRatios {
  double r = 0.0;  // minimum pairwise distance
  double T = 0.0;  // half the radius (enclosing radius) of the cloud
  /// Candidate alphas derived from r / T, clamped into (0, 1).
  std::vector<double> candidates;
};

ScaleRatios scale_ratios(const PointCloud& cloud);

}  // namespace torsionscope
