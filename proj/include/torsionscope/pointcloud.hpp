#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace torsionscope {

/// A finite set of points in Euclidean d-space, stored row-major.
/// Immutable after construction; operations return new clouds.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::size_t dim, std::vector<double> coords, std::vector<int> labels = {});

  static PointCloud from_rows(const std::vector<std::vector<double>>& rows);
  static PointCloud from_matrix(const Eigen::MatrixXd& points);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  double operator()(std::size_t i, std::size_t k) const { return coords_[i * dim_ + k]; }

  const std::vector<double>& coords() const noexcept { return coords_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  /// n x d copy for linear algebra.
  Eigen::MatrixXd to_matrix() const;

  PointCloud subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
  std::vector<int> labels_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double distance(std::span<const double> a, std::span<const double> b);

struct PerturbationRecord {
  std::vector<std::size_t> shifted_indices;
  double noise_sigma = 0.0;
  /// Mean over all n points of the squared Euclidean displacement.
  double mse = 0.0;
};

/// Mean over points of the squared displacement between two clouds of equal shape.
double mean_squared_displacement(const PointCloud& a, const PointCloud& b);

// ---------------------------------------------------------------- generators

struct LoopBandParams {
  int windings = 2;
  std::size_t n_points = 600;
  double major_radius = 1.0;
  double band_width = 0.2;
  /// Turns of the cross-section offset around the core circle over the whole curve.
  int twist = 1;
  std::uint64_t seed = 0;
  /// Extra 1e-9 jitter to break exact distance ties.
  bool jitter = false;
};

/// Samples a closed curve on the torus around the z-axis: it winds `windings`
/// times around the axis while its offset from the core circle turns `twist`
/// times. windings=2, twist=1 is the boundary of a Moebius band (double loop);
/// windings=3, twist=1 the triple loop. Points are stratified in the curve
/// parameter so the sampling has no large gaps.
PointCloud generate_loop_band(const LoopBandParams& params);

/// Real projective plane in R^4 via (x,y,z) -> (xy, xz, yz, x^2 - y^2) on
/// uniform unit-sphere samples.
PointCloud generate_projective_plane(std::size_t n_points, std::uint64_t seed, bool jitter = false);

/// The map used by generate_projective_plane, exposed for checks.
std::array<double, 4> projective_plane_embedding(double x, double y, double z);

/// i.i.d. uniform points in [0,1]^dim.
PointCloud generate_random_cloud(std::size_t n_points, std::size_t dim, std::uint64_t seed,
                                 bool jitter = false);

// ------------------------------------------------------------- perturbation

/// Adds i.i.d. Gaussian noise to every coordinate of the selected points.
/// An empty optional selects all points.
std::pair<PointCloud, PerturbationRecord> perturb_gaussian(
    const PointCloud& cloud, const std::optional<std::vector<std::size_t>>& indices, double sigma,
    std::uint64_t seed);

// ---------------------------------------------------------- transformations

/// Maps every point x to M x; M has shape d' x d.
PointCloud apply_linear(const PointCloud& cloud, const Eigen::MatrixXd& matrix);

enum class Activation { Linear, Relu, LeakyRelu, Sigmoid, Tanh, Elu, Softplus };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

double activate(Activation a, double x);
/// Derivative with respect to the pre-activation.
double activate_derivative(Activation a, double x);

PointCloud apply_activation(const PointCloud& cloud, Activation kind);

// ---------------------------------------------------------------------- I/O

/// CSV: one point per row, comma separated; optional `# dim=<d>` header line.
PointCloud read_cloud_csv(const std::string& path);
void write_cloud_csv(const PointCloud& cloud, const std::string& path);
/// JSON: {"dim": d, "points": [[...], ...]}
PointCloud read_cloud_json(const std::string& path);
void write_cloud_json(const PointCloud& cloud, const std::string& path);
/// Dispatches on the file extension (.json vs anything else as CSV).
PointCloud read_cloud(const std::string& path);
void write_cloud(const PointCloud& cloud, const std::string& path);

}  // namespace torsionscope
