#include "torsionscope/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

#include "text_util.hpp"
#include "torsionscope/error.hpp"
#include "torsionscope/random.hpp"

namespace torsionscope {

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords, std::vector<int> labels)
    : dim_(dim), coords_(std::move(coords)), labels_(std::move(labels)) {
  require(dim_ >= 1, ErrorCode::InvalidArgument, "point cloud dimension must be >= 1");
  require(coords_.size() % dim_ == 0, ErrorCode::InvalidArgument,
          "coordinate count is not a multiple of the dimension");
  require(!coords_.empty(), ErrorCode::InvalidArgument, "point cloud must contain a point");
  require(labels_.empty() || labels_.size() == size(), ErrorCode::InvalidArgument,
          "label count must match point count");
}

PointCloud PointCloud::from_rows(const std::vector<std::vector<double>>& rows) {
  require(!rows.empty(), ErrorCode::InvalidArgument, "point cloud must contain a point");
  const std::size_t dim = rows.front().size();
  std::vector<double> coords;
  coords.reserve(rows.size() * dim);
  for (const auto& row : rows) {
    require(row.size() == dim, ErrorCode::InvalidArgument, "ragged point rows");
    coords.insert(coords.end(), row.begin(), row.end());
  }
  return PointCloud(dim, std::move(coords));
}

PointCloud PointCloud::from_matrix(const Eigen::MatrixXd& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  const auto d = static_cast<std::size_t>(points.cols());
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) coords[i * d + k] = points(Eigen::Index(i), Eigen::Index(k));
  return PointCloud(d, std::move(coords));
}

Eigen::MatrixXd PointCloud::to_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t k = 0; k < dim_; ++k) m(Eigen::Index(i), Eigen::Index(k)) = (*this)(i, k);
  return m;
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  std::vector<double> coords;
  coords.reserve(indices.size() * dim_);
  std::vector<int> labels;
  for (std::size_t i : indices) {
    require(i < size(), ErrorCode::InvalidArgument, "subset index out of range");
    auto p = point(i);
    coords.insert(coords.end(), p.begin(), p.end());
    if (!labels_.empty()) labels.push_back(labels_[i]);
  }
  return PointCloud(dim_, std::move(coords), std::move(labels));
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double mean_squared_displacement(const PointCloud& a, const PointCloud& b) {
  require(a.size() == b.size() && a.dim() == b.dim(), ErrorCode::InvalidArgument,
          "clouds differ in shape");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += squared_distance(a.point(i), b.point(i));
  return s / static_cast<double>(a.size());
}

namespace {

void add_jitter(std::vector<double>& coords, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6a177e5));
  for (double& c : coords) c += rng.uniform(-1e-9, 1e-9);
}

}  // namespace

PointCloud generate_loop_band(const LoopBandParams& p) {
  require(p.windings >= 1, ErrorCode::InvalidArgument, "windings must be positive");
  require(p.n_points >= 1, ErrorCode::InvalidArgument, "n_points must be positive");
  require(p.n_points >= 3 * static_cast<std::size_t>(p.windings), ErrorCode::Precondition,
          "n_points must be at least 3 * windings");
  require(p.major_radius > 0 && p.band_width > 0, ErrorCode::InvalidArgument,
          "radii must be positive");
  require(p.band_width < p.major_radius, ErrorCode::InvalidArgument,
          "band_width must be smaller than major_radius");

  Rng rng(p.seed);
  const double span = 2.0 * std::numbers::pi * p.windings;
  std::vector<double> coords;
  coords.reserve(p.n_points * 3);
  for (std::size_t k = 0; k < p.n_points; ++k) {
    const double theta = span * (static_cast<double>(k) + rng.uniform()) / static_cast<double>(p.n_points);
    const double phi = theta * static_cast<double>(p.twist) / static_cast<double>(p.windings);
    const double rho = p.major_radius + p.band_width * std::cos(phi);
    coords.push_back(rho * std::cos(theta));
    coords.push_back(rho * std::sin(theta));
    coords.push_back(p.band_width * std::sin(phi));
  }
  if (p.jitter) add_jitter(coords, p.seed);
  return PointCloud(3, std::move(coords));
}

std::array<double, 4> projective_plane_embedding(double x, double y, double z) {
  return {x * y, x * z, y * z, x * x - y * y};
}

PointCloud generate_projective_plane(std::size_t n_points, std::uint64_t seed, bool jitter) {
  require(n_points >= 20, ErrorCode::Precondition, "projective plane sample needs >= 20 points");
  Rng rng(seed);
  std::vector<double> coords;
  coords.reserve(n_points * 4);
  for (std::size_t i = 0; i < n_points; ++i) {
    double x, y, z, norm;
    do {
      x = rng.normal();
      y = rng.normal();
      z = rng.normal();
      norm = std::sqrt(x * x + y * y + z * z);
    } while (norm < 1e-12);
    const auto e = projective_plane_embedding(x / norm, y / norm, z / norm);
    coords.insert(coords.end(), e.begin(), e.end());
  }
  if (jitter) add_jitter(coords, seed);
  return PointCloud(4, std::move(coords));
}

PointCloud generate_random_cloud(std::size_t n_points, std::size_t dim, std::uint64_t seed,
                                 bool jitter) {
  require(n_points >= 1, ErrorCode::InvalidArgument, "n_points must be positive");
  require(dim >= 2, ErrorCode::Precondition, "random cloud dimension must be >= 2");
  Rng rng(seed);
  std::vector<double> coords(n_points * dim);
  for (double& c : coords) c = rng.uniform();
  if (jitter) add_jitter(coords, seed);
  return PointCloud(dim, std::move(coords));
}

std::pair<PointCloud, PerturbationRecord> perturb_gaussian(
    const PointCloud& cloud, const std::optional<std::vector<std::size_t>>& indices, double sigma,
    std::uint64_t seed) {
  require(sigma >= 0.0 && std::isfinite(sigma), ErrorCode::InvalidArgument,
          "sigma must be a finite nonnegative number");
  std::vector<std::size_t> selected;
  if (indices) {
    selected = *indices;
    std::vector<bool> seen(cloud.size(), false);
    for (std::size_t i : selected) {
      require(i < cloud.size(), ErrorCode::InvalidArgument,
              "perturbation index " + std::to_string(i) + " out of range");
      require(!seen[i], ErrorCode::InvalidArgument,
              "duplicate perturbation index " + std::to_string(i));
      seen[i] = true;
    }
  } else {
    selected.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) selected[i] = i;
  }

  std::vector<double> coords = cloud.coords();
  if (sigma > 0.0) {
    Rng rng(seed);
    for (std::size_t i : selected)
      for (std::size_t k = 0; k < cloud.dim(); ++k) coords[i * cloud.dim() + k] += sigma * rng.normal();
  }
  PointCloud out(cloud.dim(), std::move(coords), cloud.labels());
  PerturbationRecord rec;
  rec.shifted_indices = std::move(selected);
  rec.noise_sigma = sigma;
  rec.mse = mean_squared_displacement(cloud, out);
  return {std::move(out), std::move(rec)};
}

PointCloud apply_linear(const PointCloud& cloud, const Eigen::MatrixXd& matrix) {
  require(static_cast<std::size_t>(matrix.cols()) == cloud.dim(), ErrorCode::InvalidArgument,
          "matrix column count must equal the cloud dimension");
  require(matrix.rows() >= 1, ErrorCode::InvalidArgument, "matrix must have at least one row");
  const Eigen::MatrixXd mapped = cloud.to_matrix() * matrix.transpose();
  PointCloud out = PointCloud::from_matrix(mapped);
  return PointCloud(out.dim(), out.coords(), cloud.labels());
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Linear: return "linear";
    case Activation::Relu: return "relu";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Elu: return "elu";
    case Activation::Softplus: return "softplus";
  }
  return "linear";
}

Activation activation_from_string(std::string_view name) {
  for (Activation a : {Activation::Linear, Activation::Relu, Activation::LeakyRelu,
                       Activation::Sigmoid, Activation::Tanh, Activation::Elu, Activation::Softplus})
    if (to_string(a) == name) return a;
  fail(ErrorCode::InvalidArgument, "unknown activation '" + std::string(name) + "'");
}

namespace {
constexpr double kLeakySlope = 0.01;
constexpr double kEluAlpha = 1.0;
}  // namespace

double activate(Activation a, double x) {
  switch (a) {
    case Activation::Linear: return x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::LeakyRelu: return x >= 0.0 ? x : kLeakySlope * x;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::Tanh: return std::tanh(x);
    case Activation::Elu: return x > 0.0 ? x : kEluAlpha * std::expm1(x);
    case Activation::Softplus:
      // log(1 + e^x) without overflow
      return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  return x;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::Linear: return 1.0;
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::LeakyRelu: return x >= 0.0 ? 1.0 : kLeakySlope;
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Elu: return x > 0.0 ? 1.0 : kEluAlpha * std::exp(x);
    case Activation::Softplus: return 1.0 / (1.0 + std::exp(-x));
  }
  return 1.0;
}

PointCloud apply_activation(const PointCloud& cloud, Activation kind) {
  std::vector<double> coords = cloud.coords();
  for (double& c : coords) c = activate(kind, c);
  return PointCloud(cloud.dim(), std::move(coords), cloud.labels());
}

// ---------------------------------------------------------------------- I/O

PointCloud read_cloud_csv(const std::string& path) {
  const std::string text = detail::read_file(path);
  std::size_t declared_dim = 0;
  std::vector<std::vector<double>> rows;
  for (std::string_view line : detail::split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    if (line.front() == '#') {
      const auto pos = line.find("dim=");
      if (pos != std::string_view::npos)
        declared_dim = static_cast<std::size_t>(detail::parse_double(line.substr(pos + 4)));
      continue;
    }
    std::vector<double> row;
    for (std::string_view field : detail::split(line, ',')) row.push_back(detail::parse_double(field));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorCode::InvalidArgument, "'" + path + "' contains no points");
  PointCloud cloud = PointCloud::from_rows(rows);
  require(declared_dim == 0 || declared_dim == cloud.dim(), ErrorCode::InvalidArgument,
          "'" + path + "': header dim does not match rows");
  return cloud;
}

void write_cloud_csv(const PointCloud& cloud, const std::string& path) {
  std::string out = "# dim=" + std::to_string(cloud.dim()) + "\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t k = 0; k < cloud.dim(); ++k) {
      if (k) out += ',';
      out += detail::format_double(cloud(i, k));
    }
    out += '\n';
  }
  detail::write_file(path, out);
}

PointCloud read_cloud_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, "'" + path + "': " + e.what());
  }
  require(j.contains("points"), ErrorCode::InvalidArgument, "'" + path + "' lacks 'points'");
  auto rows = j.at("points").get<std::vector<std::vector<double>>>();
  PointCloud cloud = PointCloud::from_rows(rows);
  if (j.contains("dim"))
    require(j.at("dim").get<std::size_t>() == cloud.dim(), ErrorCode::InvalidArgument,
            "'" + path + "': dim does not match rows");
  return cloud;
}

void write_cloud_json(const PointCloud& cloud, const std::string& path) {
  nlohmann::json j;
  j["dim"] = cloud.dim();
  auto& pts = j["points"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    auto p = cloud.point(i);
    pts.push_back(std::vector<double>(p.begin(), p.end()));
  }
  detail::write_file(path, j.dump() + "\n");
}

PointCloud read_cloud(const std::string& path) {
  return detail::ends_with(path, ".json") ? read_cloud_json(path) : read_cloud_csv(path);
}

void write_cloud(const PointCloud& cloud, const std::string& path) {
  if (detail::ends_with(path, ".json"))
    write_cloud_json(cloud, path);
  else
    write_cloud_csv(cloud, path);
}

}  // namespace torsionscope
