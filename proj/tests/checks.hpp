// Numeric checks shared by the unit tests and the acceptance driver. Each
// returns the measured quantity so callers decide the threshold.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "oracles.hpp"
#include "torsionscope/diagmetrics.hpp"
#include "torsionscope/neuralnet.hpp"
#include "torsionscope/ph_field.hpp"
#include "torsionscope/pointcloud.hpp"
#include "torsionscope/random.hpp"
#include "torsionscope/topoloss.hpp"

namespace checks {

using namespace torsionscope;

// gradients below this magnitude are compared absolutely; FD round-off at
// step 1e-6 is around 1e-10, so this keeps the relative test meaningful
inline constexpr double kRelFloor = 1e-4;

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), kRelFloor});
}

inline Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

/// Max relative error between backprop and central differences for the loss
/// mse(output, x) + <latent, R> on 10 random points, train mode.
inline double nn_gradient_error(Activation act, bool batch_norm, std::uint64_t seed) {
  Rng rng(seed);
  ArchitectureOptions arch{act, batch_norm};
  auto model = AutoencoderModel::from_widths({3, 5, 2, 5, 3}, arch, seed);
  // move batch-norm scale/shift away from the identity so their gradients are exercised
  for (auto& l : model.layers())
    if (l.spec.batch_norm) {
      for (Eigen::Index k = 0; k < l.gamma.size(); ++k) {
        l.gamma(k) = rng.uniform(0.5, 1.5);
        l.beta(k) = rng.uniform(-0.5, 0.5);
      }
    }
  const Matrix x = random_matrix(rng, 10, 3);
  const Matrix R = random_matrix(rng, 10, 2);
  const auto loss = [&](const AutoencoderModel& m) {
    const auto c = m.forward(x, Mode::Train);
    return mse_loss(c.output, x) + (c.latent.array() * R.array()).sum();
  };
  const auto cache = model.forward(x, Mode::Train);
  const auto analytic = AutoencoderModel::flatten(model.backward(cache, R, mse_grad(cache.output, x)));
  auto params = model.flat_parameters();
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params[k];
    params[k] = keep + h;
    model.set_flat_parameters(params);
    const double up = loss(model);
    params[k] = keep - h;
    model.set_flat_parameters(params);
    const double down = loss(model);
    params[k] = keep;
    worst = std::max(worst, rel_err(analytic[k], (up - down) / (2 * h)));
  }
  model.set_flat_parameters(params);
  return worst;
}

/// Third over first singular value of centered decoder outputs on a latent
/// grid, decoder activations all linear.
inline double linear_decoder_rank_ratio(bool batch_norm, std::uint64_t seed) {
  ArchitectureOptions arch{Activation::Linear, batch_norm};
  auto model = AutoencoderModel::from_widths({6, 16, 2, 16, 6}, arch, seed);
  if (batch_norm) {
    // nontrivial running statistics, as after training
    Rng rng(seed + 1);
    for (auto& l : model.layers())
      if (l.spec.batch_norm)
        for (Eigen::Index k = 0; k < l.gamma.size(); ++k) {
          l.running_mean(k) = rng.uniform(-1, 1);
          l.running_var(k) = rng.uniform(0.2, 2);
          l.gamma(k) = rng.uniform(0.5, 2);
          l.beta(k) = rng.uniform(-1, 1);
        }
  }
  const int g = 41;
  Matrix z(g * g, 2);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) z.row(i * g + j) << -3.0 + 6.0 * i / (g - 1), -3.0 + 6.0 * j / (g - 1);
  Matrix out = model.decode(z);
  out.rowwise() -= out.colwise().mean();
  Eigen::JacobiSVD<Matrix> svd(out);
  const auto s = svd.singularValues();
  return s(2) / s(0);
}

/// Frozen-selection topo_loss gradient vs central differences, random 10-point instance.
inline double topo_gradient_error(std::uint64_t seed) {
  Rng rng(seed);
  const Matrix x = random_matrix(rng, 10, 3), z0 = random_matrix(rng, 10, 2);
  const auto base = topo_loss(x, z0);
  const Matrix g = topo_loss_grad(x, z0, base.selection);
  const auto frozen = [&](const Matrix& z) {
    double v = 0;
    auto len = [](const Matrix& m, Vertex a, Vertex b) { return (m.row(a) - m.row(b)).norm(); };
    for (const auto& e : base.selection.x_edges) v += 0.5 * std::pow(len(x, e.a, e.b) - len(z, e.a, e.b), 2);
    for (const auto& e : base.selection.z_edges) v += 0.5 * std::pow(len(z, e.a, e.b) - len(x, e.a, e.b), 2);
    return v;
  };
  const double h = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < z0.rows(); ++i)
    for (Eigen::Index k = 0; k < z0.cols(); ++k) {
      Matrix up = z0, dn = z0;
      up(i, k) += h;
      dn(i, k) -= h;
      worst = std::max(worst, rel_err(g(i, k), (frozen(up) - frozen(dn)) / (2 * h)));
    }
  return worst;
}

/// RTD gradient vs central differences of rtd_loss on a random 8-point
/// instance. Coordinates whose perturbation changes the pairing are skipped
/// (returned count), since the value is only piecewise smooth.
struct RtdGradCheck {
  double worst = 0.0;
  int compared = 0;
  int skipped = 0;
};

inline bool same_uses(const RtdResult& a, const RtdResult& b) {
  auto key = [](const RtdDirection& d) {
    std::vector<std::tuple<Vertex, Vertex, double>> k;
    for (const auto& u : d.tilde_uses) k.emplace_back(u.a, u.b, u.sign);
    std::sort(k.begin(), k.end());
    return k;
  };
  return key(a.forward) == key(b.forward) && key(a.backward) == key(b.backward) &&
         a.forward.bars.size() == b.forward.bars.size() && a.backward.bars.size() == b.backward.bars.size();
}

inline RtdGradCheck rtd_gradient_check(std::uint64_t seed) {
  Rng rng(seed);
  const Matrix p = random_matrix(rng, 8, 3);
  Matrix pt = p + 0.4 * random_matrix(rng, 8, 3);
  const auto base = rtd_loss(p, pt);
  const Matrix g = rtd_loss_grad(p, pt, base);
  const double h = 1e-6;
  RtdGradCheck out;
  for (Eigen::Index i = 0; i < pt.rows(); ++i)
    for (Eigen::Index k = 0; k < pt.cols(); ++k) {
      Matrix up = pt, dn = pt;
      up(i, k) += h;
      dn(i, k) -= h;
      const auto ru = rtd_loss(p, up), rd = rtd_loss(p, dn);
      if (!same_uses(ru, base) || !same_uses(rd, base)) {
        ++out.skipped;
        continue;
      }
      ++out.compared;
      out.worst = std::max(out.worst, rel_err(g(i, k), (ru.value - rd.value) / (2 * h)));
    }
  return out;
}

/// Smallest E(L') - E(L) over the substitutions i = 1..n-1 for a random bar
/// set sorted descending; nonnegative when the inequality holds.
inline double entropy_substitution_margin(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 2 + rng.below(19);
  std::vector<double> L(n);
  for (auto& l : L) l = rng.uniform() < 0.2 ? rng.uniform(1.0, 10.0) : rng.uniform(0.01, 1.0);
  std::sort(L.rbegin(), L.rend());
  const double E = persistence_entropy(BarLengthSet(L));
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n; ++i) {
    const std::vector<double> R(L.begin() + std::ptrdiff_t(i), L.end());
    const BarLengthSet rs(R);
    const double m = rs.total() / std::exp(persistence_entropy(rs));
    std::vector<double> Lp(i, m);
    Lp.insert(Lp.end(), R.begin(), R.end());
    margin = std::min(margin, persistence_entropy(BarLengthSet(Lp)) - E);
  }
  return margin;
}

/// Distinct birth values of a filtration, ascending.
inline std::vector<double> births(const Filtration& f) {
  std::vector<double> b;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (b.empty() || f.birth(i) != b.back()) b.push_back(f.birth(i));
  return b;
}

/// Radii (filtration births) at which H1 over Z/2 has more intervals than
/// over Z/3, plus whether the Euler characteristic agreed over all fields
/// at every birth value.
struct Rp2Sweep {
  std::vector<double> discrepant;
  bool euler_equal = true;
  std::size_t simplices = 0;
};

inline Rp2Sweep rp2_sweep(const Filtration& f) {
  const int top = f.max_dim();
  const auto d2 = reduce(f, Coefficients::prime(2), top);
  const auto d3 = reduce(f, Coefficients::prime(3), top);
  const auto d5 = reduce(f, Coefficients::prime(5), top);
  const auto dq = reduce(f, Coefficients::rational(), top);
  Rp2Sweep s;
  s.simplices = f.size();
  for (double r : births(f)) {
    const long e = euler_characteristic(d2, r);
    if (euler_characteristic(d3, r) != e || euler_characteristic(d5, r) != e || euler_characteristic(dq, r) != e)
      s.euler_equal = false;
    if (betti_curve(d2, 1, r) > betti_curve(d3, 1, r)) s.discrepant.push_back(r);
  }
  return s;
}

}  // namespace checks
