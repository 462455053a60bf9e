#include "torsionscope/topoloss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "torsionscope/error.hpp"
#include "torsionscope/ph_field.hpp"

namespace torsionscope {

namespace {

DistanceMatrix distances(const Matrix& m) {
  const auto n = std::size_t(m.rows());
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      v[i * n + j] = v[j * n + i] = (m.row(Eigen::Index(i)) - m.row(Eigen::Index(j))).norm();
  return DistanceMatrix(n, std::move(v));
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

std::vector<SelectedEdge> persistence_edges_dim0(const DistanceMatrix& d) {
  const std::size_t n = d.size();
  struct E {
    double w;
    Vertex a, b;
  };
  std::vector<E> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) edges.push_back({d(i, j), Vertex(i), Vertex(j)});
  // filtration order: weight, then lexicographic vertices
  std::sort(edges.begin(), edges.end(),
            [](const E& x, const E& y) { return std::tie(x.w, x.a, x.b) < std::tie(y.w, y.a, y.b); });
  UnionFind uf(n);
  std::vector<SelectedEdge> out;
  for (const auto& e : edges) {
    if (out.size() + 1 >= n) break;
    if (uf.unite(e.a, e.b)) out.push_back({e.a, e.b, EdgeRole::Destroyer, 0});
  }
  return out;
}

TopoLossResult topo_loss(const Matrix& input, const Matrix& latent) {
  require(input.rows() == latent.rows(), ErrorCode::InvalidArgument, "input and latent must have the same size");
  const auto dx = distances(input), dz = distances(latent);
  TopoLossResult r;
  r.selection.x_edges = persistence_edges_dim0(dx);
  r.selection.z_edges = persistence_edges_dim0(dz);
  for (const auto& e : r.selection.x_edges) r.x_to_z += 0.5 * std::pow(dx(e.a, e.b) - dz(e.a, e.b), 2);
  for (const auto& e : r.selection.z_edges) r.z_to_x += 0.5 * std::pow(dz(e.a, e.b) - dx(e.a, e.b), 2);
  r.value = r.x_to_z + r.z_to_x;
  return r;
}

TopoLossResult topo_loss(const PointCloud& input, const PointCloud& latent) {
  return topo_loss(input.to_matrix(), latent.to_matrix());
}

Matrix topo_loss_grad(const Matrix& input, const Matrix& latent, const EdgeSelection& selection) {
  require(input.rows() == latent.rows(), ErrorCode::InvalidArgument, "input and latent must have the same size");
  Matrix g = Matrix::Zero(latent.rows(), latent.cols());
  auto add = [&](const SelectedEdge& e) {
    const auto a = Eigen::Index(e.a), b = Eigen::Index(e.b);
    const RowVector diff = latent.row(a) - latent.row(b);
    const double dz = diff.norm();
    if (dz == 0.0) return;
    const double coef = (dz - (input.row(a) - input.row(b)).norm()) / dz;
    g.row(a) += coef * diff;
    g.row(b) -= coef * diff;
  };
  for (const auto& e : selection.x_edges) add(e);
  for (const auto& e : selection.z_edges) add(e);
  return g;
}

// ------------------------------------------------------------------------- RTD

DistanceMatrix rtd_auxiliary_matrix(const DistanceMatrix& a, const DistanceMatrix& b) {
  require(a.size() == b.size(), ErrorCode::InvalidArgument, "RTD needs clouds of equal size");
  const std::size_t n = a.size(), m = 2 * n;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> v(m * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      // cross block: row n+i, column j holds a+(i, j)
      const double plus = i > j ? inf : a(i, j);
      v[(n + i) * m + j] = plus;
      v[j * m + (n + i)] = plus;
      v[(n + i) * m + (n + j)] = std::min(a(i, j), b(i, j));
    }
  return DistanceMatrix(m, std::move(v));
}

namespace {

RtdDirection rtd_direction(const DistanceMatrix& first, const DistanceMatrix& second, bool first_is_tilde,
                           int hom_dim) {
  const std::size_t n = first.size();
  const auto aux = rtd_auxiliary_matrix(first, second);
  RipsOptions opt;
  opt.max_dim = hom_dim + 1;
  const auto f = build_rips(aux, opt);
  const auto dgm = reduce(f, Coefficients::prime(2), hom_dim);

  RtdDirection out;
  // which weight an auxiliary edge reads, as seen from p_tilde
  auto use = [&](Vertex u, Vertex v, double sign) {
    if (u > v) std::swap(u, v);
    const bool u_low = u < n, v_low = v < n;
    if (u_low && v_low) return;  // constant zero block
    const Vertex a = Vertex(u_low ? u : u - n), b = Vertex(v - n);
    const Vertex lo = std::min(a, b), hi = std::max(a, b);
    if (lo == hi) return;
    if (u_low) {
      // cross block reads `first`
      if (first_is_tilde) out.tilde_uses.push_back({lo, hi, sign});
      return;
    }
    // min block: ties read the input side
    const double wf = first(lo, hi), ws = second(lo, hi);
    const bool tilde_wins = first_is_tilde ? wf < ws : ws < wf;
    if (tilde_wins) out.tilde_uses.push_back({lo, hi, sign});
  };

  for (const auto& p : dgm.view(hom_dim)) {
    if (!p.finite()) continue;
    out.bars.push_back({p.birth, p.death});
    out.total += p.death - p.birth;
    const auto birth_v = f.vertices(p.birth_index);
    const auto death_v = f.vertices(*p.death_index);
    const auto be = diameter_edge(birth_v, aux);
    const auto de = diameter_edge(death_v, aux);
    use(be.first, be.second, -1.0);
    use(de.first, de.second, +1.0);
  }
  return out;
}

}  // namespace

RtdResult rtd_loss(const Matrix& p, const Matrix& p_tilde, int hom_dim) {
  require(p.rows() == p_tilde.rows(), ErrorCode::InvalidArgument, "RTD needs clouds of equal size");
  require(hom_dim >= 1, ErrorCode::InvalidArgument, "RTD homology dimension must be positive");
  const auto w = distances(p), wt = distances(p_tilde);
  RtdResult r;
  r.forward = rtd_direction(w, wt, false, hom_dim);
  r.backward = rtd_direction(wt, w, true, hom_dim);
  r.value = r.forward.total + r.backward.total;
  return r;
}

RtdResult rtd_loss(const PointCloud& p, const PointCloud& p_tilde, int hom_dim) {
  return rtd_loss(p.to_matrix(), p_tilde.to_matrix(), hom_dim);
}

Matrix rtd_loss_grad(const Matrix& p, const Matrix& p_tilde, const RtdResult& pairing) {
  require(p.rows() == p_tilde.rows(), ErrorCode::InvalidArgument, "RTD needs clouds of equal size");
  Matrix g = Matrix::Zero(p_tilde.rows(), p_tilde.cols());
  auto add = [&](const RtdEdgeUse& u) {
    const auto a = Eigen::Index(u.a), b = Eigen::Index(u.b);
    const RowVector diff = p_tilde.row(a) - p_tilde.row(b);
    const double len = diff.norm();
    if (len == 0.0) return;
    g.row(a) += u.sign / len * diff;
    g.row(b) -= u.sign / len * diff;
  };
  for (const auto& u : pairing.forward.tilde_uses) add(u);
  for (const auto& u : pairing.backward.tilde_uses) add(u);
  return g;
}

LossTerm combined_loss(TopoLossKind kind, double weight) {
  require(weight >= 0.0 && std::isfinite(weight), ErrorCode::InvalidArgument, "loss weight must be nonnegative");
  LossTerm t;
  t.weight = weight;
  if (kind == TopoLossKind::TopoAE) {
    t.name = "topo";
    t.fn = [](const Matrix& input, const Matrix& latent, const Matrix&, bool grad) {
      const auto r = topo_loss(input, latent);
      LossValue v;
      v.value = r.value;
      if (grad) v.d_latent = topo_loss_grad(input, latent, r.selection);
      return v;
    };
  } else {
    t.name = "rtd";
    t.first_epoch = kRtdWarmupEpochs + 1;
    t.fn = [](const Matrix& input, const Matrix&, const Matrix& output, bool grad) {
      const auto r = rtd_loss(input, output);
      LossValue v;
      v.value = r.value;
      if (grad) v.d_output = rtd_loss_grad(input, output, r);
      return v;
    };
  }
  return t;
}

std::vector<LrPhase> rtd_lr_schedule() {
  return {{1, kRtdWarmupEpochs, 1e-4},
          {kRtdWarmupEpochs + 1, 30, 1e-2},
          {31, 50, 1e-3},
          {51, std::numeric_limits<int>::max(), 1e-4}};
}

}  // namespace torsionscope
