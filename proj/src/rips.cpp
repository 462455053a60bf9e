#include "torsionscope/rips.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "text_util.hpp"
#include "torsionscope/error.hpp"

namespace torsionscope {

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  require(values_.size() == n_ * n_, ErrorCode::InvalidArgument, "distance matrix must be n x n");
  for (std::size_t i = 0; i < n_; ++i) {
    require(values_[i * n_ + i] == 0.0, ErrorCode::InvalidArgument,
            "distance matrix diagonal must be zero");
    for (std::size_t j = i + 1; j < n_; ++j)
      require(values_[i * n_ + j] == values_[j * n_ + i], ErrorCode::InvalidArgument,
              "distance matrix must be symmetric");
  }
}

DistanceMatrix DistanceMatrix::from_cloud(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) v[i * n + j] = v[j * n + i] = distance(cloud.point(i), cloud.point(j));
  DistanceMatrix d;
  d.n_ = n;
  d.values_ = std::move(v);
  return d;
}

double enclosing_radius(const DistanceMatrix& d) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) worst = std::max(worst, d(i, j));
    best = std::min(best, worst);
  }
  return d.size() == 0 ? 0.0 : best;
}

// ------------------------------------------------------------------ Filtration

std::uint64_t Filtration::key(std::span<const Vertex> vertices) const {
  std::uint64_t k = 0;
  for (std::size_t i = 0; i < vertices.size(); ++i) k += binomial_[i + 1][vertices[i]];
  return k;
}

void Filtration::finalize(std::vector<Vertex> verts, std::vector<std::uint8_t> dims,
                          std::vector<double> births) {
  const std::size_t n = births.size();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  const std::size_t stride = stride_;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (births[a] != births[b]) return births[a] < births[b];
    if (dims[a] != dims[b]) return dims[a] < dims[b];
    return std::lexicographical_compare(verts.begin() + a * stride, verts.begin() + a * stride + dims[a] + 1,
                                        verts.begin() + b * stride, verts.begin() + b * stride + dims[b] + 1);
  });

  verts_.assign(n * stride, 0);
  dims_.resize(n);
  births_.resize(n);
  max_dim_ = -1;
  vertex_count_ = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    std::copy_n(verts.begin() + src * stride, stride, verts_.begin() + i * stride);
    dims_[i] = dims[src];
    births_[i] = births[src];
    max_dim_ = std::max(max_dim_, int(dims_[i]));
    for (int k = 0; k <= dims_[i]; ++k)
      vertex_count_ = std::max<std::size_t>(vertex_count_, verts_[i * stride + k] + 1);
  }

  // binomial table for keys, with an overflow guard
  const std::size_t kmax = std::size_t(std::max(max_dim_, 0)) + 1;
  binomial_.assign(kmax + 1, std::vector<std::uint64_t>(vertex_count_ + 1, 0));
  for (std::size_t v = 0; v <= vertex_count_; ++v) {
    binomial_[0][v] = 1;
    for (std::size_t k = 1; k <= kmax; ++k) {
      if (v == 0) continue;
      const std::uint64_t a = binomial_[k - 1][v - 1], b = binomial_[k][v - 1];
      require(a <= std::numeric_limits<std::uint64_t>::max() - b, ErrorCode::CapacityExceeded,
              "simplex key space overflows 64 bits");
      binomial_[k][v] = a + b;
    }
  }

  index_.assign(std::size_t(max_dim_ + 1), {});
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = index_[dims_[i]].emplace(key(vertices(i)), std::uint32_t(i));
    require(inserted, ErrorCode::InvalidArgument, "duplicate simplex in filtration");
  }
}

std::optional<std::size_t> Filtration::index_of(std::span<const Vertex> vertices) const {
  if (vertices.empty()) return std::nullopt;
  const std::size_t d = vertices.size() - 1;
  if (d >= index_.size()) return std::nullopt;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (vertices[i] >= vertex_count_) return std::nullopt;
    if (i && vertices[i] <= vertices[i - 1]) return std::nullopt;
  }
  auto it = index_[d].find(key(vertices));
  if (it == index_[d].end()) return std::nullopt;
  return it->second;
}

std::size_t Filtration::prefix_size(double radius) const {
  return std::size_t(std::upper_bound(births_.begin(), births_.end(), radius) - births_.begin());
}

Filtration Filtration::from_simplices(std::vector<Entry> simplices) {
  require(!simplices.empty(), ErrorCode::InvalidArgument, "filtration must contain a simplex");
  std::size_t stride = 1;
  for (auto& s : simplices) {
    require(!s.vertices.empty(), ErrorCode::InvalidArgument, "empty simplex");
    require(s.vertices.size() <= 255, ErrorCode::InvalidArgument, "simplex dimension too large");
    std::sort(s.vertices.begin(), s.vertices.end());
    require(std::adjacent_find(s.vertices.begin(), s.vertices.end()) == s.vertices.end(),
            ErrorCode::InvalidArgument, "simplex with repeated vertex");
    require(std::isfinite(s.birth), ErrorCode::InvalidArgument, "simplex birth must be finite");
    stride = std::max(stride, s.vertices.size());
  }
  std::vector<Vertex> verts(simplices.size() * stride, 0);
  std::vector<std::uint8_t> dims(simplices.size());
  std::vector<double> births(simplices.size());
  for (std::size_t i = 0; i < simplices.size(); ++i) {
    std::copy(simplices[i].vertices.begin(), simplices[i].vertices.end(), verts.begin() + i * stride);
    dims[i] = std::uint8_t(simplices[i].vertices.size() - 1);
    births[i] = simplices[i].birth;
  }
  Filtration f;
  f.stride_ = stride;
  f.finalize(std::move(verts), std::move(dims), std::move(births));

  // closure: every facet present and not born later
  std::vector<Vertex> face;
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto v = f.vertices(i);
    if (v.size() < 2) continue;
    for (std::size_t omit = 0; omit < v.size(); ++omit) {
      face.clear();
      for (std::size_t k = 0; k < v.size(); ++k)
        if (k != omit) face.push_back(v[k]);
      auto idx = f.index_of(face);
      require(idx.has_value(), ErrorCode::InvalidArgument, "simplex list is not closed under faces");
      require(*idx < i, ErrorCode::InvalidArgument, "face born after its coface");
    }
  }
  return f;
}

// ------------------------------------------------------------------ Rips

namespace {

struct NeighborGraph {
  // higher neighbors of each vertex, ascending
  std::vector<std::vector<Vertex>> up;
};

NeighborGraph neighbor_graph(const DistanceMatrix& d, double r) {
  NeighborGraph g;
  g.up.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j)
      if (d(i, j) <= r) g.up[i].push_back(Vertex(j));
  return g;
}

/// Depth-first clique enumeration; `emit` returns false to stop early.
template <typename Emit>
bool enumerate_cliques(const DistanceMatrix& d, const NeighborGraph& g, int max_dim, Emit&& emit) {
  std::vector<Vertex> simplex;
  std::vector<std::vector<Vertex>> cand_stack(std::size_t(max_dim) + 2);

  auto recurse = [&](auto&& self, double birth, std::size_t depth) -> bool {
    if (!emit(std::span<const Vertex>(simplex), birth)) return false;
    if (int(simplex.size()) - 1 >= max_dim) return true;
    const auto& cands = cand_stack[depth];
    for (Vertex c : cands) {
      double b = birth;
      for (Vertex v : simplex) b = std::max(b, d(v, c));
      auto& next = cand_stack[depth + 1];
      next.clear();
      const auto& nc = g.up[c];
      std::set_intersection(cands.begin(), cands.end(), nc.begin(), nc.end(), std::back_inserter(next));
      simplex.push_back(c);
      const bool go_on = self(self, b, depth + 1);
      simplex.pop_back();
      if (!go_on) return false;
    }
    return true;
  };

  for (std::size_t v = 0; v < d.size(); ++v) {
    simplex.assign(1, Vertex(v));
    cand_stack[0] = g.up[v];
    if (!recurse(recurse, 0.0, 0)) return false;
  }
  return true;
}

double resolve_radius(const DistanceMatrix& d, const RipsOptions& o) {
  if (!o.max_radius) return enclosing_radius(d);
  require(*o.max_radius >= 0.0, ErrorCode::InvalidArgument, "max_radius must be nonnegative");
  return *o.max_radius;
}

}  // namespace

std::size_t count_rips_simplices(const DistanceMatrix& d, int max_dim, double max_radius,
                                 std::size_t stop_after) {
  const NeighborGraph g = neighbor_graph(d, max_radius);
  std::size_t count = 0;
  enumerate_cliques(d, g, max_dim, [&](std::span<const Vertex>, double) { return ++count <= stop_after; });
  return count;
}

Filtration build_rips(const PointCloud& cloud, const RipsOptions& options) {
  return build_rips(DistanceMatrix::from_cloud(cloud), options);
}

Filtration build_rips(const DistanceMatrix& d, const RipsOptions& options) {
  require(options.max_dim >= 0, ErrorCode::InvalidArgument, "max_dim must be nonnegative");
  require(options.max_dim < 255, ErrorCode::InvalidArgument, "max_dim too large");
  require(d.size() >= 1, ErrorCode::InvalidArgument, "empty distance matrix");
  const double r = resolve_radius(d, options);
  const NeighborGraph g = neighbor_graph(d, r);
  const std::size_t stride = std::size_t(options.max_dim) + 1;

  std::vector<Vertex> verts;
  std::vector<std::uint8_t> dims;
  std::vector<double> births;
  std::size_t count = 0;
  enumerate_cliques(d, g, options.max_dim, [&](std::span<const Vertex> s, double birth) {
    ++count;
    if (count <= options.simplex_cap) {
      const std::size_t base = verts.size();
      verts.resize(base + stride, 0);
      std::copy(s.begin(), s.end(), verts.begin() + base);
      dims.push_back(std::uint8_t(s.size() - 1));
      births.push_back(birth);
    } else if (!verts.empty()) {
      // over the cap: keep counting only
      verts = {};
      dims = {};
      births = {};
    }
    return true;
  });
  if (count > options.simplex_cap)
    fail(ErrorCode::CapacityExceeded, "Rips complex would contain " + std::to_string(count) +
                                          " simplices, above the cap of " +
                                          std::to_string(options.simplex_cap));

  Filtration f;
  f.stride_ = stride;
  f.finalize(std::move(verts), std::move(dims), std::move(births));
  return f;
}

// ------------------------------------------------------------------ boundary

BoundaryMatrix boundary_matrix(const Filtration& f) {
  BoundaryMatrix m;
  m.offsets_.reserve(f.size() + 1);
  std::vector<Vertex> face;
  std::vector<BoundaryMatrix::Entry> col;
  for (std::size_t j = 0; j < f.size(); ++j) {
    auto v = f.vertices(j);
    col.clear();
    if (v.size() >= 2) {
      for (std::size_t omit = 0; omit < v.size(); ++omit) {
        face.clear();
        for (std::size_t k = 0; k < v.size(); ++k)
          if (k != omit) face.push_back(v[k]);
        auto idx = f.index_of(face);
        if (!idx) fail(ErrorCode::Internal, "filtration missing a face");
        col.push_back({std::uint32_t(*idx), std::int8_t(omit % 2 == 0 ? 1 : -1)});
      }
      std::sort(col.begin(), col.end(), [](auto a, auto b) { return a.row < b.row; });
    }
    m.entries_.insert(m.entries_.end(), col.begin(), col.end());
    m.offsets_.push_back(m.entries_.size());
  }
  return m;
}

Filtration sublevel_restriction(const Filtration& f, double radius) {
  require(radius >= 0.0, ErrorCode::InvalidArgument, "radius must be nonnegative");
  const std::size_t n = f.prefix_size(radius);
  std::vector<Filtration::Entry> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto v = f.vertices(i);
    entries.push_back({std::vector<Vertex>(v.begin(), v.end()), f.birth(i)});
  }
  if (entries.empty()) return Filtration{};
  return Filtration::from_simplices(std::move(entries));
}

std::string dump_filtration(const Filtration& f) {
  std::string out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    out += detail::format_double(f.birth(i));
    out += ' ';
    out += std::to_string(f.dim(i));
    for (Vertex v : f.vertices(i)) {
      out += ' ';
      out += std::to_string(v);
    }
    out += '\n';
  }
  return out;
}

Filtration parse_filtration(const std::string& text) {
  std::vector<Filtration::Entry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto fields = detail::split(line, ' ');
    std::vector<std::string> tok;
    for (const auto& f : fields)
      if (!f.empty()) tok.emplace_back(f);
    if (tok.empty() || tok[0][0] == '#') continue;
    const auto where = "filtration line " + std::to_string(lineno);
    require(tok.size() >= 3, ErrorCode::InvalidArgument, where + ": expected `birth dim v0 ...`");
    Filtration::Entry e;
    e.birth = detail::parse_double(tok[0]);
    long dim = -1;
    try {
      dim = std::stol(tok[1]);
      for (std::size_t k = 2; k < tok.size(); ++k) {
        const long v = std::stol(tok[k]);
        require(v >= 0, ErrorCode::InvalidArgument, where + ": negative vertex");
        e.vertices.push_back(Vertex(v));
      }
    } catch (const std::logic_error&) {
      fail(ErrorCode::InvalidArgument, where + ": malformed integer");
    }
    require(dim >= 0 && dim + 3 == long(tok.size()), ErrorCode::InvalidArgument,
            where + ": dim does not match the vertex count");
    entries.push_back(std::move(e));
  }
  return Filtration::from_simplices(std::move(entries));
}

std::pair<Vertex, Vertex> diameter_edge(std::span<const Vertex> v, const DistanceMatrix& d) {
  require(v.size() >= 2, ErrorCode::InvalidArgument, "diameter edge needs two vertices");
  std::pair<Vertex, Vertex> best{v[0], v[1]};
  double best_len = d(v[0], v[1]);
  for (std::size_t a = 0; a < v.size(); ++a)
    for (std::size_t b = a + 1; b < v.size(); ++b)
      if (d(v[a], v[b]) > best_len) {
        best_len = d(v[a], v[b]);
        best = {v[a], v[b]};
      }
  return best;
}

}  // namespace torsionscope
