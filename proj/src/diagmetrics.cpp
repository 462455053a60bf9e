#include "torsionscope/diagmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "torsionscope/error.hpp"
#include "torsionscope/rips.hpp"

namespace torsionscope {

namespace {

inline double linf(const std::pair<double, double>& p, const std::pair<double, double>& q) {
  return std::max(std::abs(p.first - q.first), std::abs(p.second - q.second));
}
inline double to_diagonal(const std::pair<double, double>& p) { return (p.second - p.first) / 2.0; }

// Augmented cost: rows are a_0..a_{n-1} then m diagonal slots, columns are
// b_0..b_{m-1} then n diagonal slots. Any diagonal slot serves any point.
struct Augmented {
  const DiagramPoints& a;
  const DiagramPoints& b;
  std::size_t n, m;
  Augmented(const DiagramPoints& a_, const DiagramPoints& b_) : a(a_), b(b_), n(a_.size()), m(b_.size()) {}
  std::size_t size() const { return n + m; }
  double cost(std::size_t i, std::size_t j) const {
    if (i < n && j < m) return linf(a[i], b[j]);
    if (i < n) return to_diagonal(a[i]);
    if (j < m) return to_diagonal(b[j]);
    return 0.0;
  }
};

/// Hopcroft-Karp: is there a perfect matching using only edges of cost <= t?
class ThresholdMatcher {
 public:
  explicit ThresholdMatcher(const Augmented& g) : g_(g), N_(g.size()) {}

  bool perfect(double t) {
    t_ = t;
    match_l_.assign(N_, kNone);
    match_r_.assign(N_, kNone);
    std::size_t matched = 0;
    while (bfs()) {
      for (std::size_t u = 0; u < N_; ++u)
        if (match_l_[u] == kNone && dfs(u)) ++matched;
    }
    return matched == N_;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  bool bfs() {
    dist_.assign(N_, kNone);
    std::queue<std::size_t> q;
    for (std::size_t u = 0; u < N_; ++u)
      if (match_l_[u] == kNone) {
        dist_[u] = 0;
        q.push(u);
      }
    bool found = false;
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (std::size_t v = 0; v < N_; ++v) {
        if (g_.cost(u, v) > t_) continue;
        const auto w = match_r_[v];
        if (w == kNone)
          found = true;
        else if (dist_[w] == kNone) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  }

  bool dfs(std::size_t u) {
    for (std::size_t v = 0; v < N_; ++v) {
      if (g_.cost(u, v) > t_) continue;
      const auto w = match_r_[v];
      if (w == kNone || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_l_[u] = v;
        match_r_[v] = u;
        return true;
      }
    }
    dist_[u] = kNone;
    return false;
  }

  const Augmented& g_;
  std::size_t N_;
  double t_ = 0.0;
  std::vector<std::size_t> match_l_, match_r_, dist_;
};

// Shortest augmenting path Hungarian method, O(N^3).
double assignment_cost(const Augmented& g) {
  const std::size_t N = g.size();
  if (N == 0) return 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(N + 1, 0.0), v(N + 1, 0.0), minv(N + 1);
  std::vector<std::size_t> p(N + 1, 0), way(N + 1, 0);
  std::vector<char> used(N + 1);
  for (std::size_t i = 1; i <= N; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= N; ++j) {
        if (used[j]) continue;
        const double cur = g.cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= N; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  // recompute from the assignment rather than trusting the potentials
  double total = 0.0;
  for (std::size_t j = 1; j <= N; ++j) total += g.cost(p[j] - 1, j - 1);
  return total;
}

void validate(const DiagramPoints& pts) {
  for (const auto& [b, d] : pts)
    require(std::isfinite(b) && std::isfinite(d) && d >= b, ErrorCode::InvalidArgument,
            "diagram points must be finite with death >= birth");
}

struct Split {
  DiagramPoints finite_a, finite_b;
  std::vector<double> inf_a, inf_b;
};

Split split(const PersistenceDiagram& d1, const PersistenceDiagram& d2, int dim, const DistanceOptions& opt) {
  require(dim >= 0, ErrorCode::InvalidArgument, "dimension must be nonnegative");
  Split s;
  auto take = [&](const PersistenceDiagram& d, DiagramPoints& fin, std::vector<double>& inf) {
    for (const auto& p : d.view(dim)) {
      if (p.finite())
        fin.emplace_back(p.birth, p.death);
      else if (opt.infinite == InfiniteBars::Match)
        inf.push_back(p.birth);
      else if (opt.infinite == InfiniteBars::Cap && opt.cap > p.birth)
        fin.emplace_back(p.birth, opt.cap);
    }
  };
  take(d1, s.finite_a, s.inf_a);
  take(d2, s.finite_b, s.inf_b);
  require(s.inf_a.size() == s.inf_b.size(), ErrorCode::InvalidArgument,
          "diagrams have different numbers of infinite bars in dimension " + std::to_string(dim));
  std::sort(s.inf_a.begin(), s.inf_a.end());
  std::sort(s.inf_b.begin(), s.inf_b.end());
  return s;
}

}  // namespace

double bottleneck(const DiagramPoints& a, const DiagramPoints& b) {
  validate(a);
  validate(b);
  const Augmented g(a, b);
  if (g.size() == 0) return 0.0;
  std::vector<double> cand;
  cand.reserve(a.size() * b.size() + a.size() + b.size() + 1);
  cand.push_back(0.0);
  for (const auto& p : a) cand.push_back(to_diagonal(p));
  for (const auto& q : b) cand.push_back(to_diagonal(q));
  for (const auto& p : a)
    for (const auto& q : b) cand.push_back(linf(p, q));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  ThresholdMatcher matcher(g);
  std::size_t lo = 0, hi = cand.size() - 1;  // cand[hi] is always feasible
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (matcher.perfect(cand[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return cand[lo];
}

double bottleneck(const PersistenceDiagram& d1, const PersistenceDiagram& d2, int dim,
                  const DistanceOptions& options) {
  const auto s = split(d1, d2, dim, options);
  double out = bottleneck(s.finite_a, s.finite_b);
  for (std::size_t k = 0; k < s.inf_a.size(); ++k) out = std::max(out, std::abs(s.inf_a[k] - s.inf_b[k]));
  return out;
}

double wasserstein1(const DiagramPoints& a, const DiagramPoints& b) {
  validate(a);
  validate(b);
  return assignment_cost(Augmented(a, b));
}

double wasserstein1(const PersistenceDiagram& d1, const PersistenceDiagram& d2, int dim,
                    const DistanceOptions& options) {
  const auto s = split(d1, d2, dim, options);
  double out = wasserstein1(s.finite_a, s.finite_b);
  for (std::size_t k = 0; k < s.inf_a.size(); ++k) out += std::abs(s.inf_a[k] - s.inf_b[k]);
  return out;
}

// --------------------------------------------------------------- bar statistics

BarLengthSet::BarLengthSet(std::vector<double> lengths) : lengths_(std::move(lengths)) {
  for (double l : lengths_) {
    require(std::isfinite(l) && l > 0.0, ErrorCode::InvalidArgument, "bar lengths must be finite and positive");
    total_ += l;
  }
}

BarLengthSet BarLengthSet::from_diagram(const PersistenceDiagram& diagram, int dim, std::optional<double> cap) {
  std::vector<double> out;
  for (const auto& p : diagram.view(dim)) {
    if (p.finite())
      out.push_back(p.persistence());
    else if (cap && *cap > p.birth)
      out.push_back(*cap - p.birth);
  }
  return BarLengthSet(std::move(out));
}

BarLengthSet BarLengthSet::sorted_descending() const {
  auto v = lengths_;
  std::sort(v.begin(), v.end(), std::greater<>());
  return BarLengthSet(std::move(v));
}

namespace {

// entropy of lengths[from..]; 0 for an empty or single-bar tail
double tail_entropy(const std::vector<double>& lengths, std::size_t from, double total) {
  double e = 0.0;
  for (std::size_t k = from; k < lengths.size(); ++k) {
    const double p = lengths[k] / total;
    e -= p * std::log(p);
  }
  return e;
}

}  // namespace

double persistence_entropy(const BarLengthSet& bars) {
  require(!bars.empty(), ErrorCode::InvalidArgument, "persistence entropy of an empty bar set");
  return std::max(0.0, tail_entropy(bars.lengths(), 0, bars.total()));
}

double max_feature_count(std::size_t n, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
  const double om = 1.0 - alpha;
  return double(n) * (alpha * std::log(1.0 / alpha) - alpha * om) / (om * om);
}

NoiseClassification classify_noise(const BarLengthSet& bars, double alpha) {
  require(!bars.empty(), ErrorCode::InvalidArgument, "cannot classify an empty bar set");
  const auto& L = bars.lengths();
  for (std::size_t k = 1; k < L.size(); ++k)
    require(L[k] <= L[k - 1], ErrorCode::Precondition, "bars must be sorted by decreasing length");
  const std::size_t n = L.size();
  NoiseClassification out;
  out.q_bound = max_feature_count(n, alpha);

  // suffix totals P_i = sum of bars after position i (1-based)
  std::vector<double> P(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) P[i] = P[i + 1] + L[i];
  auto s_prime = [&](std::size_t i) {
    if (i == 0) return P[0];
    const double Pi = P[i];
    const double expE = i == n ? 1.0 : std::exp(tail_entropy(L, i, Pi));
    return Pi + double(i) * Pi / expE;
  };

  std::size_t features = n;
  double prev = s_prime(0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double cur = s_prime(i);
    const double C = cur > 0.0 ? prev / cur : std::numeric_limits<double>::infinity();
    out.quotients.push_back(C);
    if (C >= 1.0 && out.q_bound < double(i)) {
      features = i - 1;
      break;
    }
    prev = cur;
  }
  out.feature_count = features;
  out.features.assign(L.begin(), L.begin() + std::ptrdiff_t(features));
  out.noise.assign(L.begin() + std::ptrdiff_t(features), L.end());
  return out;
}

double min_feature_length(const BarLengthSet& bars) {
  require(!bars.empty(), ErrorCode::InvalidArgument, "empty bar set");
  return bars.total() / std::exp(persistence_entropy(bars));
}

double min_torsion_bottleneck(const PersistenceDiagram& input) {
  double best = std::numeric_limits<double>::infinity();
  for (int dim = 0; dim <= input.max_hom_dim(); ++dim)
    for (const auto& p : input.view(dim))
      if (p.finite()) best = std::min(best, p.persistence() / 2.0);
  require(std::isfinite(best), ErrorCode::InvalidArgument, "diagram has no finite positive-length pair");
  return best;
}

ScaleRatios scale_ratios(const PointCloud& cloud) {
  require(cloud.size() >= 2, ErrorCode::InvalidArgument, "need at least two points");
  const auto d = DistanceMatrix::from_cloud(cloud);
  ScaleRatios s;
  s.r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) s.r = std::min(s.r, d(i, j));
  s.T = enclosing_radius(d) / 2.0;
  require(s.r > 0.0, ErrorCode::Precondition, "cloud has duplicate points");
  auto clamp = [](double a) { return std::clamp(a, 1e-12, 1.0 - 1e-12); };
  s.candidates = {clamp(s.r / s.T), clamp(s.r / (2.0 * s.T))};
  return s;
}

}  // namespace torsionscope
