#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "torsionscope/neuralnet.hpp"
#include "torsionscope/pointcloud.hpp"
#include "torsionscope/rips.hpp"

namespace torsionscope {

enum class EdgeRole { Creator, Destroyer };

struct SelectedEdge {
  Vertex a = 0, b = 0;  // a < b
  EdgeRole role = EdgeRole::Destroyer;
  int hom_dim = 0;
};

/// Edges realizing the dimension-0 pairing (the minimum spanning tree in
/// filtration order) of each space.
struct EdgeSelection {
  std::vector<SelectedEdge> x_edges;
  std::vector<SelectedEdge> z_edges;
};

/// Dimension-0 persistence pairing edges of a distance matrix, in the order
/// they merge components.
std::vector<SelectedEdge> persistence_edges_dim0(const DistanceMatrix& d);

struct TopoLossResult {
  double value = 0.0;
  double x_to_z = 0.0;
  double z_to_x = 0.0;
  EdgeSelection selection;
};

/// Half the squared edge-length differences over the X selection plus the
/// same over the Z selection.
TopoLossResult topo_loss(const Matrix& input, const Matrix& latent);
TopoLossResult topo_loss(const PointCloud& input, const PointCloud& latent);

/// Gradient with respect to the latent coordinates, selections held fixed.
Matrix topo_loss_grad(const Matrix& input, const Matrix& latent, const EdgeSelection& selection);

/// One endpoint of an RTD bar: the edge whose weight sets it.
struct RtdEdgeUse {
  Vertex a = 0, b = 0;  // original point indices, a < b
  double sign = 1.0;    // +1 for a death edge, -1 for a birth edge
};

struct RtdBar {
  double birth = 0.0, death = 0.0;
};

struct RtdDirection {
  std::vector<RtdBar> bars;
  /// Edge uses whose weight depends on p_tilde (the others carry no gradient).
  std::vector<RtdEdgeUse> tilde_uses;
  double total = 0.0;
};

struct RtdResult {
  double value = 0.0;
  RtdDirection forward;   // auxiliary complex built on (w, w~)
  RtdDirection backward;  // and on (w~, w)
};

/// The 2N-vertex auxiliary matrix [[0, a+^T], [a+, min(a, b)]] where a+ is a
/// with its strictly lower triangle set to +inf.
DistanceMatrix rtd_auxiliary_matrix(const DistanceMatrix& a, const DistanceMatrix& b);

/// Sum of the hom_dim bar lengths of both auxiliary complexes.
RtdResult rtd_loss(const Matrix& p, const Matrix& p_tilde, int hom_dim = 1);
RtdResult rtd_loss(const PointCloud& p, const PointCloud& p_tilde, int hom_dim = 1);

/// Frozen-pairing subgradient with respect to p_tilde.
Matrix rtd_loss_grad(const Matrix& p, const Matrix& p_tilde, const RtdResult& pairing);

enum class TopoLossKind { TopoAE, Rtd };

/// Loss term for training: TopoAE compares input with latent, RTD compares
/// input with reconstruction and switches on after the MSE-only warmup.
LossTerm combined_loss(TopoLossKind kind, double weight);

/// MSE-only epochs before RTD joins.
inline constexpr int kRtdWarmupEpochs = 10;
/// Learning rates of the RTD schedule: warmup at 1e-4, 11-30 at 1e-2, 31-50
/// at 1e-3, 1e-4 afterwards.
std::vector<LrPhase> rtd_lr_schedule();

}  // namespace torsionscope
