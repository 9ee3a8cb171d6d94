#pragma once

// Group trajectories q̇ = Σ u_i X_i in the chart G ≅ ℝ^{k(k+1)/2} where
//   X_i = ∂/∂x_i − Σ_{j>i} (x_j/2) ∂/∂x_ij + Σ_{j<i} (x_j/2) ∂/∂x_ji,
// so that ẋ_i = u_i and ẋ_ij = (x_i u_j − x_j u_i)/2 for i < j.

#include "carnot/extremal_flow.hpp"

#include <vector>

namespace carnot {

struct GroupPoint {
  Vec x;  // first-level coordinates x_1..x_k
  Vec y;  // second-level coordinates x_ij in flat pair order

  static GroupPoint identity(int k);
};

struct GroupTangent {
  Vec x;
  Vec y;
};

// Throws InputError on inconsistent dimensions.
GroupTangent horizontal_rhs(const GroupPoint& q, const Vec& u);

struct LiftResult {
  GroupPoint endpoint;
  std::vector<GroupPoint> path;  // at vertical.times
  Trajectory vertical;
};

// Integrates (h, x, y) jointly from q(0) = id with u(t) = ∇H(h(t)); h0 is
// normalized to H = 1 first. Errors propagate from the vertical integration.
LiftResult integrate_horizontal(const Vec& h0, const SkewMatrix& m, const ControlBody& body,
                                double t1, const FlowOptions& opts = {});

// Splits a stacked (x, y) vector.
GroupPoint unpack_group_point(const Vec& stacked, int k);

}  // namespace carnot
