#pragma once

#include "carnot/extremal_flow.hpp"

namespace carnot::detail {

// Shared driver for integrate_vertical and integrate_horizontal. With
// `with_lift` the state is (h, x, y) of size k + k + k(k−1)/2 and the lift
// equations ẋ = u, ẏ_ij = (x_i u_j − x_j u_i)/2 are integrated jointly.
// h0 must already satisfy H(h0) = 1.
Trajectory run_flow(const Vec& h0, const SkewMatrix& m, const ControlBody& body, TimeSpan span,
                    const FlowOptions& opts, bool with_lift);

}  // namespace carnot::detail
