#include "carnot/horizontal_lift.hpp"

#include "carnot/detail/flow_engine.hpp"

namespace carnot {

GroupPoint GroupPoint::identity(int k) {
  const AlgebraSpec spec(k);
  return GroupPoint{Vec::Zero(k), Vec::Zero(spec.pair_count())};
}

GroupTangent horizontal_rhs(const GroupPoint& q, const Vec& u) {
  const auto k = q.x.size();
  if (k < 2) throw InputError("horizontal_rhs: need at least 2 generators");
  const AlgebraSpec spec(static_cast<int>(k));
  if (u.size() != k || q.y.size() != spec.pair_count()) {
    throw InputError("horizontal_rhs: dimensions of q and u are inconsistent");
  }
  GroupTangent out{u, Vec(spec.pair_count())};
  for (int f = 0; f < spec.pair_count(); ++f) {
    const auto [i, j] = spec.pair_at(f);
    out.y[f] = 0.5 * (q.x[i] * u[j] - q.x[j] * u[i]);
  }
  return out;
}

GroupPoint unpack_group_point(const Vec& stacked, int k) {
  return GroupPoint{stacked.head(k), stacked.tail(stacked.size() - k)};
}

LiftResult integrate_horizontal(const Vec& h0, const SkewMatrix& m, const ControlBody& body,
                                double t1, const FlowOptions& opts) {
  if (!(t1 > 0.0)) throw InputError("integrate_horizontal: t1 must be positive");
  if (h0.size() != body.dim()) throw InputError("integrate_horizontal: h0 dimension mismatch");
  LiftResult out;
  out.vertical =
      detail::run_flow(normalize_to_level(body, h0), m, body, TimeSpan{0.0, t1}, opts, true);
  const int k = body.dim();
  out.path.reserve(out.vertical.lift.size());
  for (const Vec& stacked : out.vertical.lift) out.path.push_back(unpack_group_point(stacked, k));
  out.endpoint = out.path.back();
  return out;
}

}  // namespace carnot
