#pragma once

// Strictly convex control sets U ⊂ ℝᵏ with 0 ∈ int U, exposed through their
// support function H(h) = max_{v∈U} ⟨v, h⟩ and its gradient. On the level set
// H = 1 the gradient ∇H(h) is the extremal control.

#include <Eigen/Dense>

#include <string>
#include <variant>
#include <vector>

namespace carnot {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// U = { v : vᵀA⁻¹v ≤ 1 },  H(h) = √(hᵀAh).
struct Ellipsoid {
  Mat shape;
};

// U = { v : ‖v‖_p ≤ r },  H(h) = r‖h‖_q with 1/p + 1/q = 1.
struct LpBall {
  int dim = 0;
  double p = 2.0;
  double radius = 1.0;

  double dual_exponent() const { return p / (p - 1.0); }
};

// U = c + { v : vᵀA⁻¹v ≤ 1 },  H(h) = ⟨c, h⟩ + √(hᵀAh).
struct TranslatedEllipsoid {
  Mat shape;
  Vec center;
};

class ControlBody {
 public:
  using Variant = std::variant<Ellipsoid, LpBall, TranslatedEllipsoid>;

  static ControlBody ellipsoid(Mat shape);
  static ControlBody unit_ball(int dim);
  static ControlBody lp_ball(int dim, double p, double radius = 1.0);
  static ControlBody translated_ellipsoid(Mat shape, Vec center);

  int dim() const;
  const Variant& variant() const { return body_; }
  // "ellipsoid", "lp_ball" or "translated_ellipsoid".
  std::string type_name() const;

  // Point reflection −U (support H_{−U}(h) = H_U(−h)).
  ControlBody reflected() const;

 private:
  explicit ControlBody(Variant body) : body_(std::move(body)) {}
  Variant body_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks every body invariant: symmetric positive-definite shape within 1e−12,
// p ∈ (1, ∞), r > 0, matching dimensions, finite entries, and 0 ∈ int U
// (cᵀA⁻¹c < 1 for translated ellipsoids). Never throws.
ValidationReport validate(const ControlBody& body);

// Throws InputError listing the violations when the body is invalid.
void require_valid(const ControlBody& body);

// H(h). Throws InputError for non-finite or wrongly sized h.
double support(const ControlBody& body, const Vec& h);

// ∇H(h), a point of ∂U. Throws DomainError when ‖h‖ < kZeroGuard.
Vec support_gradient(const ControlBody& body, const Vec& h);

// h0 / H(h0). Throws AbnormalCovectorError when h0 = 0.
Vec normalize_to_level(const ControlBody& body, const Vec& h0);

// Left-hand side of the body's boundary equation at v; equals 1 on ∂U.
// Ellipsoids: vᵀA⁻¹v; lp balls: ‖v‖_p / r; translated: (v−c)ᵀA⁻¹(v−c).
double gauge(const ControlBody& body, const Vec& v);

inline constexpr double kZeroGuard = 1e-300;

// True when H fails to be C^∞ across the coordinate hyperplanes h_i = 0
// (lp balls with p ≠ 2).
bool has_coordinate_kinks(const ControlBody& body);

// Central-difference gradient of the support function. The step for each
// component is rel_step·‖h‖, shrunk near coordinate hyperplanes where lp
// support functions lose second-order smoothness.
Vec finite_difference_gradient(const ControlBody& body, const Vec& h,
                               double rel_step = 1e-5);

// Step used for component i by finite_difference_gradient.
double fd_component_step(const ControlBody& body, const Vec& h, Eigen::Index i,
                         double rel_step);

}  // namespace carnot
