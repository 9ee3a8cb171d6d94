#include "carnot/convex_bodies.hpp"

#include "carnot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace carnot {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

void check_input(const ControlBody& body, const Vec& h, const char* op) {
  if (h.size() != body.dim()) {
    std::ostringstream msg;
    msg << op << ": covector has dimension " << h.size() << ", body has dimension "
        << body.dim();
    throw InputError(msg.str());
  }
  if (!h.allFinite()) {
    throw InputError(std::string(op) + ": covector has non-finite entries");
  }
}

double quadratic_root(const Mat& shape, const Vec& h) {
  return std::sqrt(std::max(0.0, h.dot(shape * h)));
}

// ‖h‖_q evaluated with the largest component factored out.
double scaled_q_norm(const Vec& h, double q) {
  const double largest = h.cwiseAbs().maxCoeff();
  if (largest == 0.0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    sum += std::pow(std::abs(h[i]) / largest, q);
  }
  return largest * std::pow(sum, 1.0 / q);
}

void check_shape(const Mat& shape, int dim, const std::string& label,
                 std::vector<std::string>& out) {
  if (shape.rows() != shape.cols()) {
    out.push_back(label + ": shape matrix is not square");
    return;
  }
  if (shape.rows() < 1) {
    out.push_back(label + ": shape matrix is empty");
    return;
  }
  if (dim >= 0 && shape.rows() != dim) {
    out.push_back(label + ": shape matrix dimension does not match center");
  }
  if (!shape.allFinite()) {
    out.push_back(label + ": shape matrix has non-finite entries");
    return;
  }
  const double scale = std::max(1.0, shape.cwiseAbs().maxCoeff());
  if ((shape - shape.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    out.push_back(label + ": shape matrix is not symmetric within 1e-12");
  }
  const Mat sym = 0.5 * (shape + shape.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    out.push_back(label + ": shape matrix is not positive definite");
  }
}

}  // namespace

ControlBody ControlBody::ellipsoid(Mat shape) { return ControlBody(Ellipsoid{std::move(shape)}); }

ControlBody ControlBody::unit_ball(int dim) {
  return ControlBody(Ellipsoid{Mat::Identity(dim, dim)});
}

ControlBody ControlBody::lp_ball(int dim, double p, double radius) {
  return ControlBody(LpBall{dim, p, radius});
}

ControlBody ControlBody::translated_ellipsoid(Mat shape, Vec center) {
  return ControlBody(TranslatedEllipsoid{std::move(shape), std::move(center)});
}

int ControlBody::dim() const {
  return std::visit(Overloaded{
                        [](const Ellipsoid& e) { return static_cast<int>(e.shape.rows()); },
                        [](const LpBall& b) { return b.dim; },
                        [](const TranslatedEllipsoid& e) {
                          return static_cast<int>(e.shape.rows());
                        },
                    },
                    body_);
}

std::string ControlBody::type_name() const {
  return std::visit(Overloaded{
                        [](const Ellipsoid&) { return std::string("ellipsoid"); },
                        [](const LpBall&) { return std::string("lp_ball"); },
                        [](const TranslatedEllipsoid&) {
                          return std::string("translated_ellipsoid");
                        },
                    },
                    body_);
}

ControlBody ControlBody::reflected() const {
  return std::visit(Overloaded{
                        [](const Ellipsoid& e) { return ControlBody(e); },
                        [](const LpBall& b) { return ControlBody(b); },
                        [](const TranslatedEllipsoid& e) {
                          return ControlBody(TranslatedEllipsoid{e.shape, -e.center});
                        },
                    },
                    body_);
}

ValidationReport validate(const ControlBody& body) {
  ValidationReport report;
  auto& out = report.violations;
  std::visit(Overloaded{
                 [&](const Ellipsoid& e) { check_shape(e.shape, -1, "ellipsoid", out); },
                 [&](const LpBall& b) {
                   if (b.dim < 1) out.push_back("lp_ball: dimension must be positive");
                   if (!std::isfinite(b.p) || !(b.p > 1.0)) {
                     out.push_back("lp_ball: strict convexity requires 1 < p < inf");
                   }
                   if (!std::isfinite(b.radius) || !(b.radius > 0.0)) {
                     out.push_back("lp_ball: radius must be positive and finite");
                   }
                 },
                 [&](const TranslatedEllipsoid& e) {
                   const std::size_t before = out.size();
                   check_shape(e.shape, static_cast<int>(e.center.size()),
                               "translated_ellipsoid", out);
                   if (!e.center.allFinite()) {
                     out.push_back("translated_ellipsoid: center has non-finite entries");
                   }
                   if (out.size() != before) return;
                   const Vec solved = e.shape.ldlt().solve(e.center);
                   if (!(e.center.dot(solved) < 1.0)) {
                     out.push_back(
                         "translated_ellipsoid: origin not interior (c^T A^-1 c >= 1)");
                   }
                 },
             },
             body.variant());
  return report;
}

void require_valid(const ControlBody& body) {
  const ValidationReport report = validate(body);
  if (report.ok()) return;
  std::string msg = "invalid control body:";
  for (const auto& v : report.violations) msg += " " + v + ";";
  throw InputError(msg);
}

double support(const ControlBody& body, const Vec& h) {
  check_input(body, h, "support");
  return std::visit(
      Overloaded{
          [&](const Ellipsoid& e) { return quadratic_root(e.shape, h); },
          [&](const LpBall& b) { return b.radius * scaled_q_norm(h, b.dual_exponent()); },
          [&](const TranslatedEllipsoid& e) {
            return e.center.dot(h) + quadratic_root(e.shape, h);
          },
      },
      body.variant());
}

Vec support_gradient(const ControlBody& body, const Vec& h) {
  check_input(body, h, "support_gradient");
  if (h.norm() < kZeroGuard) {
    throw DomainError("support_gradient: H is not differentiable at h = 0");
  }
  return std::visit(Overloaded{
                        [&](const Ellipsoid& e) -> Vec {
                          const Vec ah = e.shape * h;
                          return ah / std::sqrt(h.dot(ah));
                        },
                        [&](const LpBall& b) -> Vec {
                          const double q = b.dual_exponent();
                          const double norm = scaled_q_norm(h, q);
                          Vec g(h.size());
                          for (Eigen::Index i = 0; i < h.size(); ++i) {
                            // 0^{q-1} = 0 for q > 1
                            const double mag = std::pow(std::abs(h[i]) / norm, q - 1.0);
                            g[i] = h[i] < 0.0 ? -mag : (h[i] > 0.0 ? mag : 0.0);
                          }
                          return b.radius * g;
                        },
                        [&](const TranslatedEllipsoid& e) -> Vec {
                          const Vec ah = e.shape * h;
                          return e.center + ah / std::sqrt(h.dot(ah));
                        },
                    },
                    body.variant());
}

Vec normalize_to_level(const ControlBody& body, const Vec& h0) {
  check_input(body, h0, "normalize_to_level");
  if (h0.norm() < kZeroGuard) {
    throw AbnormalCovectorError(
        "normalize_to_level: h0 = 0 gives H = 0 (abnormal case, excluded)");
  }
  const double level = support(body, h0);
  if (!(level > 0.0)) {
    throw AbnormalCovectorError("normalize_to_level: H(h0) is not positive");
  }
  return h0 / level;
}

double gauge(const ControlBody& body, const Vec& v) {
  check_input(body, v, "gauge");
  return std::visit(Overloaded{
                        [&](const Ellipsoid& e) { return v.dot(e.shape.ldlt().solve(v)); },
                        [&](const LpBall& b) { return scaled_q_norm(v, b.p) / b.radius; },
                        [&](const TranslatedEllipsoid& e) {
                          const Vec d = v - e.center;
                          return d.dot(e.shape.ldlt().solve(d));
                        },
                    },
                    body.variant());
}

bool has_coordinate_kinks(const ControlBody& body) {
  const auto* ball = std::get_if<LpBall>(&body.variant());
  return ball && ball->p != 2.0;
}

double fd_component_step(const ControlBody& body, const Vec& h, Eigen::Index i,
                         double rel_step) {
  const double norm = h.norm();
  const double base = rel_step * norm;
  if (!std::holds_alternative<LpBall>(body.variant())) return base;
  const double mag = std::abs(h[i]);
  if (mag > 0.0 && mag < 100.0 * base) return std::max(0.01 * mag, 1e-10 * norm);
  return base;
}

Vec finite_difference_gradient(const ControlBody& body, const Vec& h, double rel_step) {
  Vec g(h.size());
  Vec probe = h;
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    const double step = fd_component_step(body, h, i, rel_step);
    probe[i] = h[i] + step;
    const double plus = support(body, probe);
    probe[i] = h[i] - step;
    const double minus = support(body, probe);
    probe[i] = h[i];
    g[i] = (plus - minus) / (2.0 * step);
  }
  return g;
}

}  // namespace carnot
