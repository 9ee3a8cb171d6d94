#include "carnot/lie_structure.hpp"

#include "carnot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace carnot {

AlgebraSpec::AlgebraSpec(int k) : k_(k) {
  if (k < 2) throw InputError("AlgebraSpec: need at least 2 generators, got " + std::to_string(k));
}

int AlgebraSpec::flat_index(int i, int j) const {
  if (i < 0 || j >= k_ || i >= j) {
    throw InputError("AlgebraSpec: pair index requires 0 <= i < j < k");
  }
  // Pairs preceding row i: (k−1) + (k−2) + … + (k−i).
  return i * (2 * k_ - i - 1) / 2 + (j - i - 1);
}

std::pair<int, int> AlgebraSpec::pair_at(int flat) const {
  if (flat < 0 || flat >= pair_count()) throw InputError("AlgebraSpec: flat index out of range");
  int i = 0;
  int row_len = k_ - 1;
  while (flat >= row_len) {
    flat -= row_len;
    ++i;
    --row_len;
  }
  return {i, i + 1 + flat};
}

SkewMatrix SkewMatrix::from_upper(int k, const Vec& upper) {
  const AlgebraSpec spec(k);
  if (upper.size() != spec.pair_count()) {
    throw InputError("SkewMatrix: expected " + std::to_string(spec.pair_count()) +
                     " entries h_ij");
  }
  if (!upper.allFinite()) throw InputError("SkewMatrix: non-finite entry");
  Mat m = Mat::Zero(k, k);
  for (int f = 0; f < spec.pair_count(); ++f) {
    const auto [i, j] = spec.pair_at(f);
    m(i, j) = upper[f];
    m(j, i) = -upper[f];
  }
  return SkewMatrix(std::move(m));
}

SkewMatrix SkewMatrix::from_pairs(int k, const std::map<std::pair<int, int>, double>& entries) {
  const AlgebraSpec spec(k);
  Vec upper = Vec::Zero(spec.pair_count());
  for (const auto& [ij, value] : entries) {
    const auto [i, j] = ij;
    if (i < 1 || j > k || i >= j) {
      std::ostringstream msg;
      msg << "SkewMatrix: entry (" << i << "," << j << ") violates 1 <= i < j <= " << k;
      throw InputError(msg.str());
    }
    upper[spec.flat_index(i - 1, j - 1)] = value;
  }
  return from_upper(k, upper);
}

SkewMatrix SkewMatrix::zero(int k) { return from_upper(k, Vec::Zero(AlgebraSpec(k).pair_count())); }

SkewMatrix SkewMatrix::two_block(double alpha, double beta) {
  return from_pairs(4, {{{1, 2}, alpha}, {{3, 4}, beta}});
}

Vec SkewMatrix::upper() const {
  const AlgebraSpec spec(k());
  Vec out(spec.pair_count());
  for (int f = 0; f < spec.pair_count(); ++f) {
    const auto [i, j] = spec.pair_at(f);
    out[f] = m_(i, j);
  }
  return out;
}

SkewMatrix SkewMatrix::scaled(double factor) const { return SkewMatrix(m_ * factor); }

BracketTable::BracketTable(const AlgebraSpec& spec)
    : spec_(spec), table_(static_cast<std::size_t>(spec.dimension() * spec.dimension())) {
  const int k = spec.generators();
  const int n = spec.dimension();
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const int target = k + spec.flat_index(i, j);
      table_[i * n + j] = Term{+1, target};
      table_[j * n + i] = Term{-1, target};
    }
  }
}

double BracketTable::constant(int a, int b, int c) const {
  const Term t = bracket(a, b);
  return (t.sign != 0 && t.index == c) ? static_cast<double>(t.sign) : 0.0;
}

int BracketTable::nonzero_count() const {
  int count = 0;
  for (int a = 0; a < size(); ++a) {
    for (int b = a + 1; b < size(); ++b) count += bracket(a, b).sign != 0;
  }
  return count;
}

bool BracketTable::antisymmetric() const {
  for (int a = 0; a < size(); ++a) {
    if (bracket(a, a).sign != 0) return false;
    for (int b = a + 1; b < size(); ++b) {
      const Term ab = bracket(a, b);
      const Term ba = bracket(b, a);
      if (ab.sign != -ba.sign || (ab.sign != 0 && ab.index != ba.index)) return false;
    }
  }
  return true;
}

double BracketTable::jacobi_defect() const {
  const int n = size();
  std::vector<double> acc(static_cast<std::size_t>(n));
  // {{b_x, b_y}, b_z} accumulated into acc.
  auto add_nested = [&](int x, int y, int z) {
    const Term inner = bracket(x, y);
    if (inner.sign == 0) return;
    const Term outer = bracket(inner.index, z);
    if (outer.sign == 0) return;
    acc[outer.index] += inner.sign * outer.sign;
  };
  double worst = 0.0;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      for (int c = 0; c < n; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        add_nested(a, b, c);
        add_nested(b, c, a);
        add_nested(c, a, b);
        for (double v : acc) worst = std::max(worst, std::abs(v));
      }
    }
  }
  return worst;
}

BracketTable bracket_table(const AlgebraSpec& spec) { return BracketTable(spec); }

Vec canonical_sign(Vec v) {
  const double norm = v.norm();
  if (norm == 0.0) return v;
  v /= norm;
  const double cutoff = 1e-12 * v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > cutoff) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return v;
}

CasimirBasis kernel_basis(const SkewMatrix& m, const KernelOptions& opts) {
  const int k = m.k();
  Eigen::JacobiSVD<Mat> svd(m.matrix(), Eigen::ComputeFullV);
  CasimirBasis out;
  out.singular_values = svd.singularValues();
  const double sigma_max = out.sigma_max();
  double threshold = opts.tau * sigma_max;
  if (sigma_max < opts.floor_trigger) threshold = std::max(threshold, opts.absolute_floor);
  out.threshold = threshold;

  std::vector<int> kernel_cols;
  double smallest_kept = -1.0;
  for (int i = 0; i < k; ++i) {
    const double s = out.singular_values[i];
    if (s <= threshold) {
      kernel_cols.push_back(i);
    } else {
      smallest_kept = s;
    }
  }
  if (smallest_kept > 0.0 && smallest_kept < opts.near_singular_bound) {
    std::ostringstream msg;
    msg.precision(3);
    msg << "near-singular M: smallest nonzero singular value " << smallest_kept
        << " is below " << opts.near_singular_bound << "; kernel dimension is unstable";
    out.warnings.push_back(msg.str());
  }
  const int dim = static_cast<int>(kernel_cols.size());
  if (dim == 0) return out;

  Mat kernel(k, dim);
  for (int c = 0; c < dim; ++c) kernel.col(c) = svd.matrixV().col(kernel_cols[c]);

  // Sequential Gram–Schmidt on projected unit vectors; a cutoff below 1/√k
  // always collects `dim` vectors.
  const double accept = 1e-3;
  for (int i = 0; i < k && out.dimension() < dim; ++i) {
    Vec v = kernel * kernel.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass) {
      for (const Vec& b : out.vectors) v -= b.dot(v) * b;
    }
    if (v.norm() > accept) out.vectors.push_back(canonical_sign(v));
  }
  return out;
}

double casimir_value(const Vec& a, const Vec& h) {
  if (a.size() != h.size()) {
    throw InputError("casimir_value: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(h.size()) + ")");
  }
  return a.dot(h);
}

Vec casimir_bracket(const SkewMatrix& m, const Vec& a) { return -(m.matrix() * a); }

LeafClass leaf_classify(const SkewMatrix& m, const Vec& h, const KernelOptions& opts) {
  if (m.k() != 3) {
    throw UnsupportedRankError("leaf_classify: symplectic leaves are classified for k = 3 only");
  }
  if (h.size() != 3) throw InputError("leaf_classify: h must have 3 components");
  const CasimirBasis basis = kernel_basis(m, opts);
  if (basis.dimension() == 3) return ZeroDimLeaf{h};
  if (basis.dimension() != 1) {
    throw NumericalFailure("leaf_classify: kernel dimension " +
                               std::to_string(basis.dimension()) + " is impossible in so(3)",
                           0.0);
  }
  const Vec& a = basis.vectors.front();
  return TwoDimLeaf{a, casimir_value(a, h), m.upper()};
}

}  // namespace carnot
