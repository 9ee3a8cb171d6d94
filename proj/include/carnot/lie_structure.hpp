#pragma once

// Step-2 free-nilpotent Lie algebra L = span{X_i} ⊕ span{X_ij} with
// [X_i, X_j] = X_ij, its Lie–Poisson structure on L*, linear Casimirs
// I_a(h) = ⟨a, h⟩ for a ∈ ker M, and the k = 3 symplectic leaves.

#include "carnot/convex_bodies.hpp"

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace carnot {

// Generators are indexed 0..k−1 internally; pairs (i, j) with i < j are
// flattened lexicographically: (0,1), (0,2), …, (0,k−1), (1,2), …
class AlgebraSpec {
 public:
  explicit AlgebraSpec(int k);

  int generators() const { return k_; }
  int pair_count() const { return k_ * (k_ - 1) / 2; }
  int dimension() const { return k_ * (k_ + 1) / 2; }

  int flat_index(int i, int j) const;
  std::pair<int, int> pair_at(int flat) const;

 private:
  int k_;
};

// M ∈ so(k) with M_ij = h_ij (i < j), M_ji = −h_ij.
class SkewMatrix {
 public:
  // Entries in flat pair order (see AlgebraSpec).
  static SkewMatrix from_upper(int k, const Vec& upper);
  // Keys (i, j) use 1-based indices with 1 ≤ i < j ≤ k.
  static SkewMatrix from_pairs(int k, const std::map<std::pair<int, int>, double>& entries);
  static SkewMatrix zero(int k);
  // The block-diagonal matrix diag([[0, α], [−α, 0]], [[0, β], [−β, 0]]).
  static SkewMatrix two_block(double alpha, double beta);

  int k() const { return static_cast<int>(m_.rows()); }
  const Mat& matrix() const { return m_; }
  Vec upper() const;
  bool is_exact_zero() const { return m_.isZero(0.0); }

  SkewMatrix scaled(double factor) const;

 private:
  explicit SkewMatrix(Mat m) : m_(std::move(m)) {}
  Mat m_;
};

// Structure constants of the Poisson bracket on the basis Hamiltonians
// (h_1..h_k, h_12..h_{(k−1)k}), which index 0..k−1 and k..dim−1 respectively.
// Every bracket of two basis elements is either 0 or ±(one basis element).
class BracketTable {
 public:
  struct Term {
    int sign = 0;  // 0 when the bracket vanishes
    int index = -1;
  };

  explicit BracketTable(const AlgebraSpec& spec);

  const AlgebraSpec& spec() const { return spec_; }
  int size() const { return spec_.dimension(); }
  Term bracket(int a, int b) const { return table_[a * size() + b]; }
  // Coefficient of basis element c in {b_a, b_b}.
  double constant(int a, int b, int c) const;
  // Unordered pairs a < b with a nonzero bracket.
  int nonzero_count() const;
  // Largest |Σ_d c_ab^d c_dc^e + cyclic| over all triples; 0 for a Lie algebra.
  double jacobi_defect() const;
  bool antisymmetric() const;

 private:
  AlgebraSpec spec_;
  std::vector<Term> table_;
};

// Throws InputError when k < 2.
BracketTable bracket_table(const AlgebraSpec& spec);

struct KernelOptions {
  double tau = 1e-10;
  double absolute_floor = 1e-14;  // used when σ_max < floor_trigger
  double floor_trigger = 1e-4;
  double near_singular_bound = 1e-6;
};

struct CasimirBasis {
  // Orthonormal basis of the numerical kernel; each defines I_a(h) = ⟨a, h⟩.
  std::vector<Vec> vectors;
  Vec singular_values;  // descending
  double threshold = 0.0;
  std::vector<std::string> warnings;

  int dimension() const { return static_cast<int>(vectors.size()); }
  double sigma_max() const { return singular_values.size() ? singular_values[0] : 0.0; }
};

// Singular vectors with σ ≤ threshold span the kernel. The basis is made
// canonical by Gram–Schmidt on the kernel projections of e_1, …, e_k, followed
// by the sign convention "first nonzero component positive". A full kernel
// therefore returns the standard basis.
CasimirBasis kernel_basis(const SkewMatrix& m, const KernelOptions& opts = {});

// Throws InputError on dimension mismatch.
double casimir_value(const Vec& a, const Vec& h);

// Analytic bracket {I_a, h_i} = −(Ma)_i on the slice fixed by M.
Vec casimir_bracket(const SkewMatrix& m, const Vec& a);

// Unit vector with the first component above 1e−12·‖v‖∞ made positive.
Vec canonical_sign(Vec v);

struct TwoDimLeaf {
  Vec casimir;       // spans ker M
  double level = 0;  // I_a(h)
  Vec pair_levels;   // h_ij in flat order
};
struct ZeroDimLeaf {
  Vec point;
};
using LeafClass = std::variant<TwoDimLeaf, ZeroDimLeaf>;

// k = 3 only (UnsupportedRankError otherwise). M is treated as zero when its
// numerical kernel is all of ℝ³.
LeafClass leaf_classify(const SkewMatrix& m, const Vec& h, const KernelOptions& opts = {});

}  // namespace carnot
