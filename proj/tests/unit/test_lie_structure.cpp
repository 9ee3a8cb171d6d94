#include "carnot/errors.hpp"
#include "carnot/lie_structure.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace carnot;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Orthogonal projector onto span(vectors).
Mat projector(const std::vector<Vec>& vectors, int k) {
  if (vectors.empty()) return Mat::Zero(k, k);
  Mat b(k, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t c = 0; c < vectors.size(); ++c) b.col(static_cast<Eigen::Index>(c)) = vectors[c];
  return b * (b.transpose() * b).inverse() * b.transpose();
}

}  // namespace

TEST_CASE("algebra dimensions and flat indexing") {
  for (int k = 2; k <= 6; ++k) {
    const AlgebraSpec spec(k);
    CHECK(spec.pair_count() == k * (k - 1) / 2);
    CHECK(spec.dimension() == k * (k + 1) / 2);
    int expected = 0;
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        CHECK(spec.flat_index(i, j) == expected);
        CHECK(spec.pair_at(expected) == std::pair{i, j});
        ++expected;
      }
    }
  }
  CHECK_THROWS_AS(AlgebraSpec(1), InputError);
  CHECK_THROWS_AS(AlgebraSpec(3).flat_index(1, 1), InputError);
}

TEST_CASE("bracket table for k = 3") {
  const auto table = bracket_table(AlgebraSpec(3));
  CHECK(table.size() == 6);
  CHECK(table.nonzero_count() == 3);
  CHECK(table.constant(0, 1, 3) == 1.0);
  CHECK(table.constant(1, 0, 3) == -1.0);
  CHECK(table.constant(0, 2, 4) == 1.0);
  CHECK(table.constant(1, 2, 5) == 1.0);
  CHECK(table.bracket(0, 3).sign == 0);
  CHECK(table.bracket(3, 4).sign == 0);
}

TEST_CASE("bracket tables are antisymmetric, satisfy Jacobi, and are step 2") {
  for (int k = 2; k <= 6; ++k) {
    const auto table = bracket_table(AlgebraSpec(k));
    CHECK(table.antisymmetric());
    CHECK(table.jacobi_defect() == 0.0);
    CHECK(table.nonzero_count() == k * (k - 1) / 2);
    for (int a = 0; a < table.size(); ++a)
      for (int b = 0; b < table.size(); ++b) {
        const auto t = table.bracket(a, b);
        if (t.sign != 0) {
          CHECK(t.index >= k);
          for (int c = 0; c < table.size(); ++c) CHECK(table.bracket(t.index, c).sign == 0);
        }
      }
  }
}

TEST_CASE("skew matrix construction") {
  const auto m = SkewMatrix::from_pairs(3, {{{1, 2}, 1.0}, {{2, 3}, -0.5}});
  CHECK(m.matrix()(0, 1) == 1.0);
  CHECK(m.matrix()(1, 0) == -1.0);
  CHECK(m.matrix()(1, 2) == -0.5);
  CHECK((m.matrix() + m.matrix().transpose()).isZero(0.0));
  CHECK(m.upper() == vec({1.0, 0.0, -0.5}));
  CHECK_THROWS_AS(SkewMatrix::from_pairs(3, {{{2, 1}, 1.0}}), InputError);
  CHECK_THROWS_AS(SkewMatrix::from_pairs(3, {{{1, 4}, 1.0}}), InputError);
  CHECK(SkewMatrix::zero(4).is_exact_zero());
  const auto blk = SkewMatrix::two_block(1.0, 2.0);
  CHECK(blk.matrix()(2, 3) == 2.0);
  CHECK(blk.scaled(3.0).matrix()(0, 1) == 3.0);
}

TEST_CASE("kernel of a fully populated k = 3 matrix matches the frozen null vector") {
  const auto m = SkewMatrix::from_upper(3, vec({1.0, 1.0, 1.0}));
  const auto basis = kernel_basis(m);
  REQUIRE(basis.dimension() == 1);
  const double s = 1.0 / std::sqrt(3.0);
  CHECK((basis.vectors[0] - vec({s, -s, s})).norm() < 1e-14);
}

TEST_CASE("kernel basis agrees with an RREF null space on random matrices") {
  std::mt19937_64 rng(31);
  for (int k = 2; k <= 7; ++k) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto m = carnot::testing::random_skew(rng, k);
      const auto basis = kernel_basis(m);
      const auto oracle = carnot::testing::null_space_rref(m.matrix(), 1e-9);
      // generic skew matrices have kernel dimension k mod 2
      CHECK(basis.dimension() == k % 2);
      CHECK(static_cast<int>(oracle.size()) == basis.dimension());
      CHECK((projector(basis.vectors, k) - projector(oracle, k)).norm() < 1e-9);
      for (const auto& a : basis.vectors) {
        CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK((m.matrix() * a).norm() < 1e-12);
        CHECK(casimir_bracket(m, a).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("kernel dimension parity with degenerate matrices") {
  // Rank-2 k = 4 and k = 5 matrices from a single pair.
  for (int k : {4, 5}) {
    const auto m = SkewMatrix::from_pairs(k, {{{1, 2}, 2.0}});
    const auto basis = kernel_basis(m);
    CHECK(basis.dimension() == k - 2);
    CHECK((k - basis.dimension()) % 2 == 0);
    // canonical: e_3, …, e_k
    for (int c = 0; c < basis.dimension(); ++c) {
      CHECK(basis.vectors[c][c + 2] == doctest::Approx(1.0));
    }
  }
  const auto zero = kernel_basis(SkewMatrix::zero(3));
  CHECK(zero.dimension() == 3);
  for (int c = 0; c < 3; ++c) CHECK((zero.vectors[c] - Vec::Unit(3, c)).norm() == 0.0);
}

TEST_CASE("near-singular matrices warn") {
  const auto m = SkewMatrix::from_pairs(4, {{{1, 2}, 1.0}, {{3, 4}, 1e-8}});
  const auto basis = kernel_basis(m);
  CHECK(basis.dimension() == 0);
  CHECK_FALSE(basis.warnings.empty());
}

TEST_CASE("Casimirs are conserved to first order along ḣ = −M∇H") {
  std::mt19937_64 rng(33);
  for (int k = 3; k <= 5; ++k) {
    const auto m = carnot::testing::random_skew(rng, k);
    const auto body = carnot::testing::random_body(rng, k, 2);
    const Vec h = carnot::testing::random_direction(rng, k);
    const Vec hdot = -m.matrix() * support_gradient(body, h);
    for (const auto& a : kernel_basis(m).vectors) CHECK(std::abs(a.dot(hdot)) < 1e-12);
  }
}

TEST_CASE("casimir value and sign convention") {
  CHECK(casimir_value(vec({1.0, 2.0}), vec({3.0, 4.0})) == 11.0);
  CHECK_THROWS_AS(casimir_value(vec({1.0}), vec({3.0, 4.0})), InputError);
  CHECK(canonical_sign(vec({0.0, -2.0, 1.0}))[1] > 0.0);
}

TEST_CASE("k = 3 leaf classification branches") {
  const Vec h = vec({0.3, -0.2, 0.5});
  const auto zero = leaf_classify(SkewMatrix::zero(3), h);
  REQUIRE(std::holds_alternative<ZeroDimLeaf>(zero));
  CHECK(std::get<ZeroDimLeaf>(zero).point == h);

  const auto single = leaf_classify(SkewMatrix::from_pairs(3, {{{1, 3}, 2.0}}), h);
  REQUIRE(std::holds_alternative<TwoDimLeaf>(single));
  const auto& leaf = std::get<TwoDimLeaf>(single);
  CHECK((leaf.casimir - vec({0.0, 1.0, 0.0})).norm() < 1e-15);
  CHECK(leaf.level == doctest::Approx(-0.2));
  CHECK(leaf.pair_levels == vec({0.0, 2.0, 0.0}));

  CHECK_THROWS_AS(leaf_classify(SkewMatrix::zero(4), vec({1, 0, 0, 0})), UnsupportedRankError);
}
