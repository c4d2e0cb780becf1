#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "qdc/errors.hpp"
#include "qdc/ensembles.hpp"
#include "qdc/mps.hpp"

using namespace qdc;

namespace {

Mps random_mps(std::size_t n, std::uint64_t seed) {
  return Mps::from_dense(oracle::random_state(std::size_t{1} << n, seed), n);
}

}  // namespace

TEST(Mps, BasisStateAmplitudes) {
  const auto s = Mps::basis_state(std::string_view("0110"));
  const Vector v = oracle::mps_dense(s);
  EXPECT_EQ(v.size(), 16);
  EXPECT_EQ(v[0b0110], cplx(1.0));
  EXPECT_NEAR(v.norm(), 1.0, 1e-15);
  EXPECT_TRUE(s.is_product());
  EXPECT_THROW(Mps::basis_state(std::string_view("01x")), std::invalid_argument);
}

TEST(Mps, FromDenseRoundTrip) {
  for (std::size_t n = 1; n <= 7; ++n) {
    const Vector v = oracle::random_state(std::size_t{1} << n, 10 + n);
    const auto s = Mps::from_dense(v, n);
    EXPECT_LT((oracle::mps_dense(s) - v).norm(), 1e-12);
    EXPECT_LT((s.to_dense() - v).norm(), 1e-12);
    for (std::size_t b = 0; b + 1 < n; ++b)
      EXPECT_LE(s.bond_dimension(b), std::size_t{1} << std::min(b + 1, n - b - 1));
  }
}

TEST(Mps, CanonicalizePreservesStateAndMovesCenter) {
  auto s = random_mps(6, 3);
  const Vector v = oracle::mps_dense(s);
  for (std::size_t c : {0u, 5u, 2u, 4u}) {
    s.canonicalize(c);
    EXPECT_EQ(s.center(), c);
    EXPECT_LT((oracle::mps_dense(s) - v).norm(), 1e-12);
    // Left of the center: left-orthonormal tensors.
    for (std::size_t i = 0; i < c; ++i) {
      const auto& t = s.site(i);
      const auto m = t.matrix(t.extent(0) * 2, t.extent(2));
      EXPECT_LT((m.adjoint() * m - Matrix::Identity(t.extent(2), t.extent(2))).norm(), 1e-12);
    }
    for (std::size_t i = c + 1; i < s.size(); ++i) {
      const auto& t = s.site(i);
      const auto m = t.matrix(t.extent(0), 2 * t.extent(2));
      EXPECT_LT((m * m.adjoint() - Matrix::Identity(t.extent(0), t.extent(0))).norm(), 1e-12);
    }
  }
}

TEST(Mps, TwoSiteGateMatchesDense) {
  for (std::size_t n = 2; n <= 8; ++n) {
    auto s = random_mps(n, 100 + n);
    Vector v = oracle::mps_dense(s);
    std::mt19937_64 gen(n);
    for (int k = 0; k < 6; ++k) {
      const std::size_t i = gen() % (n - 1);
      const Matrix g = oracle::random_unitary(4, 1000 * n + k);
      s.apply_two_site_gate(i, g, TruncationSettings::exact(), k % 2 ? CenterSide::left : CenterSide::right);
      v = oracle::embed2(n, i, i + 1, g) * v;
      EXPECT_LT((oracle::mps_dense(s) - v).norm(), 1e-9);
    }
  }
}

TEST(Mps, LongRangeGateMatchesDenseInBothOrientations) {
  const std::size_t n = 7;
  auto s = random_mps(n, 5);
  Vector v = oracle::mps_dense(s);
  const Matrix g = oracle::random_unitary(4, 6);
  apply_gate_long_range(s, 1, 5, g, TruncationSettings::exact());
  v = oracle::embed2(n, 1, 5, g) * v;
  EXPECT_LT((oracle::mps_dense(s) - v).norm(), 1e-10);
  apply_gate_long_range(s, 0, 6, g, TruncationSettings::exact());
  v = oracle::embed2(n, 0, 6, g) * v;
  EXPECT_LT((oracle::mps_dense(s) - v).norm(), 1e-10);
}

TEST(Mps, SingleSiteGate) {
  auto s = random_mps(4, 9);
  const Matrix g = oracle::random_unitary(2, 10);
  const Vector v = oracle::embed1(4, 2, g) * oracle::mps_dense(s);
  s.apply_single_site_gate(2, g);
  EXPECT_LT((oracle::mps_dense(s) - v).norm(), 1e-12);
}

TEST(Mps, OverlapAndExpectationsMatchDense) {
  for (std::size_t n = 2; n <= 8; ++n) {
    const auto a = random_mps(n, 200 + n);
    const auto b = random_mps(n, 300 + n);
    const Vector va = oracle::mps_dense(a), vb = oracle::mps_dense(b);
    EXPECT_LT(std::abs(overlap(a, b) - va.dot(vb)), 1e-9);
    const Matrix z = oracle::pauli(3), x = oracle::pauli(1);
    for (std::size_t i = 0; i < n; ++i)
      EXPECT_LT(std::abs(local_expectation(b, i, z) - vb.dot(oracle::embed1(n, i, z) * vb)), 1e-9);
    const std::size_t i = 0, j = n - 1;
    const cplx ref = vb.dot(oracle::embed1(n, i, x) * oracle::embed1(n, j, z) * vb);
    EXPECT_LT(std::abs(two_point_correlator(b, i, j, x, z) - ref), 1e-9);
  }
}

TEST(Mps, ExpectationIsNormalized) {
  auto s = random_mps(5, 11);
  s.apply_single_site_gate(0, 3.0 * Matrix::Identity(2, 2));
  EXPECT_NEAR(local_expectation(s, 3, pauli::identity()).real(), 1.0, 1e-12);
}

TEST(Mps, HoppingCorrelatorMatchesDense) {
  const auto s = random_mps(5, 12);
  const Vector v = oracle::mps_dense(s);
  const cplx ref = v.dot(oracle::embed1(5, 1, pauli::raising()) * oracle::embed1(5, 3, pauli::lowering()) * v);
  EXPECT_LT(std::abs(two_point_correlator(s, 1, 3, pauli::raising(), pauli::lowering()) - ref), 1e-12);
}

TEST(Mps, TruncationRecordsDiscardedWeight) {
  auto s = random_mps(8, 13);
  const Vector v = oracle::mps_dense(s);
  const Matrix g = oracle::random_unitary(4, 14);
  TruncationSettings t{4, 0.0, 0};
  s.canonicalize(3);
  const auto before = oracle::mps_dense(s);
  const Vector exact = oracle::embed2(8, 3, 4, g) * before;
  const auto rep = s.apply_two_site_gate(3, g, t);
  EXPECT_LE(rep.bond, 4u);
  EXPECT_GT(rep.discarded_weight, 0.0);
  // The truncated state is the normalized best approximation: fidelity 1 - discarded.
  EXPECT_NEAR(std::norm(exact.dot(oracle::mps_dense(s))), 1.0 - rep.discarded_weight, 1e-10);
  EXPECT_NEAR(s.discarded_weight(), rep.discarded_weight, 1e-15);
  EXPECT_NEAR(s.norm(), 1.0, 1e-12);
  (void)v;
}

TEST(Mps, HardCapRaises) {
  auto s = random_mps(8, 15);
  TruncationSettings t{2, 1e-14, 2};
  EXPECT_THROW(s.apply_two_site_gate(3, oracle::random_unitary(4, 16), t), BondCapError);
}

TEST(Mps, GateShapeErrors) {
  auto s = random_mps(3, 17);
  EXPECT_THROW(s.apply_two_site_gate(2, Matrix::Identity(4, 4), TruncationSettings::exact()), std::out_of_range);
  EXPECT_THROW(s.apply_two_site_gate(0, Matrix::Identity(2, 2), TruncationSettings::exact()), ShapeError);
  EXPECT_THROW(overlap(s, random_mps(4, 18)), ShapeError);
}

TEST(Mps, TotalZ) {
  EXPECT_NEAR(total_z(Mps::basis_state(std::string_view("0111"))), -2.0, 1e-14);
  const auto s = random_mps(4, 19);
  const Vector v = oracle::mps_dense(s);
  double ref = 0.0;
  for (std::size_t i = 0; i < 4; ++i) ref += v.dot(oracle::embed1(4, i, pauli::z()) * v).real();
  EXPECT_NEAR(total_z(s), ref, 1e-12);
}

TEST(Ensembles, ProductStatesAreNormalizedProducts) {
  const auto s = random_product_state(6, 3);
  EXPECT_TRUE(s.is_product());
  EXPECT_NEAR(s.norm(), 1.0, 1e-14);
  EXPECT_EQ(oracle::mps_dense(random_product_state(6, 3)), oracle::mps_dense(s));
}

TEST(Ensembles, U1CircuitConservesCharge) {
  const auto s = u1_rqc_state(8, 4, 3, 7);
  EXPECT_NEAR(total_z(s), 8.0 - 2.0 * 3.0, 1e-12);
  Pcg32 rng(4);
  const Matrix g = random_u1_gate(rng);
  EXPECT_TRUE(is_unitary(g, 1e-12));
  EXPECT_EQ(g(0, 1), cplx(0.0));
  EXPECT_EQ(g(3, 1), cplx(0.0));
  EXPECT_EQ(g(0, 3), cplx(0.0));
}

TEST(Ensembles, SampleStreamsAreIndependentOfOrder) {
  EnsembleSpec e;
  e.seed = 99;
  const auto a = oracle::mps_dense(sample_state(e, 5, 3));
  const auto b = oracle::mps_dense(sample_state(e, 5, 3));
  const auto c = oracle::mps_dense(sample_state(e, 5, 4));
  EXPECT_EQ(a, b);
  EXPECT_GT((a - c).norm(), 1e-3);
  EnsembleSpec basis;
  basis.kind = EnsembleKind::computational_basis;
  basis.basis = "10100";
  EXPECT_EQ(oracle::mps_dense(sample_state(basis, 5, 0))[0b10100], cplx(1.0));
  EXPECT_EQ(ensemble_kind_from_string(to_string(EnsembleKind::u1_rqc)), EnsembleKind::u1_rqc);
}
