#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qdc/errors.hpp"
#include "qdc/trotter.hpp"

using namespace qdc;

namespace {

HamiltonianSpec ising(std::size_t n, double g, double kappa) {
  HamiltonianSpec s;
  s.family = ModelFamily::ising;
  s.lattice = Lattice::chain(n);
  s.g = g;
  s.kappa = kappa;
  return s;
}

// Product of series exponentials of each group's summed terms, in stage order.
Matrix scheme_product(const HamiltonianSpec& s, const std::vector<Term>& terms, const TrotterScheme& scheme, double dt) {
  const std::size_t n = s.size(), dim = std::size_t{1} << n;
  Matrix u = Matrix::Identity(dim, dim);
  for (const auto& st : scheme.stages) {
    Matrix h = Matrix::Zero(dim, dim);
    for (const auto& t : terms)
      if (t.group == st.group) h += t.two_site() ? oracle::embed2(n, t.a, t.b, t.op) : oracle::embed1(n, t.a, t.op);
    u = oracle::expm_series(cplx(0, -st.coefficient * dt) * h) * u;
  }
  return u;
}

double op_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

TEST(Trotter, BuiltinCoefficientsSumToOne) {
  const std::vector<int> groups = {0, 1, 6};
  for (int p : {1, 2, 4}) {
    const auto s = builtin_scheme(p, groups);
    EXPECT_EQ(s.order, p);
    EXPECT_NO_THROW(validate_scheme(s, groups));
  }
  EXPECT_EQ(strang_scheme({0, 1}).stages.size(), 3u);
  EXPECT_THROW(builtin_scheme(3, groups), ConfigError);
}

TEST(Trotter, Suzuki4Coefficient) {
  const auto s = suzuki4_scheme({0, 1});
  const double sz = 1.0 / (4.0 - std::cbrt(4.0));
  EXPECT_NEAR(s.stages.front().coefficient, sz / 2.0, 1e-15);
  double sum0 = 0.0;
  for (const auto& st : s.stages)
    if (st.group == 0) sum0 += st.coefficient;
  EXPECT_NEAR(sum0, 1.0, 1e-14);
  for (std::size_t k = 1; k < s.stages.size(); ++k) EXPECT_NE(s.stages[k].group, s.stages[k - 1].group);
}

TEST(Trotter, ParseCoefficientFile) {
  const auto s = parse_trotter_scheme("# order 2\n(0, 0.5)\n\n(1, 1.0)\n# comment\n(0, 0.5)\n");
  EXPECT_EQ(s.order, 2);
  ASSERT_EQ(s.stages.size(), 3u);
  EXPECT_EQ(s.stages[1].group, 1);
  EXPECT_NO_THROW(validate_scheme(s, {0, 1}));
  EXPECT_THROW(validate_scheme(parse_trotter_scheme("(0, 0.4)\n(1, 1.0)\n"), {0, 1}), ConfigError);
  EXPECT_THROW(validate_scheme(parse_trotter_scheme("(0, 1.0)\n"), {0, 1}), ConfigError);
  EXPECT_THROW(parse_trotter_scheme("(0 0.5)\n"), ConfigError);
}

TEST(Trotter, RepeatedStagesMergeNeighbours) {
  const auto st = repeated_stages(strang_scheme({0, 1}), 3);
  ASSERT_EQ(st.size(), 7u);
  EXPECT_NEAR(st[0].coefficient, 0.5, 1e-15);
  EXPECT_NEAR(st[2].coefficient, 1.0, 1e-15);
  EXPECT_NEAR(st[6].coefficient, 0.5, 1e-15);
}

TEST(Trotter, CircuitMatchesProductOfExponentials) {
  const auto s = ising(5, -1.0, 0.3);
  for (bool folded : {true, false}) {
    const auto terms = folded ? folded_terms(s) : bond_terms(s);
    const auto scheme = strang_scheme(term_groups(terms));
    const auto c = trotter_circuit(s, 0.1, scheme, 1, folded);
    EXPECT_NO_THROW(c.validate());
    EXPECT_LT((oracle::circuit_unitary(c, {}) - scheme_product(s, terms, scheme, 0.1)).norm(), 1e-11);
  }
}

TEST(Trotter, OrderScalingOfSingleStepError) {
  const auto s = ising(4, -1.0, 0.0);
  const auto terms = bond_terms(s);
  const Matrix h = dense_hamiltonian(s);
  for (int p : {1, 2, 4}) {
    const auto scheme = builtin_scheme(p, term_groups(terms));
    const double dt = p == 4 ? 0.1 : 0.02;
    const double e1 = op_norm(scheme_product(s, terms, scheme, dt) - oracle::expm_series(cplx(0, -dt) * h));
    const double e2 =
        op_norm(scheme_product(s, terms, scheme, dt / 2) - oracle::expm_series(cplx(0, -dt / 2) * h));
    EXPECT_NEAR(e1 / e2, std::pow(2.0, p + 1), 0.1 * std::pow(2.0, p + 1)) << "order " << p;
  }
}

TEST(Trotter, TebdConvergesToExact) {
  HamiltonianSpec s;
  s.lattice = Lattice::chain(6);
  s.h = 0.5;
  s.disorder_seed = 1;
  const Matrix u = dense_evolution_operator(s, 0.55);
  const Vector in = oracle::random_state(64, 3);
  double prev = 1.0;
  for (double dt : {0.1, 0.05, 0.025}) {
    Mps m = Mps::from_dense(in, 6);
    const auto rep = tebd_evolve(m, s, 0.55, dt, TruncationSettings::exact());
    EXPECT_EQ(rep.steps, static_cast<std::size_t>(std::ceil(0.55 / dt - 1e-9)));
    const double err = (oracle::mps_dense(m) - u * in).norm();
    EXPECT_LT(err, prev / 3.0);
    prev = err;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Trotter, TebdConservesChargeForHeisenberg) {
  HamiltonianSpec s;
  s.lattice = Lattice::chain(10);
  s.h = 1.0;
  Mps m = Mps::basis_state(std::string_view("0001111000"));
  tebd_evolve(m, s, 1.0, 0.05, TruncationSettings{32, 1e-10, 0});
  EXPECT_NEAR(total_z(m), 2.0, 1e-8);
}
