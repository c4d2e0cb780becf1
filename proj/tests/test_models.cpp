#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qdc/errors.hpp"
#include "qdc/models.hpp"

using namespace qdc;

namespace {

std::vector<oracle::PauliTerm> heisenberg_terms(const HamiltonianSpec& s) {
  std::vector<oracle::PauliTerm> t;
  for (const auto& b : s.lattice.nearest_bonds())
    for (int p = 1; p <= 3; ++p) t.push_back({1.0, {{b.first, p}, {b.second, p}}});
  const auto h = s.fields();
  for (std::size_t i = 0; i < s.size(); ++i) t.push_back({h[i], {{i, 3}}});
  return t;
}

std::vector<oracle::PauliTerm> ising_terms(const HamiltonianSpec& s) {
  std::vector<oracle::PauliTerm> t;
  for (const auto& b : s.lattice.nearest_bonds()) {
    t.push_back({-1.0, {{b.first, 1}, {b.second, 1}}});
    t.push_back({s.kappa, {{b.first, 3}, {b.second, 3}}});
  }
  for (const auto& b : s.lattice.next_nearest_bonds()) t.push_back({s.kappa, {{b.first, 1}, {b.second, 1}}});
  for (std::size_t i = 0; i < s.size(); ++i) {
    t.push_back({-1.0, {{i, 3}}});
    t.push_back({s.g, {{i, 1}}});
  }
  return t;
}

Matrix sum_terms(std::size_t n, const std::vector<Term>& terms) {
  const std::size_t dim = std::size_t{1} << n;
  Matrix h = Matrix::Zero(dim, dim);
  for (const auto& t : terms) h += t.two_site() ? oracle::embed2(n, t.a, t.b, t.op) : oracle::embed1(n, t.a, t.op);
  return h;
}

}  // namespace

TEST(Models, HeisenbergMatchesPauliSum) {
  HamiltonianSpec s;
  s.lattice = Lattice::chain(5);
  s.h = 0.8;
  s.disorder_seed = 3;
  const Matrix ref = oracle::pauli_sum(5, heisenberg_terms(s));
  EXPECT_LT((dense_hamiltonian(s) - ref).norm(), 1e-12);
  EXPECT_LT((sum_terms(5, bond_terms(s)) - ref).norm(), 1e-12);
  EXPECT_LT((sum_terms(5, folded_terms(s)) - ref).norm(), 1e-12);
}

TEST(Models, IsingMatchesPauliSumOnChainAndStrip) {
  for (const auto& lat : {Lattice::chain(6), Lattice::strip(2, 3, false), Lattice::strip(3, 2, true)}) {
    HamiltonianSpec s;
    s.family = ModelFamily::ising;
    s.lattice = lat;
    s.g = -1.0;
    s.kappa = 0.2;
    const Matrix ref = oracle::pauli_sum(s.size(), ising_terms(s));
    EXPECT_LT((dense_hamiltonian(s) - ref).norm(), 1e-12) << lat.describe();
    EXPECT_LT((sum_terms(s.size(), bond_terms(s)) - ref).norm(), 1e-12) << lat.describe();
    EXPECT_LT((sum_terms(s.size(), folded_terms(s)) - ref).norm(), 1e-12) << lat.describe();
  }
}

TEST(Models, FieldsArePureFunctionOfSeed) {
  HamiltonianSpec s;
  s.lattice = Lattice::chain(10);
  s.h = 2.0;
  s.disorder_seed = 42;
  const auto a = s.fields();
  EXPECT_EQ(a, s.fields());
  for (double f : a) {
    EXPECT_GE(f, -2.0);
    EXPECT_LE(f, 2.0);
  }
  s.disorder_seed = 43;
  EXPECT_NE(a, s.fields());
  s.h = 0.0;
  for (double f : s.fields()) EXPECT_EQ(f, 0.0);
}

TEST(Models, FoldedTermsHaveNoOnsiteTerms) {
  HamiltonianSpec s;
  s.family = ModelFamily::ising;
  s.lattice = Lattice::chain(5);
  s.g = 1.0;
  for (const auto& t : folded_terms(s)) EXPECT_TRUE(t.two_site());
  EXPECT_EQ(term_groups(folded_terms(s)), (std::vector<int>{0, 1}));
  const auto unfolded = term_groups(bond_terms(s));
  EXPECT_EQ(unfolded.back(), color::onsite);
}

TEST(Models, EvolutionOperatorMatchesSeries) {
  HamiltonianSpec s;
  s.family = ModelFamily::ising;
  s.lattice = Lattice::chain(4);
  s.g = 0.7;
  s.kappa = 0.3;
  const Matrix u = dense_evolution_operator(s, 0.37);
  EXPECT_LT((u - oracle::expm_series(cplx(0, -0.37) * dense_hamiltonian(s))).norm(), 1e-11);
}

TEST(Models, FamilyNames) {
  EXPECT_EQ(model_family_from_string("ising"), ModelFamily::ising);
  EXPECT_EQ(to_string(ModelFamily::heisenberg), "heisenberg");
  EXPECT_THROW(model_family_from_string("xy"), ConfigError);
}
