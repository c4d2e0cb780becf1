#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdc/lattice.hpp"
#include "qdc/tensor.hpp"

namespace qdc {

enum class ModelFamily { heisenberg, ising };

std::string to_string(ModelFamily f);
ModelFamily model_family_from_string(const std::string& name);

/// Heisenberg:  sum_<ij> (XX + YY + ZZ) + sum_i h_i Z_i,  h_i ~ uniform[-h, h].
/// Ising:      -(sum_<ij> XX + sum_i Z_i) + g sum_i X_i + kappa (sum_<ij> ZZ + sum_<<ij>> XX).
struct HamiltonianSpec {
  ModelFamily family = ModelFamily::heisenberg;
  Lattice lattice = Lattice::chain(2);
  double h = 0.0;
  std::uint64_t disorder_seed = 0;
  double g = 0.0;
  double kappa = 0.0;

  std::size_t size() const { return lattice.size(); }
  // Realized on-site fields (Heisenberg); a pure function of (h, disorder_seed, n).
  std::vector<double> fields() const;
};

enum class TermKind { nearest, next_nearest, onsite };

/// A Hermitian term on one or two chain sites. Two-site operators are written with
/// their first tensor factor on `a`; a < b always. For on-site terms a == b.
struct Term {
  std::size_t a = 0;
  std::size_t b = 0;
  Matrix op;
  int group = 0;  // color of the lattice bond, or color::onsite
  TermKind kind = TermKind::nearest;
  bool two_site() const { return a != b; }
};

/// Every term of H separately: nearest bonds, next-nearest bonds, on-site fields.
std::vector<Term> bond_terms(const HamiltonianSpec& spec);

/// Nearest-neighbour bond terms with every on-site field folded into the first
/// nearest bond (in group order) that contains the site; next-nearest terms follow.
std::vector<Term> folded_terms(const HamiltonianSpec& spec);

/// Distinct term groups of a term list, ascending.
std::vector<int> term_groups(const std::vector<Term>& terms);

Matrix dense_hamiltonian(const HamiltonianSpec& spec);
/// exp(-i H t) (n <= 12).
Matrix dense_evolution_operator(const HamiltonianSpec& spec, double t);

}  // namespace qdc
