#include "qdc/models.hpp"

#include <algorithm>
#include <set>

#include "qdc/dense.hpp"
#include "qdc/errors.hpp"
#include "qdc/rng.hpp"

namespace qdc {

std::string to_string(ModelFamily f) { return f == ModelFamily::heisenberg ? "heisenberg" : "ising"; }

ModelFamily model_family_from_string(const std::string& name) {
  if (name == "heisenberg") return ModelFamily::heisenberg;
  if (name == "ising") return ModelFamily::ising;
  throw ConfigError("unknown model family '" + name + "'");
}

std::vector<double> HamiltonianSpec::fields() const {
  std::vector<double> out(size(), 0.0);
  if (family != ModelFamily::heisenberg || h == 0.0) return out;
  Pcg32 rng(disorder_seed, 0x6469736f72646572ULL);
  for (auto& f : out) f = h * (2.0 * rng.uniform() - 1.0);
  return out;
}

namespace {

Matrix nearest_op(const HamiltonianSpec& spec) {
  using namespace pauli;
  if (spec.family == ModelFamily::heisenberg) return kron(x(), x()) + kron(y(), y()) + kron(z(), z());
  return -kron(x(), x()) + spec.kappa * kron(z(), z());
}

Matrix onsite_op(const HamiltonianSpec& spec, double field) {
  using namespace pauli;
  if (spec.family == ModelFamily::heisenberg) return field * z();
  return -z() + spec.g * x();
}

// Pairs (a, b) with a < b; two-site operators symmetric under exchange here.
Term two_site_term(const LatticeBond& bond, Matrix op, TermKind kind) {
  return Term{bond.lo(), bond.hi(), std::move(op), bond.color, kind};
}

bool onsite_present(const HamiltonianSpec& spec, double field) {
  return spec.family == ModelFamily::ising || field != 0.0;
}

}  // namespace

std::vector<Term> bond_terms(const HamiltonianSpec& spec) {
  std::vector<Term> out;
  const Matrix nn = nearest_op(spec);
  for (const auto& b : spec.lattice.nearest_bonds()) out.push_back(two_site_term(b, nn, TermKind::nearest));
  if (spec.family == ModelFamily::ising && spec.kappa != 0.0) {
    const Matrix nnn = spec.kappa * kron(pauli::x(), pauli::x());
    for (const auto& b : spec.lattice.next_nearest_bonds()) out.push_back(two_site_term(b, nnn, TermKind::next_nearest));
  }
  const auto h = spec.fields();
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (onsite_present(spec, h[i])) out.push_back(Term{i, i, onsite_op(spec, h[i]), color::onsite, TermKind::onsite});
  return out;
}

std::vector<Term> folded_terms(const HamiltonianSpec& spec) {
  std::vector<Term> out;
  const Matrix nn = nearest_op(spec);
  const auto bonds = spec.lattice.nearest_bonds();
  for (const auto& b : bonds) out.push_back(two_site_term(b, nn, TermKind::nearest));
  const auto h = spec.fields();
  const Matrix id = pauli::identity();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    if (!onsite_present(spec, h[i])) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const Term& t) { return t.a == i || t.b == i; });
    if (it == out.end()) throw std::invalid_argument("folded_terms: site without a nearest bond");
    const Matrix o = onsite_op(spec, h[i]);
    it->op += it->a == i ? kron(o, id) : kron(id, o);
  }
  if (spec.family == ModelFamily::ising && spec.kappa != 0.0) {
    const Matrix nnn = spec.kappa * kron(pauli::x(), pauli::x());
    for (const auto& b : spec.lattice.next_nearest_bonds()) out.push_back(two_site_term(b, nnn, TermKind::next_nearest));
  }
  return out;
}

std::vector<int> term_groups(const std::vector<Term>& terms) {
  std::set<int> g;
  for (const auto& t : terms) g.insert(t.group);
  return {g.begin(), g.end()};
}

Matrix dense_hamiltonian(const HamiltonianSpec& spec) {
  const std::size_t n = spec.size();
  check_dense_limit(n, "dense_hamiltonian");
  const std::size_t dim = std::size_t{1} << n;
  Matrix hsum = Matrix::Zero(dim, dim);
  for (const auto& t : bond_terms(spec)) {
    Matrix m = Matrix::Identity(dim, dim);
    if (t.two_site())
      apply_gate_dense(m, n, t.a, t.b, t.op);
    else
      apply_local_dense(m, n, t.a, t.op);
    hsum += m;
  }
  return hsum;
}

Matrix dense_evolution_operator(const HamiltonianSpec& spec, double t) {
  const Matrix h = dense_hamiltonian(spec);
  return hermitian_exponential(h, -t);
}

}  // namespace qdc
