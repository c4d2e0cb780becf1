#include "qdc/ensembles.hpp"

#include <cmath>
#include <stdexcept>

#include "qdc/errors.hpp"

namespace qdc {

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::random_product: return "product";
    case EnsembleKind::computational_basis: return "basis";
    case EnsembleKind::u1_rqc: return "u1-rqc";
    case EnsembleKind::haar: return "haar";
  }
  return "unknown";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
  if (name == "product" || name == "random-product") return EnsembleKind::random_product;
  if (name == "basis" || name == "computational-basis") return EnsembleKind::computational_basis;
  if (name == "u1-rqc") return EnsembleKind::u1_rqc;
  if (name == "haar") return EnsembleKind::haar;
  throw ConfigError("unknown ensemble '" + name + "'");
}

std::vector<std::array<cplx, 2>> random_product_vectors(std::size_t n, Pcg32& rng) {
  std::vector<std::array<cplx, 2>> v(n);
  for (auto& s : v) {
    const double a = rng.gaussian(), b = rng.gaussian(), c = rng.gaussian(), d = rng.gaussian();
    const double nrm = std::sqrt(a * a + b * b + c * c + d * d);
    s = {cplx{a / nrm, b / nrm}, cplx{c / nrm, d / nrm}};
  }
  return v;
}

Mps random_product_state(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("random_product_state: n must be positive");
  Pcg32 rng(seed);
  Mps out = Mps::product_state(random_product_vectors(n, rng));
  out.set_seed(seed);
  return out;
}

Matrix random_u1_gate(Pcg32& rng) {
  Matrix g = Matrix::Zero(4, 4);
  const double two_pi = 2.0 * M_PI;
  g(0, 0) = std::polar(1.0, two_pi * rng.uniform());
  g(3, 3) = std::polar(1.0, two_pi * rng.uniform());
  const Matrix u = haar_unitary(2, rng);
  g(1, 1) = u(0, 0);
  g(1, 2) = u(0, 1);
  g(2, 1) = u(1, 0);
  g(2, 2) = u(1, 1);
  return g;
}

Mps u1_rqc_state_from(const Mps& start, std::size_t depth, std::uint64_t seed) {
  Mps state = start;
  Pcg32 rng(seed);
  const auto trunc = TruncationSettings::exact();
  for (std::size_t layer = 0; layer < depth; ++layer)
    for (std::size_t i = layer % 2; i + 1 < state.size(); i += 2)
      state.apply_two_site_gate(i, random_u1_gate(rng), trunc);
  state.set_seed(seed);
  return state;
}

Mps u1_rqc_state(std::size_t n, std::size_t depth, std::size_t charge, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("u1_rqc_state: n must be positive");
  if (charge > n) throw std::invalid_argument("u1_rqc_state: charge must lie in [0, n]");
  std::vector<int> bits(n, 0);
  for (std::size_t i = 0; i < charge; ++i) bits[i] = 1;
  return u1_rqc_state_from(Mps::basis_state(bits), depth, seed);
}

Mps sample_state(const EnsembleSpec& spec, std::size_t n, std::size_t index) {
  const std::uint64_t s = derive_seed(spec.seed, index);
  switch (spec.kind) {
    case EnsembleKind::random_product: return random_product_state(n, s);
    case EnsembleKind::computational_basis: {
      if (spec.basis.size() != n) throw ConfigError("basis ensemble: bitstring length must equal n");
      return Mps::basis_state(spec.basis);
    }
    case EnsembleKind::u1_rqc: return u1_rqc_state(n, spec.depth, spec.charge, s);
    case EnsembleKind::haar: {
      if (n > 16) throw DenseLimitError("haar ensemble: n too large for a dense sample");
      Pcg32 rng(s);
      return Mps::from_dense(haar_state(std::size_t{1} << n, rng), n);
    }
  }
  throw ConfigError("unsupported ensemble");
}

Vector sample_dense_state(const EnsembleSpec& spec, std::size_t n, std::size_t index) {
  if (n > 16) throw DenseLimitError("sample_dense_state: n too large");
  if (spec.kind == EnsembleKind::haar) {
    Pcg32 rng(derive_seed(spec.seed, index));
    return haar_state(std::size_t{1} << n, rng);
  }
  return sample_state(spec, n, index).to_dense();
}

}  // namespace qdc
