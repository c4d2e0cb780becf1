#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qdc/mps.hpp"
#include "qdc/rng.hpp"

namespace qdc {

enum class EnsembleKind { random_product, computational_basis, u1_rqc, haar };

struct EnsembleSpec {
  EnsembleKind kind = EnsembleKind::random_product;
  std::string basis;       // computational_basis: bitstring, site 0 first
  std::size_t depth = 0;   // u1_rqc
  std::size_t charge = 0;  // u1_rqc
  std::uint64_t seed = 0;
};

std::string to_string(EnsembleKind kind);
EnsembleKind ensemble_kind_from_string(const std::string& name);

/// Per-site vectors of a Haar product state: 4 Gaussians per site, normalized.
std::vector<std::array<cplx, 2>> random_product_vectors(std::size_t n, Pcg32& rng);
Mps random_product_state(std::size_t n, std::uint64_t seed);

/// Random charge-conserving two-qubit gate: independent phases on |00> and |11>,
/// Haar 2x2 unitary on span{|01>, |10>}.
Matrix random_u1_gate(Pcg32& rng);

/// Basis state with the first `charge` sites occupied, followed by a depth-`depth`
/// brickwall of random charge-conserving gates (layer l starts at bond l % 2).
Mps u1_rqc_state(std::size_t n, std::size_t depth, std::size_t charge, std::uint64_t seed);
Mps u1_rqc_state_from(const Mps& start, std::size_t depth, std::uint64_t seed);

/// Sample `index` of an ensemble; each index draws from its own derived seed stream.
Mps sample_state(const EnsembleSpec& spec, std::size_t n, std::size_t index);

/// Dense Haar state or dense copy of sample_state (n small).
Vector sample_dense_state(const EnsembleSpec& spec, std::size_t n, std::size_t index);

}  // namespace qdc
