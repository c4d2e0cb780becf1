#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdc/lattice.hpp"
#include "qdc/mps.hpp"
#include "qdc/tensor.hpp"

namespace qdc {

inline constexpr std::size_t kSu4Params = 15;

/// The 15 generators P_k = sigma_a (x) sigma_b, (a, b) != (0, 0), with index 4a + b - 1
/// and sigma_0..3 = I, X, Y, Z: IX, IY, IZ, XI, XX, XY, XZ, YI, YX, YY, YZ, ZI, ZX, ZY, ZZ.
const std::array<Matrix, kSu4Params>& su4_generators();
std::string su4_generator_name(std::size_t k);

/// exp(-i sum_k theta_k P_k).
Matrix su4_from_params(std::span<const double> theta);
/// Inverse of su4_from_params up to global phase (principal matrix logarithm).
std::array<double, kSu4Params> su4_params_from_unitary(const Matrix& u);

enum class GateKind { su4, nn_xx, nnn_xx, local, swap };
std::string to_string(GateKind k);

struct CircuitGate {
  std::size_t first = 0;   // chain site acted on by the gate's first tensor factor
  std::size_t second = 0;  // == first for single-site gates
  std::optional<std::size_t> block;  // parameter block (trainable gates)
  std::optional<std::size_t> fixed;  // index into Circuit::fixed (frozen gates)
  GateKind kind = GateKind::su4;

  bool two_site() const { return first != second; }
  std::size_t lo() const { return first < second ? first : second; }
  std::size_t hi() const { return first < second ? second : first; }
  bool flipped() const { return first > second; }
  std::size_t distance() const { return hi() - lo(); }
};

struct CircuitLayer {
  std::vector<CircuitGate> gates;  // disjoint supports
  int color = -1;
};

/// Layered circuit over a chain of n sites. Trainable gates read 15 parameters
/// per block from theta; frozen gates carry their matrices.
struct Circuit {
  std::size_t n = 0;
  std::vector<CircuitLayer> layers;
  std::size_t num_blocks = 0;
  std::vector<Matrix> fixed;
  bool translation_invariant = false;
  std::optional<Lattice> lattice;

  std::size_t depth() const { return layers.size(); }
  std::size_t num_params() const { return num_blocks * kSu4Params; }
  std::size_t num_gates() const;
  // Blocks used by a layer, ascending.
  std::vector<std::size_t> layer_blocks(std::size_t layer) const;
  void validate() const;
};

/// Brickwall of SU(4) blocks on the nearest bonds of a lattice. Layer l uses bond
/// color cycle[l % cycle.size()]: chain {0, 1}; strip {0, 1, 2, 3[, 4]}. A
/// translation-invariant circuit has one block per layer, otherwise one per gate.
Circuit brickwall(const Lattice& lattice, std::size_t tau, bool translation_invariant);
Circuit brickwall_1d(std::size_t n, std::size_t tau, bool translation_invariant);
Circuit brickwall_snake_2d(std::size_t lx, std::size_t ly, std::size_t tau, bool translation_invariant,
                           bool periodic_x = true);
std::vector<int> brickwall_color_cycle(const Lattice& lattice);

/// Matrix of a gate with its first factor on `first`.
Matrix gate_matrix(const Circuit& c, const CircuitGate& g, std::span<const double> theta);
/// Same gate with its first factor on lo() (i.e. chain order).
Matrix gate_matrix_chain_order(const Circuit& c, const CircuitGate& g, std::span<const double> theta);

struct ApplyReport {
  double discarded_weight = 0.0;
  std::size_t max_bond = 1;
};

ApplyReport apply_circuit(Mps& state, const Circuit& c, std::span<const double> theta, const TruncationSettings& trunc);
/// Applies V(theta)^dagger (layers and gates reversed, each gate adjoint).
ApplyReport apply_circuit_adjoint(Mps& state, const Circuit& c, std::span<const double> theta,
                                  const TruncationSettings& trunc);

Matrix circuit_to_dense(const Circuit& c, std::span<const double> theta);
void apply_circuit_dense(Vector& v, const Circuit& c, std::span<const double> theta);

struct ResourceReport {
  std::size_t su4 = 0;
  std::size_t nn_xx = 0;
  std::size_t nnn_xx = 0;
  std::size_t swaps = 0;
  std::size_t local = 0;
  std::size_t cnots = 0;
  std::map<std::size_t, std::size_t> distance_histogram;  // chain distance -> two-site gate count
};

/// CNOT cost model: SU(4) 3, nearest XX 2, next-nearest XX 6, SWAP 3. A gate of
/// chain distance d and native reach r (2 for next-nearest XX, else 1) needs
/// 2 (d - r) SWAPs. Single-site gates are free.
ResourceReport count_resources(const Circuit& c);

}  // namespace qdc
