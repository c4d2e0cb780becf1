#include "qdc/circuit.hpp"

#include <algorithm>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "qdc/dense.hpp"
#include "qdc/errors.hpp"

namespace qdc {

const std::array<Matrix, kSu4Params>& su4_generators() {
  static const std::array<Matrix, kSu4Params> gens = [] {
    const Matrix sigma[4] = {pauli::identity(), pauli::x(), pauli::y(), pauli::z()};
    std::array<Matrix, kSu4Params> g;
    for (std::size_t a = 0; a < 4; ++a)
      for (std::size_t b = 0; b < 4; ++b)
        if (a + b > 0) g[4 * a + b - 1] = kron(sigma[a], sigma[b]);
    return g;
  }();
  return gens;
}

std::string su4_generator_name(std::size_t k) {
  static const char* names = "IXYZ";
  if (k >= kSu4Params) throw std::out_of_range("su4_generator_name: index out of range");
  return {names[(k + 1) / 4], names[(k + 1) % 4]};
}

Matrix su4_from_params(std::span<const double> theta) {
  if (theta.size() != kSu4Params) throw std::invalid_argument("su4_from_params: expected 15 parameters");
  const auto& gens = su4_generators();
  Matrix h = Matrix::Zero(4, 4);
  for (std::size_t k = 0; k < kSu4Params; ++k) h += theta[k] * gens[k];
  return hermitian_exponential(h, -1.0);
}

std::array<double, kSu4Params> su4_params_from_unitary(const Matrix& u) {
  if (u.rows() != 4 || u.cols() != 4) throw ShapeError("su4_params_from_unitary: expected a 4x4 matrix");
  if (!is_unitary(u, 1e-8)) throw std::invalid_argument("su4_params_from_unitary: matrix is not unitary");
  Eigen::ComplexSchur<Matrix> schur(u);
  const Matrix& q = schur.matrixU();
  const Matrix& t = schur.matrixT();
  Vector alpha(4);
  for (Eigen::Index i = 0; i < 4; ++i) alpha[i] = -std::arg(t(i, i));
  // u = exp(-i h) with h Hermitian; any branch of the logarithm reproduces u exactly.
  const Matrix h = q * alpha.asDiagonal() * q.adjoint();
  const auto& gens = su4_generators();
  std::array<double, kSu4Params> theta{};
  for (std::size_t k = 0; k < kSu4Params; ++k) theta[k] = (gens[k] * h).trace().real() / 4.0;
  return theta;
}

std::string to_string(GateKind k) {
  switch (k) {
    case GateKind::su4: return "su4";
    case GateKind::nn_xx: return "nn_xx";
    case GateKind::nnn_xx: return "nnn_xx";
    case GateKind::local: return "local";
    case GateKind::swap: return "swap";
  }
  return "unknown";
}

std::size_t Circuit::num_gates() const {
  std::size_t c = 0;
  for (const auto& l : layers) c += l.gates.size();
  return c;
}

std::vector<std::size_t> Circuit::layer_blocks(std::size_t layer) const {
  std::set<std::size_t> b;
  for (const auto& g : layers.at(layer).gates)
    if (g.block) b.insert(*g.block);
  return {b.begin(), b.end()};
}

void Circuit::validate() const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::vector<bool> used(n, false);
    for (const auto& g : layers[l].gates) {
      if (g.first >= n || g.second >= n) throw ShapeError("circuit: gate site out of range");
      if (g.block.has_value() == g.fixed.has_value())
        throw ShapeError("circuit: gate must be either trainable or frozen");
      if (g.block && *g.block >= num_blocks) throw ShapeError("circuit: block index out of range");
      if (g.fixed && *g.fixed >= fixed.size()) throw ShapeError("circuit: frozen gate index out of range");
      if (g.fixed) {
        const auto dim = g.two_site() ? 4 : 2;
        if (fixed[*g.fixed].rows() != dim || fixed[*g.fixed].cols() != dim)
          throw ShapeError("circuit: frozen gate has wrong shape");
      }
      if (g.block && !g.two_site()) throw ShapeError("circuit: trainable gates act on two sites");
      std::vector<std::size_t> support{g.first};
      if (g.two_site()) support.push_back(g.second);
      for (std::size_t s : support) {
        if (used[s]) throw ShapeError("circuit: overlapping gates in layer " + std::to_string(l));
        used[s] = true;
      }
    }
  }
}

std::vector<int> brickwall_color_cycle(const Lattice& lattice) { return lattice.nearest_colors(); }

Circuit brickwall(const Lattice& lattice, std::size_t tau, bool translation_invariant) {
  if (tau < 1) throw std::invalid_argument("brickwall: depth must be at least 1");
  if (lattice.size() < 2) throw std::invalid_argument("brickwall: need at least 2 sites");
  const auto bonds = lattice.nearest_bonds();
  const auto cycle = brickwall_color_cycle(lattice);
  Circuit c;
  c.n = lattice.size();
  c.lattice = lattice;
  c.translation_invariant = translation_invariant;
  for (std::size_t l = 0; l < tau; ++l) {
    CircuitLayer layer;
    layer.color = cycle[l % cycle.size()];
    for (const auto& b : bonds) {
      if (b.color != layer.color) continue;
      CircuitGate g;
      g.first = b.first;
      g.second = b.second;
      g.kind = GateKind::su4;
      g.block = translation_invariant ? l : c.num_blocks++;
      layer.gates.push_back(g);
    }
    c.layers.push_back(std::move(layer));
  }
  if (translation_invariant) c.num_blocks = tau;
  return c;
}

Circuit brickwall_1d(std::size_t n, std::size_t tau, bool translation_invariant) {
  return brickwall(Lattice::chain(n), tau, translation_invariant);
}

Circuit brickwall_snake_2d(std::size_t lx, std::size_t ly, std::size_t tau, bool translation_invariant,
                           bool periodic_x) {
  return brickwall(Lattice::strip(lx, ly, periodic_x), tau, translation_invariant);
}

namespace {

Matrix block_matrix(std::span<const double> theta, std::size_t block) {
  return su4_from_params(theta.subspan(block * kSu4Params, kSu4Params));
}

void check_theta(const Circuit& c, std::span<const double> theta) {
  if (theta.size() != c.num_params())
    throw ShapeError("circuit: expected " + std::to_string(c.num_params()) + " parameters, got " +
                     std::to_string(theta.size()));
}

std::vector<Matrix> all_blocks(const Circuit& c, std::span<const double> theta) {
  check_theta(c, theta);
  std::vector<Matrix> out(c.num_blocks);
  for (std::size_t b = 0; b < c.num_blocks; ++b) out[b] = block_matrix(theta, b);
  return out;
}

const Matrix& pick(const Circuit& c, const CircuitGate& g, const std::vector<Matrix>& blocks) {
  return g.block ? blocks[*g.block] : c.fixed[*g.fixed];
}

Matrix to_chain_order(const CircuitGate& g, const Matrix& m) {
  if (!g.flipped()) return m;
  static const Matrix swap = pauli::swap();
  return swap * m * swap;
}

void apply_one(Mps& state, const CircuitGate& g, const Matrix& m, const TruncationSettings& trunc, ApplyReport& rep) {
  if (!g.two_site()) {
    state.apply_single_site_gate(g.first, m);
    return;
  }
  const Matrix mc = to_chain_order(g, m);
  const auto r = g.distance() == 1 ? state.apply_two_site_gate(g.lo(), mc, trunc)
                                   : apply_gate_long_range(state, g.lo(), g.hi(), mc, trunc);
  rep.discarded_weight += r.discarded_weight;
  rep.max_bond = std::max(rep.max_bond, state.max_bond_dimension());
}

}  // namespace

Matrix gate_matrix(const Circuit& c, const CircuitGate& g, std::span<const double> theta) {
  if (g.block) {
    check_theta(c, theta);
    return block_matrix(theta, *g.block);
  }
  return c.fixed.at(*g.fixed);
}

Matrix gate_matrix_chain_order(const Circuit& c, const CircuitGate& g, std::span<const double> theta) {
  return to_chain_order(g, gate_matrix(c, g, theta));
}

ApplyReport apply_circuit(Mps& state, const Circuit& c, std::span<const double> theta, const TruncationSettings& trunc) {
  if (state.size() != c.n) throw ShapeError("apply_circuit: state and circuit sizes differ");
  const auto blocks = all_blocks(c, theta);
  ApplyReport rep;
  for (const auto& layer : c.layers)
    for (const auto& g : layer.gates) apply_one(state, g, pick(c, g, blocks), trunc, rep);
  rep.max_bond = std::max(rep.max_bond, state.max_bond_dimension());
  return rep;
}

ApplyReport apply_circuit_adjoint(Mps& state, const Circuit& c, std::span<const double> theta,
                                  const TruncationSettings& trunc) {
  if (state.size() != c.n) throw ShapeError("apply_circuit_adjoint: state and circuit sizes differ");
  const auto blocks = all_blocks(c, theta);
  ApplyReport rep;
  for (auto l = c.layers.rbegin(); l != c.layers.rend(); ++l)
    for (auto g = l->gates.rbegin(); g != l->gates.rend(); ++g)
      apply_one(state, *g, pick(c, *g, blocks).adjoint(), trunc, rep);
  rep.max_bond = std::max(rep.max_bond, state.max_bond_dimension());
  return rep;
}

Matrix circuit_to_dense(const Circuit& c, std::span<const double> theta) {
  check_dense_limit(c.n, "circuit_to_dense");
  const auto blocks = all_blocks(c, theta);
  const std::size_t dim = std::size_t{1} << c.n;
  Matrix m = Matrix::Identity(dim, dim);
  for (const auto& layer : c.layers)
    for (const auto& g : layer.gates) {
      if (g.two_site())
        apply_gate_dense(m, c.n, g.first, g.second, pick(c, g, blocks));
      else
        apply_local_dense(m, c.n, g.first, pick(c, g, blocks));
    }
  return m;
}

void apply_circuit_dense(Vector& v, const Circuit& c, std::span<const double> theta) {
  const auto blocks = all_blocks(c, theta);
  for (const auto& layer : c.layers)
    for (const auto& g : layer.gates) {
      if (g.two_site())
        apply_gate_dense(v, c.n, g.first, g.second, pick(c, g, blocks));
      else
        apply_local_dense(v, c.n, g.first, pick(c, g, blocks));
    }
}

ResourceReport count_resources(const Circuit& c) {
  ResourceReport r;
  for (const auto& layer : c.layers)
    for (const auto& g : layer.gates) {
      if (!g.two_site()) {
        ++r.local;
        continue;
      }
      std::size_t reach = 1;
      switch (g.kind) {
        case GateKind::su4: ++r.su4; break;
        case GateKind::nn_xx: ++r.nn_xx; break;
        case GateKind::nnn_xx:
          ++r.nnn_xx;
          reach = 2;
          break;
        case GateKind::swap: ++r.swaps; break;
        case GateKind::local: ++r.su4; break;
      }
      const std::size_t d = g.distance();
      if (d > reach) r.swaps += 2 * (d - reach);
      ++r.distance_histogram[d];
    }
  r.cnots = 3 * r.su4 + 2 * r.nn_xx + 6 * r.nnn_xx + 3 * r.swaps;
  return r;
}

}  // namespace qdc
