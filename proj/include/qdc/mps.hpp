#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "qdc/tensor.hpp"

namespace qdc {

/// Dual-criterion truncation: relative squared-weight cutoff plus a soft bond cap.
/// A nonzero hard_cap turns "cutoff wants more than hard_cap states" into a BondCapError.
struct TruncationSettings {
  std::size_t max_bond = 128;
  double cutoff = 1e-12;
  std::size_t hard_cap = 0;

  static TruncationSettings exact() { return {std::numeric_limits<std::size_t>::max() / 4, 0.0, 0}; }
};

struct GateReport {
  double discarded_weight = 0.0;  // relative weight dropped by this operation
  std::size_t bond = 1;           // bond dimension left behind at the gate
  std::size_t first_changed = 0;  // inclusive range of sites whose tensors changed
  std::size_t last_changed = 0;
};

enum class CenterSide { left, right };

/// Open-boundary matrix product state of qubits. Site tensors are (left, 2, right)
/// with unit boundary bonds; sites are numbered from 0 and site 0 is the most
/// significant qubit of the dense representation.
class Mps {
 public:
  Mps() = default;
  explicit Mps(std::vector<ComplexTensor> sites);
  // Restores bookkeeping from a checkpoint; the center claim is verified.
  Mps(std::vector<ComplexTensor> sites, std::optional<std::size_t> center, double discarded_weight);

  static Mps product_state(std::span<const std::array<cplx, 2>> site_vectors);
  static Mps basis_state(std::span<const int> bits);
  static Mps basis_state(std::string_view bits);
  static Mps from_dense(const Vector& amplitudes, std::size_t n,
                        const TruncationSettings& trunc = TruncationSettings::exact());

  std::size_t size() const { return sites_.size(); }
  const ComplexTensor& site(std::size_t i) const;
  std::size_t bond_dimension(std::size_t bond) const;  // bond between sites bond and bond+1
  std::vector<std::size_t> bond_dimensions() const;
  std::size_t max_bond_dimension() const;
  bool is_product() const { return max_bond_dimension() == 1; }

  std::optional<std::size_t> center() const { return center_; }
  double discarded_weight() const { return discarded_; }
  bool normalized() const { return normalized_; }

  std::optional<std::uint64_t> seed() const { return seed_; }
  void set_seed(std::optional<std::uint64_t> seed) { seed_ = seed; }

  // Full left/right sweep of QR factorizations placing the center at `center`.
  void canonicalize(std::size_t center);
  // Moves an existing center; canonicalizes from scratch when none is set.
  // Returns the inclusive range of sites whose tensors changed.
  std::pair<std::size_t, std::size_t> move_center(std::size_t target);

  double norm() const;
  void normalize();

  GateReport apply_two_site_gate(std::size_t i, const Matrix& gate, const TruncationSettings& trunc,
                                 CenterSide side = CenterSide::right);
  void apply_single_site_gate(std::size_t i, const Matrix& gate);

  Vector to_dense() const;

 private:
  void validate() const;
  void shift_center_right(std::size_t p);
  void shift_center_left(std::size_t p);

  std::vector<ComplexTensor> sites_;
  std::optional<std::size_t> center_;
  double discarded_ = 0.0;
  bool normalized_ = false;
  std::optional<std::uint64_t> seed_;
};

GateReport apply_two_site_gate(Mps& state, std::size_t i, const Matrix& gate, const TruncationSettings& trunc);

/// Gate on (i, j), i < j: site j is swapped down to i+1, the gate acts, and the swaps are undone.
GateReport apply_gate_long_range(Mps& state, std::size_t i, std::size_t j, const Matrix& gate,
                                 const TruncationSettings& trunc);

/// <a|b>
cplx overlap(const Mps& a, const Mps& b);

struct SiteOperator {
  std::size_t site;
  const Matrix* op;  // 2x2
};

/// <psi| prod_k O_k |psi> / <psi|psi> for operators on distinct sites.
cplx operator_string_expectation(const Mps& state, std::span<const SiteOperator> ops);

cplx local_expectation(const Mps& state, std::size_t site, const Matrix& op);
cplx two_point_correlator(const Mps& state, std::size_t i, std::size_t j, const Matrix& op_i,
                          const Matrix& op_j);

/// Sum of <Z_i>.
double total_z(const Mps& state);

}  // namespace qdc
