#pragma once

#include <string>
#include <vector>

#include "qdc/circuit.hpp"
#include "qdc/models.hpp"
#include "qdc/mps.hpp"

namespace qdc {

struct TrotterStage {
  int group = 0;
  double coefficient = 0.0;
};

/// Ordered product of exp(-i c dt H_group) factors for one step of length dt.
struct TrotterScheme {
  int order = 1;
  std::vector<TrotterStage> stages;
  std::string provenance = "builtin";
};

TrotterScheme lie_scheme(const std::vector<int>& groups);
TrotterScheme strang_scheme(const std::vector<int>& groups);
/// Fourth-order Suzuki: S2(s) S2(s) S2(1 - 4s) S2(s) S2(s), s = 1 / (4 - 4^(1/3)).
TrotterScheme suzuki4_scheme(const std::vector<int>& groups);
TrotterScheme builtin_scheme(int order, const std::vector<int>& groups);

/// Text format: one stage per line, "(group-id, coefficient)"; blank lines and
/// lines starting with '#' are ignored except "# order <p>".
TrotterScheme parse_trotter_scheme(const std::string& text);
TrotterScheme load_trotter_scheme(const std::string& path);

/// Throws ConfigError unless the scheme names exactly `groups` and each group's
/// coefficients sum to 1.
void validate_scheme(const TrotterScheme& scheme, const std::vector<int>& groups);

/// Stage list of `steps` consecutive steps, adjacent equal groups merged.
std::vector<TrotterStage> repeated_stages(const TrotterScheme& scheme, std::size_t steps);

/// Frozen circuit of exp(-i c dt term) gates in stage order. Folded: on-site
/// fields live inside nearest bonds; unfolded: on-site fields are single-site gates.
Circuit trotter_circuit(const HamiltonianSpec& spec, double dt, const TrotterScheme& scheme, std::size_t steps = 1,
                        bool folded = true);

struct TebdReport {
  double discarded_weight = 0.0;
  std::size_t steps = 0;
  std::size_t max_bond = 1;
};

/// Second-order (folded) TEBD from 0 to t with step dt; a shorter last step
/// covers any remainder.
TebdReport tebd_evolve(Mps& state, const HamiltonianSpec& spec, double t, double dt,
                       const TruncationSettings& trunc);

}  // namespace qdc
