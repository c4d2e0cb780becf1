#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qdc/io.hpp"

namespace qdc {

enum class ExperimentKind { data_gen, compile, dynamics, resource_compare, verify };
std::string to_string(ExperimentKind k);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Ensemble-independent view of a run configuration document.
struct RunConfig {
  ExperimentKind kind = ExperimentKind::compile;
  HamiltonianSpec spec;
  double time = 0.0;
  std::size_t tau = 1;
  bool translation_invariant = true;
  std::size_t train_size = 16;
  std::size_t test_size = 100;
  std::uint64_t data_seed = 0;
  EnsembleSpec train_ensemble;
  double dt = 1e-3;
  double max_discarded = 0.0;
  std::string train_path;  // optional pre-generated datasets
  std::string test_path;
  TruncationSettings trunc;          // dataset / reference evolution
  TruncationSettings circuit_trunc;  // circuit application during training
  TrainConfig optimizer;
  Json warm_start = Json::object();
  std::string output_dir = "out";
  Json raw;  // the full document
};

/// Parses and validates a configuration; relative paths resolve against base_dir.
RunConfig parse_run_config(const Json& doc, const std::string& base_dir = "");

/// Columns of the structure factor: k = 2 pi m / L for m = 0..L-1 along the
/// column (y) direction, L = ly (the chain length for chains).
/// S_k = (1/L) sum_{j,j'} e^{i k (y_j - y_j')} <S+_j S-_j'>.
std::vector<double> structure_factor(const Lattice& lattice, const Matrix& correlations);

/// <S+_j S-_j'> for all pairs; the diagonal is the occupation (1 - <Z_j>) / 2.
Matrix hopping_correlations(const Mps& state);

/// "bits:0110...", "neel", "domain" (middle third occupied), "single" (middle site occupied).
Mps initial_state(const std::string& descriptor, const Lattice& lattice);

struct CompileOutcome {
  CircuitCheckpoint checkpoint;
  TrainResult result;
  double final_train_cost = 0.0;
  double final_test_cost = 0.0;
  ResourceReport resources;
};

/// Warm start plus training for a parsed configuration; writes nothing.
CompileOutcome compile_circuit(const RunConfig& cfg, std::ostream* log);

/// Runs one subcommand, writing its outputs under cfg.output_dir (or out_dir when
/// non-empty). Returns the process exit code.
int run_experiment(const Json& doc, const std::string& base_dir, const std::string& out_dir, std::ostream& log,
                   std::optional<ExperimentKind> expected = std::nullopt);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int config = 2;
inline constexpr int numerical = 3;
}  // namespace exit_code

}  // namespace qdc
