#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdc/circuit.hpp"
#include "qdc/ensembles.hpp"
#include "qdc/models.hpp"
#include "qdc/mps.hpp"
#include "qdc/trotter.hpp"

namespace qdc {

struct DatasetMeta {
  HamiltonianSpec spec;
  double t = 0.0;
  double dt = 1e-3;
  TruncationSettings trunc;
  EnsembleSpec ensemble;
  std::string role = "train";
};

struct Sample {
  Mps input;
  Mps target;
  double discarded_weight = 0.0;  // from the target's time evolution
};

struct TrainingDataset {
  std::vector<Sample> samples;
  DatasetMeta meta;

  std::size_t size() const { return samples.size(); }
  double max_discarded_weight() const;
};

/// Draws `count` inputs from the ensemble (sample k from stream k) and evolves
/// each with TEBD to time t. A positive max_discarded turns a target whose
/// discarded weight exceeds it into a NumericalError.
TrainingDataset generate_dataset(const DatasetMeta& meta, std::size_t count, double max_discarded = 0.0);

struct CostReport {
  double cost = 0.0;
  std::vector<double> fidelities;  // |<psi_i| V |phi_i>|^2 per sample
  double discarded_weight = 0.0;   // truncation during circuit application, summed over samples
};

/// 1 - mean_i |<psi_i| V(theta) |phi_i>|^2.
CostReport empirical_risk(const TrainingDataset& data, const Circuit& c, std::span<const double> theta,
                          const TruncationSettings& trunc = {});

/// 1 - (1 - c)^(1/n).
double per_site_risk(double c, std::size_t n);

/// 1 - mean_k (1/n) sum_i <chi_k| (|phi_k,i><phi_k,i| (x) I) |chi_k>, chi_k = V^dagger psi_k.
double local_cost(const TrainingDataset& data, const Circuit& c, std::span<const double> theta,
                  const TruncationSettings& trunc = {});

struct CostGradient {
  double cost = 0.0;
  std::vector<double> gradient;  // length c.num_params(); zero for blocks outside the mask
};

/// Empirical risk and its exact gradient. With a mask, only blocks with
/// mask[b] == true receive gradient entries.
CostGradient cost_and_gradient(const TrainingDataset& data, const Circuit& c, std::span<const double> theta,
                               const TruncationSettings& trunc = {}, const std::vector<bool>* mask = nullptr);

struct AdamConfig {
  double rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

/// Bias-corrected ADAM update of theta in place. Throws NumericalError on a
/// non-finite gradient.
void adam_step(std::span<double> theta, AdamState& state, std::span<const double> grad, const AdamConfig& cfg);

enum class UpdateMethod { global, local_sweep };

struct TrainConfig {
  AdamConfig adam;
  std::size_t max_steps = 1000;
  std::size_t patience = 50;
  double min_rel_improvement = 1e-4;
  std::size_t test_every = 10;
  double cost_tolerance = 1e-10;
  TruncationSettings trunc;
  UpdateMethod method = UpdateMethod::global;
  std::size_t inner_iterations = 10;  // local sweep: steps per layer visit
};

struct HistoryRow {
  std::size_t step = 0;
  double train_cost = 0.0;
  std::optional<double> test_cost;
  double grad_norm = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<double> theta;       // best by test cost (train cost without a test set)
  std::vector<double> last_theta;  // parameters after the final update
  double best_test_cost = 1.0;
  double best_train_cost = 1.0;    // train cost at the returned theta
  std::size_t best_step = 0;
  std::size_t steps = 0;           // optimizer updates performed
  std::string stop_reason;
  std::vector<HistoryRow> history;
};

using ProgressCallback = std::function<void(const HistoryRow&)>;

TrainResult train(const TrainingDataset& train_set, const TrainingDataset* test_set, const Circuit& c,
                  std::vector<double> theta, const TrainConfig& cfg, const ProgressCallback& progress = {});

/// Sweeps layers 0 -> tau-1 -> 1, updating one layer's blocks with their own ADAM
/// state for cfg.inner_iterations steps per visit.
TrainResult local_sweep_train(const TrainingDataset& train_set, const TrainingDataset* test_set, const Circuit& c,
                              std::vector<double> theta, TrainConfig cfg, const ProgressCallback& progress = {});

/// sqrt(T log T / K); shape-only, the constant is unknown.
double generalization_gap_diagnostic(std::size_t t_gates, std::size_t k);

/// Layer sequence of one local sweep.
std::vector<std::size_t> sweep_order(std::size_t depth);

// ---- warm starts -------------------------------------------------------------

/// Parameters reproducing the folded Trotter circuit on `ansatz`: Trotter stages
/// are laid onto ansatz layers of the same bond color in order, unmatched ansatz
/// layers stay at the identity. Throws EmbeddingError when the layout does not fit.
std::vector<double> warm_start_trotter(const HamiltonianSpec& spec, double t, const TrotterScheme& scheme,
                                       std::size_t steps, const Circuit& ansatz);

/// V1 = V0 V0 on a brickwall of depth 2 tau0.
std::pair<Circuit, std::vector<double>> warm_start_double_time(const Circuit& previous,
                                                               std::span<const double> theta);

/// V1 = V0 (x) V0 on the lattice doubled along its long axis; gates crossing the
/// seam start at the identity (translation-invariant layers keep their shared block).
std::pair<Circuit, std::vector<double>> warm_start_double_space(const Circuit& previous,
                                                                std::span<const double> theta);

/// Gaussian parameters of standard deviation `scale`.
std::vector<double> near_identity_init(const Circuit& c, double scale, std::uint64_t seed);

}  // namespace qdc
