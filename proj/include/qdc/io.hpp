#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "qdc/circuit.hpp"
#include "qdc/ensembles.hpp"
#include "qdc/models.hpp"
#include "qdc/mps.hpp"
#include "qdc/training.hpp"

namespace qdc {

using Json = nlohmann::json;

inline constexpr const char* kMpsSchema = "qdc.mps/1";
inline constexpr const char* kDatasetSchema = "qdc.dataset/1";
inline constexpr const char* kCircuitSchema = "qdc.circuit/1";

/// %.17g formatting, the form every number takes in CSV output.
std::string format_double(double x);

std::string base64_encode(const std::vector<unsigned char>& bytes);
std::vector<unsigned char> base64_decode(const std::string& text);

/// Writes to a temporary sibling file, then renames it over `path`.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& doc);

Json lattice_to_json(const Lattice& l);
Lattice lattice_from_json(const Json& j);
Json hamiltonian_to_json(const HamiltonianSpec& s);
HamiltonianSpec hamiltonian_from_json(const Json& j);
Json truncation_to_json(const TruncationSettings& t);
TruncationSettings truncation_from_json(const Json& j);
Json ensemble_to_json(const EnsembleSpec& e);
EnsembleSpec ensemble_from_json(const Json& j);

/// Site tensors as base64 of little-endian (real, imaginary) doubles in row-major order.
Json mps_to_json(const Mps& state, const TruncationSettings& trunc);
Mps mps_from_json(const Json& j);

Json dataset_to_json(const TrainingDataset& data);
TrainingDataset dataset_from_json(const Json& j);

struct CircuitCheckpoint {
  Circuit circuit;
  std::vector<double> theta;
  Json provenance = Json::object();
};

/// Parameters are stored as decimal strings with 17 significant digits.
Json circuit_to_json(const CircuitCheckpoint& cp);
CircuitCheckpoint circuit_from_json(const Json& j);

/// step,train_cost,test_cost,grad_norm (test_cost empty when not evaluated).
std::string history_csv(const std::vector<HistoryRow>& rows);
/// step,wall_seconds.
std::string timing_csv(const std::vector<HistoryRow>& rows);

}  // namespace qdc
