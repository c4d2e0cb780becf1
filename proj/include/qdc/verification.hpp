#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qdc/circuit.hpp"
#include "qdc/ensembles.hpp"

namespace qdc {

/// 1 - |Tr(u^dagger v)|^2 / N^2.
double unitary_infidelity(const Matrix& u, const Matrix& v);

/// Haar-averaged state fidelity (N + |Tr(u^dagger v)|^2) / (N (N + 1)).
double haar_average_fidelity(const Matrix& u, const Matrix& v);

struct RiskEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo estimate of E[1 - |<psi| u^dagger v |psi>|^2] over an ensemble.
RiskEstimate expected_risk_mc(const Matrix& u, const Matrix& v, const EnsembleSpec& ensemble, std::size_t samples);
RiskEstimate expected_risk_mc(const Matrix& u, const Circuit& c, std::span<const double> theta,
                              const EnsembleSpec& ensemble, std::size_t samples);

struct BoundCheckReport {
  RiskEstimate in_distribution;  // R_Q, product-state ensemble
  double haar_risk = 0.0;        // R_Haar, exact
  double dimension = 0.0;        // N
  double lower_margin = 0.0;     // (N/(N+1)) R_Q - R_Haar / 2
  double upper_margin = 0.0;     // R_Haar - (N/(N+1)) R_Q
  double slack = 0.0;            // 3 sigma of (N/(N+1)) R_Q
  bool lower_holds = false;
  bool upper_holds = false;
  bool pass() const { return lower_holds && upper_holds; }
};

/// Checks R_Haar / 2 <= (N/(N+1)) R_Q <= R_Haar with R_Q from product samples, at 3 sigma.
BoundCheckReport prop1_bound_check(const Matrix& u, const Matrix& v, std::size_t samples, std::uint64_t seed);
BoundCheckReport prop1_bound_check(const Matrix& u, const Circuit& c, std::span<const double> theta,
                                   std::size_t samples, std::uint64_t seed);

struct FirstMomentReport {
  double max_deviation = 0.0;       // max_ij |mean(|psi><psi|)_ij - delta_ij / 2^n|
  double max_diagonal_deviation = 0.0;
  double stderr_at_max = 0.0;       // standard error of the entry attaining max_deviation
  std::size_t samples = 0;
  bool within_3_sigma = false;      // every entry within 3 standard errors of its target
};

FirstMomentReport first_moment_test(const EnsembleSpec& ensemble, std::size_t n, std::size_t samples);

struct LightConeReport {
  std::vector<double> mean_z;   // ensemble-average <Z_i>
  std::vector<double> gap;      // mean_z[i] - (1 - 2/n)
  double scrambled_reference = 0.0;
  std::size_t untouched_from = 0;  // first site outside the light cone of site 0
};

/// Ensemble-average <Z_i> of random charge-conserving brickwalls acting on |10...0>.
LightConeReport u1_light_cone_test(std::size_t n, std::size_t depth, std::size_t samples, std::uint64_t seed);

}  // namespace qdc
