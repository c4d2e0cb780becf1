#include "qdc/verification.hpp"

#include <cmath>
#include <exception>

#include "qdc/dense.hpp"
#include "qdc/errors.hpp"

namespace qdc {

namespace {

void check_pair(const Matrix& u, const Matrix& v) {
  if (u.rows() != u.cols() || v.rows() != v.cols() || u.rows() != v.rows())
    throw ShapeError("unitary comparison: operands must be square and of equal size");
  if (!is_unitary(u, 1e-8) || !is_unitary(v, 1e-8)) throw std::invalid_argument("unitary comparison: non-unitary operand");
}

std::size_t qubits_of(Eigen::Index dim) {
  std::size_t n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  if ((Eigen::Index{1} << n) != dim) throw ShapeError("dimension is not a power of two");
  return n;
}

RiskEstimate summarize(const std::vector<double>& x) {
  RiskEstimate r;
  r.samples = x.size();
  if (x.empty()) return r;
  double s = 0.0;
  for (double v : x) s += v;
  r.mean = s / static_cast<double>(x.size());
  if (x.size() > 1) {
    double q = 0.0;
    for (double v : x) q += (v - r.mean) * (v - r.mean);
    r.stderr_ = std::sqrt(q / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
  }
  return r;
}

template <class F>
void parallel_samples(std::size_t count, F&& body) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double unitary_infidelity(const Matrix& u, const Matrix& v) {
  check_pair(u, v);
  const double n = static_cast<double>(u.rows());
  const double f = std::norm((u.adjoint() * v).trace()) / (n * n);
  return std::clamp(1.0 - f, 0.0, 1.0);
}

double haar_average_fidelity(const Matrix& u, const Matrix& v) {
  check_pair(u, v);
  const double n = static_cast<double>(u.rows());
  return (n + std::norm((u.adjoint() * v).trace())) / (n * (n + 1.0));
}

RiskEstimate expected_risk_mc(const Matrix& u, const Matrix& v, const EnsembleSpec& ensemble, std::size_t samples) {
  check_pair(u, v);
  const std::size_t n = qubits_of(u.rows());
  check_dense_limit(n, "expected_risk_mc");
  const Matrix w = u.adjoint() * v;
  std::vector<double> risks(samples);
  parallel_samples(samples, [&](std::size_t i) {
    const Vector psi = sample_dense_state(ensemble, n, i);
    risks[i] = 1.0 - std::norm(psi.dot(w * psi));
  });
  return summarize(risks);
}

RiskEstimate expected_risk_mc(const Matrix& u, const Circuit& c, std::span<const double> theta,
                              const EnsembleSpec& ensemble, std::size_t samples) {
  return expected_risk_mc(u, circuit_to_dense(c, theta), ensemble, samples);
}

BoundCheckReport prop1_bound_check(const Matrix& u, const Matrix& v, std::size_t samples, std::uint64_t seed) {
  BoundCheckReport r;
  EnsembleSpec product;
  product.kind = EnsembleKind::random_product;
  product.seed = seed;
  r.in_distribution = expected_risk_mc(u, v, product, samples);
  r.haar_risk = 1.0 - haar_average_fidelity(u, v);
  r.dimension = static_cast<double>(u.rows());
  const double scale = r.dimension / (r.dimension + 1.0);
  const double mid = scale * r.in_distribution.mean;
  r.slack = 3.0 * scale * r.in_distribution.stderr_;
  r.lower_margin = mid - 0.5 * r.haar_risk;
  r.upper_margin = r.haar_risk - mid;
  constexpr double eps = 1e-12;
  r.lower_holds = r.lower_margin + r.slack >= -eps;
  r.upper_holds = r.upper_margin + r.slack >= -eps;
  return r;
}

BoundCheckReport prop1_bound_check(const Matrix& u, const Circuit& c, std::span<const double> theta,
                                   std::size_t samples, std::uint64_t seed) {
  return prop1_bound_check(u, circuit_to_dense(c, theta), samples, seed);
}

FirstMomentReport first_moment_test(const EnsembleSpec& ensemble, std::size_t n, std::size_t samples) {
  if (n > 10) throw DenseLimitError("first_moment_test: n must be at most 10");
  if (samples == 0) throw std::invalid_argument("first_moment_test: need at least one sample");
  const std::size_t dim = std::size_t{1} << n;
  std::vector<Vector> states(samples);
  parallel_samples(samples, [&](std::size_t i) { states[i] = sample_dense_state(ensemble, n, i); });
  Matrix sum = Matrix::Zero(dim, dim);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& psi : states) {
    const Matrix rho = psi * psi.adjoint();
    sum += rho;
    sq += rho.cwiseAbs2();
  }
  const double s = static_cast<double>(samples);
  FirstMomentReport r;
  r.samples = samples;
  r.within_3_sigma = true;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      const cplx mean = sum(i, j) / s;
      const double target = i == j ? 1.0 / static_cast<double>(dim) : 0.0;
      const double dev = std::abs(mean - target);
      const double var = std::max(0.0, sq(i, j) / s - std::norm(mean)) * (s / std::max(1.0, s - 1.0));
      const double se = std::sqrt(var / s);
      if (dev > 3.0 * se + 1e-12) r.within_3_sigma = false;
      if (dev > r.max_deviation) {
        r.max_deviation = dev;
        r.stderr_at_max = se;
      }
      if (i == j) r.max_diagonal_deviation = std::max(r.max_diagonal_deviation, dev);
    }
  return r;
}

LightConeReport u1_light_cone_test(std::size_t n, std::size_t depth, std::size_t samples, std::uint64_t seed) {
  if (depth >= n) throw std::invalid_argument("u1_light_cone_test: depth must be below n");
  if (samples == 0) throw std::invalid_argument("u1_light_cone_test: need at least one sample");
  std::vector<std::vector<double>> z(samples);
  parallel_samples(samples, [&](std::size_t k) {
    const Mps s = u1_rqc_state(n, depth, 1, derive_seed(seed, k));
    static const Matrix pz = pauli::z();
    z[k].resize(n);
    for (std::size_t i = 0; i < n; ++i) z[k][i] = local_expectation(s, i, pz).real();
  });
  LightConeReport r;
  r.scrambled_reference = 1.0 - 2.0 / static_cast<double>(n);
  r.mean_z.assign(n, 0.0);
  for (const auto& row : z)
    for (std::size_t i = 0; i < n; ++i) r.mean_z[i] += row[i];
  for (auto& m : r.mean_z) m /= static_cast<double>(samples);
  for (double m : r.mean_z) r.gap.push_back(m - r.scrambled_reference);
  r.untouched_from = depth + 1;
  return r;
}

}  // namespace qdc
