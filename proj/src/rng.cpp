#include "qdc/rng.hpp"

#include <cmath>
#include <numbers>

namespace qdc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return splitmix64(splitmix64(base) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) : state_(0), inc_((stream << 1u) | 1u) {
  next_u32();
  state_ += seed;
  next_u32();
}

std::uint32_t Pcg32::next_u32() {
  const std::uint64_t old = state_;
  state_ = old * 6364136223846793005ULL + inc_;
  const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
  const auto rot = static_cast<std::uint32_t>(old >> 59u);
  return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
}

double Pcg32::uniform() {
  const std::uint64_t hi = next_u32() >> 5;  // 27 bits
  const std::uint64_t lo = next_u32() >> 6;  // 26 bits
  return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
}

double Pcg32::uniform_open_zero() { return 1.0 - uniform(); }

double Pcg32::gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform_open_zero()));
  const double phi = 2.0 * std::numbers::pi * uniform();
  cached_ = r * std::sin(phi);
  has_cached_ = true;
  return r * std::cos(phi);
}

cplx Pcg32::complex_gaussian() {
  const double re = gaussian();
  const double im = gaussian();
  return {re, im};
}

Matrix haar_unitary(std::size_t dim, Pcg32& rng) {
  Matrix g(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) g(i, j) = rng.complex_gaussian();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t j = 0; j < dim; ++j) {
    const cplx d = r(j, j);
    const double mag = std::abs(d);
    q.col(j) *= mag > 0.0 ? d / mag : cplx{1.0, 0.0};
  }
  return q;
}

Vector haar_state(std::size_t dim, Pcg32& rng) {
  Vector v(dim);
  for (std::size_t i = 0; i < dim; ++i) v[i] = rng.complex_gaussian();
  return v / v.norm();
}

}  // namespace qdc
