#pragma once

#include <cstdint>

#include "qdc/tensor.hpp"

namespace qdc {

/// SplitMix64 mixing step; used to derive independent per-sample seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// PCG32 (XSH-RR 64/32). Output is fully specified, so sample streams are
/// identical across compilers and platforms.
class Pcg32 {
 public:
  explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0x14057b7ef767814fULL);

  std::uint32_t next_u32();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_open_zero();
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double gaussian();
  cplx complex_gaussian();

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// Haar-random dim x dim unitary (QR of a Ginibre matrix with phase correction).
Matrix haar_unitary(std::size_t dim, Pcg32& rng);

/// Haar-random unit vector in C^dim (normalized complex Gaussian).
Vector haar_state(std::size_t dim, Pcg32& rng);

}  // namespace qdc
