#pragma once

#include <cstddef>

#include "qdc/tensor.hpp"

namespace qdc {

/// Largest qubit count accepted by the dense 2^n x 2^n paths.
inline constexpr std::size_t kDenseLimit = 12;

void check_dense_limit(std::size_t n, const char* what);

/// Applies a two-site gate to every column of `m` (2^n rows). The gate's first
/// tensor factor acts on site a, the second on site b; a and b need not be ordered.
void apply_gate_dense(Matrix& m, std::size_t n, std::size_t a, std::size_t b, const Matrix& gate);
void apply_gate_dense(Vector& v, std::size_t n, std::size_t a, std::size_t b, const Matrix& gate);
void apply_local_dense(Matrix& m, std::size_t n, std::size_t a, const Matrix& gate);
void apply_local_dense(Vector& v, std::size_t n, std::size_t a, const Matrix& gate);

/// Embedded operator on the full register (n <= kDenseLimit).
Matrix embed_two_site(std::size_t n, std::size_t a, std::size_t b, const Matrix& op);
Matrix embed_one_site(std::size_t n, std::size_t a, const Matrix& op);

}  // namespace qdc
