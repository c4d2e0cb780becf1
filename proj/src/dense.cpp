#include "qdc/dense.hpp"

#include <string>

#include "qdc/errors.hpp"

namespace qdc {

namespace {

template <class M>
void gate_rows(M& m, std::size_t n, std::size_t a, std::size_t b, const Matrix& gate) {
  if (a == b || a >= n || b >= n) throw std::out_of_range("apply_gate_dense: invalid sites");
  if (gate.rows() != 4 || gate.cols() != 4) throw ShapeError("apply_gate_dense: gate must be 4x4");
  if (static_cast<std::size_t>(m.rows()) != (std::size_t{1} << n)) throw ShapeError("apply_gate_dense: wrong dimension");
  const std::size_t ma = std::size_t{1} << (n - 1 - a);
  const std::size_t mb = std::size_t{1} << (n - 1 - b);
  const std::size_t dim = std::size_t{1} << n;
  Eigen::Matrix<cplx, 4, Eigen::Dynamic> rows(4, m.cols());
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & (ma | mb)) continue;
    const std::size_t idx[4] = {base, base | mb, base | ma, base | ma | mb};
    for (int r = 0; r < 4; ++r) rows.row(r) = m.row(static_cast<Eigen::Index>(idx[r]));
    for (int r = 0; r < 4; ++r) {
      m.row(static_cast<Eigen::Index>(idx[r])) = gate(r, 0) * rows.row(0) + gate(r, 1) * rows.row(1) +
                                                  gate(r, 2) * rows.row(2) + gate(r, 3) * rows.row(3);
    }
  }
}

template <class M>
void local_rows(M& m, std::size_t n, std::size_t a, const Matrix& gate) {
  if (a >= n) throw std::out_of_range("apply_local_dense: invalid site");
  if (gate.rows() != 2 || gate.cols() != 2) throw ShapeError("apply_local_dense: gate must be 2x2");
  if (static_cast<std::size_t>(m.rows()) != (std::size_t{1} << n)) throw ShapeError("apply_local_dense: wrong dimension");
  const std::size_t ma = std::size_t{1} << (n - 1 - a);
  const std::size_t dim = std::size_t{1} << n;
  for (std::size_t base = 0; base < dim; ++base) {
    if (base & ma) continue;
    const auto i0 = static_cast<Eigen::Index>(base), i1 = static_cast<Eigen::Index>(base | ma);
    const auto r0 = m.row(i0).eval();
    const auto r1 = m.row(i1).eval();
    m.row(i0) = gate(0, 0) * r0 + gate(0, 1) * r1;
    m.row(i1) = gate(1, 0) * r0 + gate(1, 1) * r1;
  }
}

}  // namespace

void check_dense_limit(std::size_t n, const char* what) {
  if (n > kDenseLimit)
    throw DenseLimitError(std::string(what) + ": n = " + std::to_string(n) + " exceeds the dense limit of " +
                          std::to_string(kDenseLimit));
}

void apply_gate_dense(Matrix& m, std::size_t n, std::size_t a, std::size_t b, const Matrix& gate) {
  gate_rows(m, n, a, b, gate);
}
void apply_gate_dense(Vector& v, std::size_t n, std::size_t a, std::size_t b, const Matrix& gate) {
  gate_rows(v, n, a, b, gate);
}
void apply_local_dense(Matrix& m, std::size_t n, std::size_t a, const Matrix& gate) { local_rows(m, n, a, gate); }
void apply_local_dense(Vector& v, std::size_t n, std::size_t a, const Matrix& gate) { local_rows(v, n, a, gate); }

Matrix embed_two_site(std::size_t n, std::size_t a, std::size_t b, const Matrix& op) {
  check_dense_limit(n, "embed_two_site");
  Matrix m = Matrix::Identity(std::size_t{1} << n, std::size_t{1} << n);
  apply_gate_dense(m, n, a, b, op);
  return m;
}

Matrix embed_one_site(std::size_t n, std::size_t a, const Matrix& op) {
  check_dense_limit(n, "embed_one_site");
  Matrix m = Matrix::Identity(std::size_t{1} << n, std::size_t{1} << n);
  apply_local_dense(m, n, a, op);
  return m;
}

}  // namespace qdc
