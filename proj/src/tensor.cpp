#include "qdc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include <lapacke.h>

#include "qdc/errors.hpp"

namespace qdc {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ')';
  return out.str();
}

void check_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string(what) + ": non-finite input");
}

}  // namespace

ComplexTensor::ComplexTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), cplx{0.0, 0.0}) {
  for (auto e : shape_)
    if (e == 0) throw ShapeError("ComplexTensor: extents must be positive");
}

ComplexTensor::ComplexTensor(std::vector<std::size_t> shape, std::vector<cplx> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto e : shape_)
    if (e == 0) throw ShapeError("ComplexTensor: extents must be positive");
  if (product(shape_) != data_.size())
    throw ShapeError("ComplexTensor: shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " entries");
}

ComplexTensor ComplexTensor::from_matrix(const Matrix& m) {
  std::vector<cplx> data(m.data(), m.data() + m.size());
  return ComplexTensor({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())},
                       std::move(data));
}

std::size_t ComplexTensor::extent(std::size_t axis) const {
  if (axis >= shape_.size()) throw std::out_of_range("ComplexTensor: axis out of range");
  return shape_[axis];
}

std::size_t ComplexTensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) throw ShapeError("ComplexTensor: index rank mismatch");
  std::size_t off = 0;
  for (std::size_t k = 0; k < shape_.size(); ++k) {
    if (index[k] >= shape_[k]) throw std::out_of_range("ComplexTensor: index out of range");
    off = off * shape_[k] + index[k];
  }
  return off;
}

cplx& ComplexTensor::at(std::span<const std::size_t> index) { return data_[offset(index)]; }
const cplx& ComplexTensor::at(std::span<const std::size_t> index) const { return data_[offset(index)]; }

ComplexTensor ComplexTensor::reshape(std::vector<std::size_t> shape) const {
  return ComplexTensor(std::move(shape), data_);
}

ComplexTensor ComplexTensor::permute(std::span<const std::size_t> axes) const {
  const std::size_t r = rank();
  if (axes.size() != r) throw ShapeError("permute: axis list has wrong length");
  std::vector<bool> seen(r, false);
  for (auto a : axes) {
    if (a >= r) throw std::out_of_range("permute: axis out of range");
    if (seen[a]) throw ShapeError("permute: repeated axis");
    seen[a] = true;
  }
  std::vector<std::size_t> new_shape(r);
  for (std::size_t k = 0; k < r; ++k) new_shape[k] = shape_[axes[k]];

  // Input strides, row-major.
  std::vector<std::size_t> stride(r, 1);
  for (std::size_t k = r; k-- > 1;) stride[k - 1] = stride[k] * shape_[k];

  std::vector<cplx> out(data_.size());
  std::vector<std::size_t> idx(r, 0);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t src = 0;
    for (std::size_t k = 0; k < r; ++k) src += idx[k] * stride[axes[k]];
    out[flat] = data_[src];
    for (std::size_t k = r; k-- > 0;) {
      if (++idx[k] < new_shape[k]) break;
      idx[k] = 0;
    }
  }
  return ComplexTensor(std::move(new_shape), std::move(out));
}

MatrixMap ComplexTensor::matrix(std::size_t rows, std::size_t cols) {
  if (rows * cols != data_.size()) throw ShapeError("ComplexTensor::matrix: size mismatch");
  return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

ConstMatrixMap ComplexTensor::matrix(std::size_t rows, std::size_t cols) const {
  if (rows * cols != data_.size()) throw ShapeError("ComplexTensor::matrix: size mismatch");
  return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Matrix ComplexTensor::to_matrix() const {
  if (rank() != 2) throw ShapeError("to_matrix: tensor is not rank 2");
  return matrix(shape_[0], shape_[1]);
}

ComplexTensor& ComplexTensor::operator*=(cplx s) {
  for (auto& v : data_) v *= s;
  return *this;
}

ComplexTensor contract(const ComplexTensor& a, const ComplexTensor& b, std::span<const AxisPair> pairs) {
  std::vector<bool> a_paired(a.rank(), false), b_paired(b.rank(), false);
  for (const auto& [ia, ib] : pairs) {
    if (ia >= a.rank() || ib >= b.rank()) throw std::out_of_range("contract: axis index out of range");
    if (a_paired[ia] || b_paired[ib]) throw ShapeError("contract: axis paired twice");
    if (a.extent(ia) != b.extent(ib))
      throw ShapeError("contract: extent mismatch on paired axes (" + std::to_string(a.extent(ia)) +
                       " vs " + std::to_string(b.extent(ib)) + ")");
    a_paired[ia] = b_paired[ib] = true;
  }

  std::vector<std::size_t> a_order, b_order, out_shape;
  std::size_t a_free = 1, b_free = 1, inner = 1;
  for (std::size_t k = 0; k < a.rank(); ++k)
    if (!a_paired[k]) {
      a_order.push_back(k);
      out_shape.push_back(a.extent(k));
      a_free *= a.extent(k);
    }
  for (const auto& [ia, ib] : pairs) {
    a_order.push_back(ia);
    b_order.push_back(ib);
    inner *= a.extent(ia);
  }
  for (std::size_t k = 0; k < b.rank(); ++k)
    if (!b_paired[k]) {
      b_order.push_back(k);
      out_shape.push_back(b.extent(k));
      b_free *= b.extent(k);
    }

  const ComplexTensor ap = a.permute(a_order);
  const ComplexTensor bp = b.permute(b_order);
  Matrix prod = ap.matrix(a_free, inner) * bp.matrix(inner, b_free);
  if (out_shape.empty()) out_shape.push_back(1);
  return ComplexTensor(std::move(out_shape), std::vector<cplx>(prod.data(), prod.data() + prod.size()));
}

TruncatedSVD svd_truncated(const Matrix& m, std::size_t max_rank, double cutoff) {
  if (max_rank < 1) throw std::invalid_argument("svd_truncated: max_rank must be >= 1");
  if (!(cutoff >= 0.0)) throw std::invalid_argument("svd_truncated: cutoff must be >= 0");
  check_finite(m, "svd_truncated");

  const auto rows = static_cast<lapack_int>(m.rows());
  const auto cols = static_cast<lapack_int>(m.cols());
  const lapack_int k = std::min(rows, cols);
  Matrix work = m;
  Matrix u(rows, k), vt(k, cols);
  RealVector s(k);
  auto as_lapack = [](cplx* p) { return reinterpret_cast<lapack_complex_double*>(p); };

  lapack_int info = LAPACKE_zgesdd(LAPACK_ROW_MAJOR, 'S', rows, cols, as_lapack(work.data()), cols, s.data(),
                                   as_lapack(u.data()), k, as_lapack(vt.data()), cols);
  if (info > 0) {
    // Divide-and-conquer failed; retry with the QR-iteration driver.
    work = m;
    std::vector<double> superb(static_cast<std::size_t>(std::max<lapack_int>(k - 1, 1)));
    info = LAPACKE_zgesvd(LAPACK_ROW_MAJOR, 'S', 'S', rows, cols, as_lapack(work.data()), cols, s.data(),
                          as_lapack(u.data()), k, as_lapack(vt.data()), cols, superb.data());
  }
  if (info > 0) throw ConvergenceError("svd_truncated: LAPACK SVD did not converge");
  if (info < 0) throw std::logic_error("svd_truncated: invalid LAPACK argument " + std::to_string(-info));

  const double total = s.squaredNorm();
  std::size_t cutoff_rank = 0;
  if (total > 0.0) {
    for (lapack_int j = 0; j < k; ++j)
      if (s[j] * s[j] / total > cutoff) ++cutoff_rank;
  }
  cutoff_rank = std::max<std::size_t>(cutoff_rank, 1);
  const std::size_t keep = std::min(max_rank, cutoff_rank);

  TruncatedSVD out;
  out.full_rank = static_cast<std::size_t>(k);
  out.cutoff_rank = cutoff_rank;
  out.discarded_weight = 0.0;
  for (lapack_int j = static_cast<lapack_int>(keep); j < k; ++j) out.discarded_weight += s[j] * s[j];
  const auto kk = static_cast<Eigen::Index>(keep);
  out.left = u.leftCols(kk);
  out.values = s.head(kk);
  out.right = vt.topRows(kk);
  return out;
}

TruncatedSVD svd_truncated(const ComplexTensor& m, std::size_t max_rank, double cutoff) {
  if (m.rank() != 2) throw ShapeError("svd_truncated: input must be rank 2");
  return svd_truncated(m.to_matrix(), max_rank, cutoff);
}

bool is_hermitian(const Matrix& m, double tol) {
  return m.rows() == m.cols() && (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const Matrix id = Matrix::Identity(m.rows(), m.cols());
  return (m.adjoint() * m - id).cwiseAbs().maxCoeff() <= tol;
}

Matrix hermitian_exponential(const Matrix& h, double scale) {
  if (h.rows() != h.cols()) throw ShapeError("hermitian_exponential: matrix is not square");
  check_finite(h, "hermitian_exponential");
  if (!is_hermitian(h, 1e-10)) throw std::invalid_argument("hermitian_exponential: matrix is not Hermitian");
  const Matrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw ConvergenceError("hermitian_exponential: eigensolver failed");
  const Matrix& w = eig.eigenvectors();
  Vector phases(w.cols());
  for (Eigen::Index j = 0; j < w.cols(); ++j) phases[j] = std::polar(1.0, scale * eig.eigenvalues()[j]);
  return w * phases.asDiagonal() * w.adjoint();
}

ComplexTensor hermitian_exponential(const ComplexTensor& h, double scale) {
  if (h.rank() != 2) throw ShapeError("hermitian_exponential: input must be rank 2");
  return ComplexTensor::from_matrix(hermitian_exponential(h.to_matrix(), scale));
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace pauli {

Matrix identity() { return Matrix::Identity(2, 2); }

Matrix x() {
  Matrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

Matrix y() {
  Matrix m(2, 2);
  m << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
  return m;
}

Matrix z() {
  Matrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

Matrix raising() {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = 1.0;
  return m;
}

Matrix lowering() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

Matrix swap() {
  Matrix m = Matrix::Zero(4, 4);
  m(0, 0) = m(1, 2) = m(2, 1) = m(3, 3) = 1.0;
  return m;
}

}  // namespace pauli

}  // namespace qdc
