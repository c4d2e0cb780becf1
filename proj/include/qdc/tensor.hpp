#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qdc {

using cplx = std::complex<double>;
using Matrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;
using RealVector = Eigen::VectorXd;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

/// Dense complex tensor with row-major (last index fastest) linearization.
class ComplexTensor {
 public:
  ComplexTensor() = default;
  explicit ComplexTensor(std::vector<std::size_t> shape);
  ComplexTensor(std::vector<std::size_t> shape, std::vector<cplx> data);

  static ComplexTensor from_matrix(const Matrix& m);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t axis) const;

  std::span<const cplx> data() const { return data_; }
  std::span<cplx> data() { return data_; }

  cplx& at(std::span<const std::size_t> index);
  const cplx& at(std::span<const std::size_t> index) const;
  cplx& at(std::initializer_list<std::size_t> index) { return at(std::span(index.begin(), index.size())); }
  const cplx& at(std::initializer_list<std::size_t> index) const {
    return at(std::span(index.begin(), index.size()));
  }

  // Same entries, new extents (product must match).
  ComplexTensor reshape(std::vector<std::size_t> shape) const;
  // Result axis k is input axis axes[k].
  ComplexTensor permute(std::span<const std::size_t> axes) const;

  // Row-major matrix views of the underlying storage; rows * cols must equal size().
  MatrixMap matrix(std::size_t rows, std::size_t cols);
  ConstMatrixMap matrix(std::size_t rows, std::size_t cols) const;
  Matrix to_matrix() const;

  ComplexTensor& operator*=(cplx s);
  friend ComplexTensor operator*(cplx s, ComplexTensor t) { return t *= s; }

 private:
  std::size_t offset(std::span<const std::size_t> index) const;

  std::vector<std::size_t> shape_;
  std::vector<cplx> data_;
};

using AxisPair = std::pair<std::size_t, std::size_t>;

/// Sum over paired axes (axis of a, axis of b). Result axes are the free axes of a
/// followed by the free axes of b, each in original order.
ComplexTensor contract(const ComplexTensor& a, const ComplexTensor& b, std::span<const AxisPair> pairs);

struct TruncatedSVD {
  Matrix left;              // rows x k, orthonormal columns
  RealVector values;        // k, descending
  Matrix right;             // k x cols, orthonormal rows (V^dagger)
  double discarded_weight;  // sum of squared dropped singular values
  std::size_t full_rank;    // number of singular values before truncation
  std::size_t cutoff_rank;  // rank the cutoff alone would keep
};

/// Keeps min(max_rank, #{s : s^2 / sum s^2 > cutoff}) values, never fewer than one.
TruncatedSVD svd_truncated(const Matrix& m, std::size_t max_rank, double cutoff);
TruncatedSVD svd_truncated(const ComplexTensor& m, std::size_t max_rank, double cutoff);

/// exp(i * scale * h) for Hermitian h, via eigendecomposition.
Matrix hermitian_exponential(const Matrix& h, double scale);
ComplexTensor hermitian_exponential(const ComplexTensor& h, double scale);

bool is_hermitian(const Matrix& m, double tol);
bool is_unitary(const Matrix& m, double tol);

Matrix kron(const Matrix& a, const Matrix& b);

namespace pauli {
Matrix identity();
Matrix x();
Matrix y();
Matrix z();
// |1><0| and |0><1| with |1> the occupied / excited state.
Matrix raising();
Matrix lowering();
Matrix swap();
}  // namespace pauli

}  // namespace qdc
