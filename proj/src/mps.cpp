#include "qdc/mps.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <string>

#include "qdc/errors.hpp"

namespace qdc {

namespace {

constexpr double kIsometryTol = 1e-10;

std::size_t left_dim(const ComplexTensor& t) { return t.extent(0); }
std::size_t right_dim(const ComplexTensor& t) { return t.extent(2); }

ComplexTensor site_from_matrix(const Matrix& m, std::size_t dl, std::size_t dr) {
  return ComplexTensor({dl, 2, dr}, std::vector<cplx>(m.data(), m.data() + m.size()));
}

void warn_non_unitary_once() {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    std::cerr << "qdc: warning: applying a non-unitary two-site gate (further warnings suppressed)\n";
}

bool left_isometric(const ComplexTensor& t) {
  const auto a = t.matrix(left_dim(t) * 2, right_dim(t));
  const Matrix g = a.adjoint() * a;
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() <= kIsometryTol;
}

bool right_isometric(const ComplexTensor& t) {
  const auto a = t.matrix(left_dim(t), 2 * right_dim(t));
  const Matrix g = a * a.adjoint();
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff() <= kIsometryTol;
}

}  // namespace

Mps::Mps(std::vector<ComplexTensor> sites) : sites_(std::move(sites)) { validate(); }

Mps::Mps(std::vector<ComplexTensor> sites, std::optional<std::size_t> center, double discarded_weight)
    : sites_(std::move(sites)), center_(center), discarded_(discarded_weight) {
  validate();
  if (center_) {
    if (*center_ >= sites_.size()) throw std::out_of_range("Mps: center out of range");
    for (std::size_t p = 0; p < *center_; ++p)
      if (!left_isometric(sites_[p])) throw ShapeError("Mps: tensor left of center is not left-isometric");
    for (std::size_t p = *center_ + 1; p < sites_.size(); ++p)
      if (!right_isometric(sites_[p])) throw ShapeError("Mps: tensor right of center is not right-isometric");
    normalized_ = std::abs(norm() - 1.0) <= 1e-10;
  }
}

void Mps::validate() const {
  if (sites_.empty()) throw ShapeError("Mps: at least one site required");
  for (std::size_t p = 0; p < sites_.size(); ++p) {
    const auto& t = sites_[p];
    if (t.rank() != 3 || t.extent(1) != 2) throw ShapeError("Mps: site tensors must be (left, 2, right)");
    if (p > 0 && left_dim(t) != right_dim(sites_[p - 1]))
      throw ShapeError("Mps: bond mismatch between sites " + std::to_string(p - 1) + " and " + std::to_string(p));
  }
  if (left_dim(sites_.front()) != 1 || right_dim(sites_.back()) != 1)
    throw ShapeError("Mps: boundary bonds must have extent 1");
}

Mps Mps::product_state(std::span<const std::array<cplx, 2>> site_vectors) {
  if (site_vectors.empty()) throw ShapeError("product_state: at least one site required");
  std::vector<ComplexTensor> sites;
  sites.reserve(site_vectors.size());
  for (const auto& v : site_vectors) {
    const double nrm = std::sqrt(std::norm(v[0]) + std::norm(v[1]));
    if (!(nrm > 0.0)) throw std::invalid_argument("product_state: zero site vector");
    sites.emplace_back(std::vector<std::size_t>{1, 2, 1}, std::vector<cplx>{v[0] / nrm, v[1] / nrm});
  }
  Mps out(std::move(sites));
  out.center_ = 0;
  out.normalized_ = true;
  return out;
}

Mps Mps::basis_state(std::span<const int> bits) {
  std::vector<std::array<cplx, 2>> v;
  v.reserve(bits.size());
  for (int b : bits) {
    if (b != 0 && b != 1) throw std::invalid_argument("basis_state: bits must be 0 or 1");
    v.push_back(b == 0 ? std::array<cplx, 2>{1.0, 0.0} : std::array<cplx, 2>{0.0, 1.0});
  }
  return product_state(v);
}

Mps Mps::basis_state(std::string_view bits) {
  std::vector<int> b;
  for (char c : bits) {
    if (c != '0' && c != '1') throw std::invalid_argument("basis_state: expected a string of 0/1");
    b.push_back(c - '0');
  }
  return basis_state(b);
}

Mps Mps::from_dense(const Vector& amplitudes, std::size_t n, const TruncationSettings& trunc) {
  if (n == 0 || n > 30 || static_cast<std::size_t>(amplitudes.size()) != (std::size_t{1} << n))
    throw ShapeError("from_dense: amplitude count must be 2^n");
  std::vector<ComplexTensor> sites;
  Matrix rest = amplitudes.transpose();  // 1 x 2^n
  std::size_t dl = 1;
  double discarded = 0.0;
  for (std::size_t p = 0; p + 1 < n; ++p) {
    const std::size_t cols = static_cast<std::size_t>(rest.size()) / (dl * 2);
    Matrix m = Eigen::Map<const Matrix>(rest.data(), static_cast<Eigen::Index>(dl * 2), static_cast<Eigen::Index>(cols));
    const double total = m.squaredNorm();
    auto svd = svd_truncated(m, trunc.max_bond, trunc.cutoff);
    if (total > 0.0) discarded += svd.discarded_weight / total;
    const std::size_t k = static_cast<std::size_t>(svd.values.size());
    sites.push_back(site_from_matrix(svd.left, dl, k));
    rest = svd.values.cast<cplx>().asDiagonal() * svd.right;
    dl = k;
  }
  sites.push_back(site_from_matrix(Eigen::Map<const Matrix>(rest.data(), static_cast<Eigen::Index>(dl * 2), 1), dl, 1));
  Mps out(std::move(sites));
  out.center_ = n - 1;
  out.discarded_ = discarded;
  out.normalized_ = std::abs(out.norm() - 1.0) <= 1e-10;
  return out;
}

const ComplexTensor& Mps::site(std::size_t i) const {
  if (i >= sites_.size()) throw std::out_of_range("Mps::site: index out of range");
  return sites_[i];
}

std::size_t Mps::bond_dimension(std::size_t bond) const {
  if (bond + 1 >= sites_.size()) throw std::out_of_range("Mps::bond_dimension: bond out of range");
  return right_dim(sites_[bond]);
}

std::vector<std::size_t> Mps::bond_dimensions() const {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b + 1 < sites_.size(); ++b) out.push_back(right_dim(sites_[b]));
  return out;
}

std::size_t Mps::max_bond_dimension() const {
  std::size_t m = 1;
  for (std::size_t b = 0; b + 1 < sites_.size(); ++b) m = std::max(m, right_dim(sites_[b]));
  return m;
}

void Mps::shift_center_right(std::size_t p) {
  // Site p becomes left-isometric; R is absorbed into p+1.
  auto& a = sites_[p];
  auto& b = sites_[p + 1];
  const std::size_t dl = left_dim(a), dr = right_dim(a), dr2 = right_dim(b);
  const auto rows = static_cast<Eigen::Index>(dl * 2);
  const auto cols = static_cast<Eigen::Index>(dr);
  Eigen::HouseholderQR<Matrix> qr(a.matrix(dl * 2, dr));
  const Eigen::Index k = std::min(rows, cols);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix nb = r * b.matrix(dr, 2 * dr2);
  a = site_from_matrix(q, dl, static_cast<std::size_t>(k));
  b = ComplexTensor({static_cast<std::size_t>(k), 2, dr2}, std::vector<cplx>(nb.data(), nb.data() + nb.size()));
}

void Mps::shift_center_left(std::size_t p) {
  // Site p becomes right-isometric; L is absorbed into p-1.
  auto& a = sites_[p];
  auto& b = sites_[p - 1];
  const std::size_t dl = left_dim(a), dr = right_dim(a), dl2 = left_dim(b);
  const auto rows = static_cast<Eigen::Index>(2 * dr);
  const auto cols = static_cast<Eigen::Index>(dl);
  Eigen::HouseholderQR<Matrix> qr(a.matrix(dl, 2 * dr).adjoint());
  const Eigen::Index k = std::min(rows, cols);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, k);
  Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Matrix qa = q.adjoint();                    // k x 2dr
  Matrix nb = b.matrix(dl2 * 2, dl) * r.adjoint();  // (dl2*2) x k
  a = ComplexTensor({static_cast<std::size_t>(k), 2, dr}, std::vector<cplx>(qa.data(), qa.data() + qa.size()));
  b = site_from_matrix(nb, dl2, static_cast<std::size_t>(k));
}

void Mps::canonicalize(std::size_t center) {
  if (center >= sites_.size()) throw std::out_of_range("Mps::canonicalize: center out of range");
  for (std::size_t p = 0; p < center; ++p) shift_center_right(p);
  for (std::size_t p = sites_.size() - 1; p > center; --p) shift_center_left(p);
  center_ = center;
}

std::pair<std::size_t, std::size_t> Mps::move_center(std::size_t target) {
  if (target >= sites_.size()) throw std::out_of_range("Mps::move_center: target out of range");
  if (!center_) {
    canonicalize(target);
    return {0, sites_.size() - 1};
  }
  const std::size_t from = *center_;
  if (from < target) {
    for (std::size_t p = from; p < target; ++p) shift_center_right(p);
  } else {
    for (std::size_t p = from; p > target; --p) shift_center_left(p);
  }
  center_ = target;
  return {std::min(from, target), std::max(from, target)};
}

double Mps::norm() const {
  if (center_) {
    const auto& c = sites_[*center_];
    return c.matrix(1, c.size()).norm();
  }
  return std::sqrt(std::max(0.0, overlap(*this, *this).real()));
}

void Mps::normalize() {
  const double nrm = norm();
  if (!(nrm > 0.0)) throw NumericalError("Mps::normalize: zero norm");
  sites_[center_.value_or(0)] *= cplx{1.0 / nrm, 0.0};
  normalized_ = true;
}

GateReport Mps::apply_two_site_gate(std::size_t i, const Matrix& gate, const TruncationSettings& trunc,
                                    CenterSide side) {
  if (i + 1 >= sites_.size()) throw std::out_of_range("apply_two_site_gate: site index out of range");
  if (gate.rows() != 4 || gate.cols() != 4) throw ShapeError("apply_two_site_gate: gate must be 4x4");
  if (!is_unitary(gate, 1e-10)) warn_non_unitary_once();

  GateReport report;
  report.first_changed = i;
  report.last_changed = i + 1;
  if (!center_ || (*center_ != i && *center_ != i + 1)) {
    const std::size_t target = (!center_ || *center_ < i) ? i : i + 1;
    const auto [lo, hi] = move_center(target);
    report.first_changed = std::min(report.first_changed, lo);
    report.last_changed = std::max(report.last_changed, hi);
  }

  auto& a = sites_[i];
  auto& b = sites_[i + 1];
  const std::size_t dl = left_dim(a), dm = right_dim(a), dr = right_dim(b);
  Matrix theta = a.matrix(dl * 2, dm) * b.matrix(dm, 2 * dr);  // (dl*2) x (2*dr) == [l][s1][s2][r]
  {
    const auto block_cols = static_cast<Eigen::Index>(dr);
    Matrix tmp(4, block_cols);
    for (std::size_t l = 0; l < dl; ++l) {
      MatrixMap blk(theta.data() + l * 4 * dr, 4, block_cols);
      tmp.noalias() = gate * blk;
      blk = tmp;
    }
  }

  const double total = theta.squaredNorm();
  if (!(total > 0.0)) throw NumericalError("apply_two_site_gate: state has zero norm");
  auto svd = svd_truncated(theta, trunc.max_bond, trunc.cutoff);
  if (trunc.hard_cap > 0 && svd.cutoff_rank > trunc.hard_cap)
    throw BondCapError("apply_two_site_gate: bond " + std::to_string(i) + " needs " +
                       std::to_string(svd.cutoff_rank) + " states, hard cap is " + std::to_string(trunc.hard_cap));
  const std::size_t k = static_cast<std::size_t>(svd.values.size());
  const double kept = svd.values.squaredNorm();
  const RealVector s = svd.values / std::sqrt(kept);

  report.discarded_weight = svd.discarded_weight / total;
  report.bond = k;
  discarded_ += report.discarded_weight;

  if (side == CenterSide::right) {
    a = site_from_matrix(svd.left, dl, k);
    Matrix sv = s.cast<cplx>().asDiagonal() * svd.right;
    b = ComplexTensor({k, 2, dr}, std::vector<cplx>(sv.data(), sv.data() + sv.size()));
    center_ = i + 1;
  } else {
    Matrix us = svd.left * s.cast<cplx>().asDiagonal();
    a = site_from_matrix(us, dl, k);
    b = ComplexTensor({k, 2, dr}, std::vector<cplx>(svd.right.data(), svd.right.data() + svd.right.size()));
    center_ = i;
  }
  normalized_ = true;
  return report;
}

void Mps::apply_single_site_gate(std::size_t i, const Matrix& gate) {
  if (i >= sites_.size()) throw std::out_of_range("apply_single_site_gate: site index out of range");
  if (gate.rows() != 2 || gate.cols() != 2) throw ShapeError("apply_single_site_gate: gate must be 2x2");
  auto& a = sites_[i];
  const std::size_t dl = left_dim(a), dr = right_dim(a);
  for (std::size_t l = 0; l < dl; ++l) {
    MatrixMap blk(a.data().data() + l * 2 * dr, 2, static_cast<Eigen::Index>(dr));
    Matrix tmp = gate * blk;
    blk = tmp;
  }
  if (!is_unitary(gate, 1e-10)) {
    center_.reset();
    normalized_ = false;
  }
}

Vector Mps::to_dense() const {
  if (sites_.size() > 26) throw ShapeError("to_dense: too many sites");
  Matrix acc = Matrix::Ones(1, 1);  // (2^p) x D
  for (const auto& t : sites_) {
    const std::size_t dl = left_dim(t), dr = right_dim(t);
    Matrix next = acc * t.matrix(dl, 2 * dr);  // (2^p) x (2*dr), row-major => [(2^p)*2] x dr
    acc = Eigen::Map<const Matrix>(next.data(), next.rows() * 2, static_cast<Eigen::Index>(dr));
  }
  return acc.col(0);
}

GateReport apply_two_site_gate(Mps& state, std::size_t i, const Matrix& gate, const TruncationSettings& trunc) {
  return state.apply_two_site_gate(i, gate, trunc);
}

GateReport apply_gate_long_range(Mps& state, std::size_t i, std::size_t j, const Matrix& gate,
                                 const TruncationSettings& trunc) {
  if (!(i < j)) throw std::invalid_argument("apply_gate_long_range: requires i < j");
  if (j >= state.size()) throw std::out_of_range("apply_gate_long_range: site index out of range");
  if (j == i + 1) return state.apply_two_site_gate(i, gate, trunc);

  static const Matrix swap = pauli::swap();
  GateReport total;
  total.first_changed = i;
  total.last_changed = j;
  auto accumulate = [&](const GateReport& r) {
    total.discarded_weight += r.discarded_weight;
    total.first_changed = std::min(total.first_changed, r.first_changed);
    total.last_changed = std::max(total.last_changed, r.last_changed);
  };
  for (std::size_t p = j - 1; p > i; --p) accumulate(state.apply_two_site_gate(p, swap, trunc, CenterSide::left));
  const auto g = state.apply_two_site_gate(i, gate, trunc, CenterSide::right);
  accumulate(g);
  total.bond = g.bond;
  for (std::size_t p = i + 1; p < j; ++p) accumulate(state.apply_two_site_gate(p, swap, trunc, CenterSide::right));
  return total;
}

cplx overlap(const Mps& a, const Mps& b) {
  if (a.size() != b.size()) throw ShapeError("overlap: states have different lengths");
  Matrix env = Matrix::Ones(1, 1);  // (Da x Db)
  for (std::size_t p = 0; p < a.size(); ++p) {
    const auto& ta = a.site(p);
    const auto& tb = b.site(p);
    const std::size_t da = ta.extent(0), da2 = ta.extent(2), db = tb.extent(0), db2 = tb.extent(2);
    Matrix t = env * tb.matrix(db, 2 * db2);  // Da x (2 Db')
    Eigen::Map<const Matrix> tm(t.data(), static_cast<Eigen::Index>(da * 2), static_cast<Eigen::Index>(db2));
    env = ta.matrix(da * 2, da2).adjoint() * tm;
  }
  return env(0, 0);
}

cplx operator_string_expectation(const Mps& state, std::span<const SiteOperator> ops) {
  const std::size_t n = state.size();
  std::vector<const Matrix*> at(n, nullptr);
  std::size_t lo = n, hi = 0;
  for (const auto& o : ops) {
    if (o.site >= n) throw std::out_of_range("expectation: site out of range");
    if (o.op == nullptr || o.op->rows() != 2 || o.op->cols() != 2)
      throw ShapeError("expectation: operators must be 2x2");
    if (at[o.site] != nullptr) throw std::invalid_argument("expectation: operators must act on distinct sites");
    at[o.site] = o.op;
    lo = std::min(lo, o.site);
    hi = std::max(hi, o.site);
  }
  std::size_t start = 0, stop = n - 1;
  if (state.center()) {
    const std::size_t c = *state.center();
    start = ops.empty() ? c : std::min(lo, c);
    stop = ops.empty() ? c : std::max(hi, c);
  }

  auto sandwich = [&](bool with_ops) {
    const std::size_t d0 = state.site(start).extent(0);
    Matrix env = Matrix::Identity(static_cast<Eigen::Index>(d0), static_cast<Eigen::Index>(d0));
    for (std::size_t p = start; p <= stop; ++p) {
      const auto& t = state.site(p);
      const std::size_t dl = t.extent(0), dr = t.extent(2);
      Matrix ket = t.matrix(dl, 2 * dr);
      if (with_ops && at[p] != nullptr) {
        const Matrix& o = *at[p];
        Matrix k2(dl, 2 * dr);
        k2.leftCols(static_cast<Eigen::Index>(dr)) =
            o(0, 0) * ket.leftCols(static_cast<Eigen::Index>(dr)) + o(0, 1) * ket.rightCols(static_cast<Eigen::Index>(dr));
        k2.rightCols(static_cast<Eigen::Index>(dr)) =
            o(1, 0) * ket.leftCols(static_cast<Eigen::Index>(dr)) + o(1, 1) * ket.rightCols(static_cast<Eigen::Index>(dr));
        ket = std::move(k2);
      }
      Matrix tmp = env * ket;  // dl x 2dr
      Eigen::Map<const Matrix> tm(tmp.data(), static_cast<Eigen::Index>(dl * 2), static_cast<Eigen::Index>(dr));
      env = t.matrix(dl * 2, dr).adjoint() * tm;
    }
    return env.trace();
  };
  const cplx num = sandwich(true);
  const cplx den = sandwich(false);
  if (!(std::abs(den) > 0.0)) throw NumericalError("expectation: zero-norm state");
  return num / den;
}

cplx local_expectation(const Mps& state, std::size_t site, const Matrix& op) {
  const SiteOperator ops[] = {{site, &op}};
  return operator_string_expectation(state, ops);
}

cplx two_point_correlator(const Mps& state, std::size_t i, std::size_t j, const Matrix& op_i, const Matrix& op_j) {
  if (i >= state.size() || j >= state.size()) throw std::out_of_range("two_point_correlator: index out of range");
  if (i == j) throw std::invalid_argument("two_point_correlator: requires i != j");
  const SiteOperator ops[] = {{i, &op_i}, {j, &op_j}};
  return operator_string_expectation(state, ops);
}

double total_z(const Mps& state) {
  static const Matrix z = pauli::z();
  double sum = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) sum += local_expectation(state, i, z).real();
  return sum;
}

}  // namespace qdc
