#include "qdc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <optional>

#include <Eigen/Eigenvalues>

#include "qdc/errors.hpp"
#include "qdc/rng.hpp"

namespace qdc {

double TrainingDataset::max_discarded_weight() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.discarded_weight);
  return m;
}

namespace {

// Runs body(i) for i in [0, count) across threads; rethrows the first failure
// (lowest index) after the loop.
template <class F>
void parallel_for(std::size_t count, F&& body) {
  std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic, 1)
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

// ---- nearest-neighbour expansion of a circuit ---------------------------------

enum class OpKind { trainable, frozen, local };

struct Op {
  OpKind kind = OpKind::frozen;
  std::size_t site = 0;  // acts on (site, site + 1), or on site for local ops
  std::size_t block = 0;
  bool flipped = false;
  std::size_t matrix = 0;  // index into Expanded::matrices
  CenterSide side = CenterSide::right;
};

struct Expanded {
  std::vector<Op> ops;
  std::vector<std::size_t> layer_start;  // ops of layer l are [layer_start[l], layer_start[l + 1])
  std::vector<Matrix> matrices;
  std::vector<Matrix> adjoints;
};

constexpr std::size_t kSwapIndex = 0;

std::size_t block_index(std::size_t block, bool flipped) { return 1 + 2 * block + (flipped ? 1 : 0); }

Expanded expand(const Circuit& c, std::span<const double> theta) {
  if (theta.size() != c.num_params())
    throw ShapeError("circuit: expected " + std::to_string(c.num_params()) + " parameters, got " +
                     std::to_string(theta.size()));
  static const Matrix swap = pauli::swap();
  Expanded e;
  e.matrices.push_back(swap);
  for (std::size_t b = 0; b < c.num_blocks; ++b) {
    const Matrix g = su4_from_params(theta.subspan(b * kSu4Params, kSu4Params));
    e.matrices.push_back(g);
    e.matrices.push_back(swap * g * swap);
  }
  std::map<std::pair<std::size_t, bool>, std::size_t> frozen;
  auto frozen_index = [&](std::size_t f, bool flip) {
    auto [it, inserted] = frozen.try_emplace({f, flip}, e.matrices.size());
    if (inserted) e.matrices.push_back(flip ? Matrix(swap * c.fixed[f] * swap) : c.fixed[f]);
    return it->second;
  };
  for (const auto& layer : c.layers) {
    e.layer_start.push_back(e.ops.size());
    for (const auto& g : layer.gates) {
      if (!g.two_site()) {
        Op op;
        op.kind = OpKind::local;
        op.site = g.first;
        op.matrix = frozen_index(*g.fixed, false);
        e.ops.push_back(op);
        continue;
      }
      const std::size_t i = g.lo(), j = g.hi();
      for (std::size_t p = j - 1; p > i; --p) e.ops.push_back({OpKind::frozen, p, 0, false, kSwapIndex, CenterSide::left});
      Op op;
      op.site = i;
      op.flipped = g.flipped();
      if (g.block) {
        op.kind = OpKind::trainable;
        op.block = *g.block;
        op.matrix = block_index(*g.block, g.flipped());
      } else {
        op.kind = OpKind::frozen;
        op.matrix = frozen_index(*g.fixed, g.flipped());
      }
      e.ops.push_back(op);
      for (std::size_t p = i + 1; p < j; ++p) e.ops.push_back({OpKind::frozen, p, 0, false, kSwapIndex, CenterSide::right});
    }
  }
  e.layer_start.push_back(e.ops.size());
  e.adjoints.reserve(e.matrices.size());
  for (const auto& m : e.matrices) e.adjoints.push_back(m.adjoint());
  return e;
}

GateReport apply_op(Mps& s, const Op& op, const Matrix& m, const TruncationSettings& trunc) {
  if (op.kind == OpKind::local) {
    s.apply_single_site_gate(op.site, m);
    return GateReport{0.0, 1, op.site, op.site};
  }
  return s.apply_two_site_gate(op.site, m, trunc, op.side);
}

// ---- SU(4) gradient via the spectral (divided-difference) formula --------------

struct BlockSpectrum {
  Matrix w;                                 // eigenvectors of H = sum theta_k P_k
  Matrix d;                                 // divided differences of exp(-i x)
  std::array<Matrix, kSu4Params> rotated;   // W^dagger P_k W
};

BlockSpectrum block_spectrum(std::span<const double> theta) {
  const auto& gens = su4_generators();
  Matrix h = Matrix::Zero(4, 4);
  for (std::size_t k = 0; k < kSu4Params; ++k) h += theta[k] * gens[k];
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  BlockSpectrum s;
  s.w = es.eigenvectors();
  const auto& lam = es.eigenvalues();
  s.d = Matrix(4, 4);
  for (Eigen::Index a = 0; a < 4; ++a)
    for (Eigen::Index b = 0; b < 4; ++b) {
      const double mu = 0.5 * (lam[a] + lam[b]);
      const double delta = 0.5 * (lam[a] - lam[b]);
      const double sinc = std::abs(delta) < 1e-8 ? 1.0 - delta * delta / 6.0 : std::sin(delta) / delta;
      s.d(a, b) = cplx{0.0, -1.0} * std::polar(1.0, -mu) * sinc;
    }
  for (std::size_t k = 0; k < kSu4Params; ++k) s.rotated[k] = s.w.adjoint() * gens[k] * s.w;
  return s;
}

// Adds Tr(dG/dtheta_k E) for k = 0..14.
void accumulate_block_derivative(const BlockSpectrum& s, const Matrix& env, cplx* out) {
  const Matrix e = s.w.adjoint() * env * s.w;
  for (std::size_t k = 0; k < kSu4Params; ++k) {
    cplx acc = 0.0;
    const Matrix& p = s.rotated[k];
    for (Eigen::Index a = 0; a < 4; ++a)
      for (Eigen::Index b = 0; b < 4; ++b) acc += s.d(a, b) * p(a, b) * e(b, a);
    out[k] += acc;
  }
}

// ---- cached transfer environments between <bra| and |ket> ---------------------

class Environments {
 public:
  explicit Environments(std::size_t n) : left_(n + 1), right_(n + 1), n_(n), left_valid_(0), right_valid_(n) {
    left_[0] = Matrix::Ones(1, 1);
    right_[n] = Matrix::Ones(1, 1);
  }

  void invalidate(std::size_t lo, std::size_t hi) {
    left_valid_ = std::min(left_valid_, lo);
    right_valid_ = std::max(right_valid_, hi + 1);
  }

  // E[c, a] = sum over everything else of ket[c, ...] conj(bra[a, ...]) on sites (i, i+1).
  Matrix two_site(const Mps& bra, const Mps& ket, std::size_t i) {
    const Matrix& l = left(bra, ket, i);
    const Matrix& r = right(bra, ket, i + 2);
    const auto& k1 = ket.site(i);
    const auto& k2 = ket.site(i + 1);
    const auto& b1 = bra.site(i);
    const auto& b2 = bra.site(i + 1);
    const auto dlk = static_cast<Eigen::Index>(k1.extent(0));
    const auto drk = static_cast<Eigen::Index>(k2.extent(2));
    const auto dlb = static_cast<Eigen::Index>(b1.extent(0));
    const auto drb = static_cast<Eigen::Index>(b2.extent(2));
    // Theta tensors as (left, 4 * right) matrices.
    const Matrix tk = k1.matrix(k1.extent(0) * 2, k1.extent(2)) * k2.matrix(k2.extent(0), 2 * k2.extent(2));
    const Matrix tb = b1.matrix(b1.extent(0) * 2, b1.extent(2)) * b2.matrix(b2.extent(0), 2 * b2.extent(2));
    Eigen::Map<const Matrix> tkm(tk.data(), dlk, 4 * drk);
    Eigen::Map<const Matrix> tbm(tb.data(), dlb, 4 * drb);
    Matrix lt = l * tkm;  // dlb x (4 drk)
    Eigen::Map<const Matrix> ltm(lt.data(), dlb * 4, drk);
    Matrix x = ltm * r.transpose();  // (dlb 4) x drb
    Matrix env = Matrix::Zero(4, 4);
    for (Eigen::Index lb = 0; lb < dlb; ++lb) {
      Eigen::Map<const Matrix> xb(x.data() + lb * 4 * drb, 4, drb);
      Eigen::Map<const Matrix> bb(tbm.data() + lb * 4 * drb, 4, drb);
      env.noalias() += xb * bb.adjoint();
    }
    return env;
  }

 private:
  const Matrix& left(const Mps& bra, const Mps& ket, std::size_t j) {
    for (; left_valid_ < j; ++left_valid_) {
      const std::size_t p = left_valid_;
      const auto& b = bra.site(p);
      const auto& k = ket.site(p);
      Matrix t = left_[p] * k.matrix(k.extent(0), 2 * k.extent(2));
      Eigen::Map<const Matrix> tm(t.data(), static_cast<Eigen::Index>(b.extent(0) * 2),
                                  static_cast<Eigen::Index>(k.extent(2)));
      left_[p + 1] = b.matrix(b.extent(0) * 2, b.extent(2)).adjoint() * tm;
    }
    return left_[j];
  }

  const Matrix& right(const Mps& bra, const Mps& ket, std::size_t j) {
    for (; right_valid_ > j; --right_valid_) {
      const std::size_t p = right_valid_ - 1;
      const auto& b = bra.site(p);
      const auto& k = ket.site(p);
      Matrix t = k.matrix(k.extent(0) * 2, k.extent(2)) * right_[p + 1].transpose();  // (dk 2) x db'
      Eigen::Map<const Matrix> tm(t.data(), static_cast<Eigen::Index>(k.extent(0)),
                                  static_cast<Eigen::Index>(2 * b.extent(2)));
      right_[p] = b.matrix(b.extent(0), 2 * b.extent(2)).conjugate() * tm.transpose();
    }
    return right_[j];
  }

  std::vector<Matrix> left_, right_;
  std::size_t n_;
  std::size_t left_valid_, right_valid_;
};

struct SampleResult {
  cplx overlap = 0.0;
  double discarded = 0.0;
  std::vector<cplx> derivative;  // d overlap / d theta
};

void check_sizes(const TrainingDataset& data, const Circuit& c) {
  if (data.samples.empty()) throw std::invalid_argument("dataset is empty");
  for (const auto& s : data.samples)
    if (s.input.size() != c.n || s.target.size() != c.n)
      throw ShapeError("dataset states and circuit act on different numbers of sites");
}

// <target| ops[begin, end) |input> and, with spectra, its derivative in the
// parameters; only ops in the range are applied.
SampleResult evaluate_range(const Mps& input, const Mps& target, const Expanded& e, std::size_t begin,
                            std::size_t end, const Circuit& c, const std::vector<BlockSpectrum>* spectra,
                            const std::vector<bool>* mask, const TruncationSettings& trunc) {
  SampleResult r;
  Mps ket = input;
  for (std::size_t k = begin; k < end; ++k)
    r.discarded += apply_op(ket, e.ops[k], e.matrices[e.ops[k].matrix], trunc).discarded_weight;
  r.overlap = overlap(target, ket);
  if (spectra == nullptr) return r;

  r.derivative.assign(c.num_params(), cplx{0.0, 0.0});
  static const Matrix swap = pauli::swap();
  Mps bra = target;
  Environments env(c.n);
  for (std::size_t k = end; k-- > begin;) {
    const Op& op = e.ops[k];
    auto rk = apply_op(ket, op, e.adjoints[op.matrix], trunc);
    env.invalidate(rk.first_changed, rk.last_changed);
    if (op.kind == OpKind::trainable && (mask == nullptr || (*mask)[op.block])) {
      Matrix en = env.two_site(bra, ket, op.site);
      if (op.flipped) en = swap * en * swap;
      accumulate_block_derivative((*spectra)[op.block], en, r.derivative.data() + op.block * kSu4Params);
    }
    auto rb = apply_op(bra, op, e.adjoints[op.matrix], trunc);
    env.invalidate(rb.first_changed, rb.last_changed);
  }
  return r;
}

SampleResult evaluate_sample(const Sample& sample, const Expanded& e, const Circuit& c,
                             const std::vector<BlockSpectrum>* spectra, const std::vector<bool>* mask,
                             const TruncationSettings& trunc) {
  return evaluate_range(sample.input, sample.target, e, 0, e.ops.size(), c, spectra, mask, trunc);
}

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TrainingDataset generate_dataset(const DatasetMeta& meta, std::size_t count, double max_discarded) {
  TrainingDataset data;
  data.meta = meta;
  data.samples.resize(count);
  const std::size_t n = meta.spec.size();
  parallel_for(count, [&](std::size_t i) {
    Sample s;
    s.input = sample_state(meta.ensemble, n, i);
    s.target = s.input;
    const auto rep = tebd_evolve(s.target, meta.spec, meta.t, meta.dt, meta.trunc);
    s.discarded_weight = rep.discarded_weight;
    if (max_discarded > 0.0 && s.discarded_weight > max_discarded) {
      char buf[96];
      std::snprintf(buf, sizeof buf, " discarded weight %.3e exceeds the bound %.3e", s.discarded_weight,
                    max_discarded);
      throw NumericalError("generate_dataset: sample " + std::to_string(i) + buf);
    }
    data.samples[i] = std::move(s);
  });
  return data;
}

CostReport empirical_risk(const TrainingDataset& data, const Circuit& c, std::span<const double> theta,
                          const TruncationSettings& trunc) {
  check_sizes(data, c);
  const Expanded e = expand(c, theta);
  std::vector<SampleResult> results(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    results[i] = evaluate_sample(data.samples[i], e, c, nullptr, nullptr, trunc);
  });
  CostReport rep;
  double mean = 0.0;
  for (const auto& r : results) {
    const double f = std::norm(r.overlap);
    rep.fidelities.push_back(f);
    mean += f;
    rep.discarded_weight += r.discarded;
  }
  rep.cost = 1.0 - mean / static_cast<double>(data.size());
  if (!std::isfinite(rep.cost)) throw NumericalError("empirical_risk: non-finite cost");
  return rep;
}

double per_site_risk(double c, std::size_t n) {
  if (n == 0) throw std::invalid_argument("per_site_risk: n must be positive");
  if (c < 0.0 || c > 1.0) throw std::invalid_argument("per_site_risk: cost must lie in [0, 1]");
  return 1.0 - std::pow(1.0 - c, 1.0 / static_cast<double>(n));
}

double local_cost(const TrainingDataset& data, const Circuit& c, std::span<const double> theta,
                  const TruncationSettings& trunc) {
  check_sizes(data, c);
  std::vector<double> per_sample(data.size());
  parallel_for(data.size(), [&](std::size_t k) {
    const auto& s = data.samples[k];
    if (!s.input.is_product()) throw std::invalid_argument("local_cost: inputs must be product states");
    Mps chi = s.target;
    apply_circuit_adjoint(chi, c, theta, trunc);
    double acc = 0.0;
    for (std::size_t i = 0; i < c.n; ++i) {
      const auto& t = s.input.site(i);
      Vector v(2);
      v << t.data()[0], t.data()[1];
      v /= v.norm();
      const Matrix proj = v * v.adjoint();
      acc += local_expectation(chi, i, proj).real();
    }
    per_sample[k] = acc / static_cast<double>(c.n);
  });
  double mean = 0.0;
  for (double x : per_sample) mean += x;
  return 1.0 - mean / static_cast<double>(data.size());
}

namespace {

CostGradient reduce(const std::vector<SampleResult>& results, std::size_t num_params) {
  CostGradient out;
  out.gradient.assign(num_params, 0.0);
  const double ns = static_cast<double>(results.size());
  double mean = 0.0;
  for (const auto& r : results) {
    mean += std::norm(r.overlap);
    for (std::size_t p = 0; p < out.gradient.size(); ++p)
      out.gradient[p] -= 2.0 / ns * (std::conj(r.overlap) * r.derivative[p]).real();
  }
  out.cost = 1.0 - mean / ns;
  if (!std::isfinite(out.cost)) throw NumericalError("cost_and_gradient: non-finite cost");
  return out;
}

std::vector<BlockSpectrum> spectra_of(const Circuit& c, std::span<const double> theta) {
  std::vector<BlockSpectrum> spectra(c.num_blocks);
  for (std::size_t b = 0; b < c.num_blocks; ++b) spectra[b] = block_spectrum(theta.subspan(b * kSu4Params, kSu4Params));
  return spectra;
}

// Per-sample states on either side of one layer: the earlier layers applied to
// the input, and the later layers undone on the target. Valid while only that
// layer's parameters change.
struct LayerCache {
  std::size_t layer = 0;
  std::vector<Mps> kets, bras;
};

LayerCache build_layer_cache(const TrainingDataset& data, const Circuit& c, std::span<const double> theta,
                             std::size_t layer, const TruncationSettings& trunc) {
  const Expanded e = expand(c, theta);
  const std::size_t begin = e.layer_start[layer], end = e.layer_start[layer + 1];
  LayerCache cache;
  cache.layer = layer;
  cache.kets.resize(data.size());
  cache.bras.resize(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    Mps ket = data.samples[i].input;
    for (std::size_t k = 0; k < begin; ++k) apply_op(ket, e.ops[k], e.matrices[e.ops[k].matrix], trunc);
    Mps bra = data.samples[i].target;
    for (std::size_t k = e.ops.size(); k-- > end;) apply_op(bra, e.ops[k], e.adjoints[e.ops[k].matrix], trunc);
    cache.kets[i] = std::move(ket);
    cache.bras[i] = std::move(bra);
  });
  return cache;
}

CostGradient layer_cost_and_gradient(const LayerCache& cache, const Circuit& c, std::span<const double> theta,
                                     const std::vector<bool>& mask, const TruncationSettings& trunc) {
  const Expanded e = expand(c, theta);
  const auto spectra = spectra_of(c, theta);
  const std::size_t begin = e.layer_start[cache.layer], end = e.layer_start[cache.layer + 1];
  std::vector<SampleResult> results(cache.kets.size());
  parallel_for(cache.kets.size(), [&](std::size_t i) {
    results[i] = evaluate_range(cache.kets[i], cache.bras[i], e, begin, end, c, &spectra, &mask, trunc);
  });
  return reduce(results, c.num_params());
}

}  // namespace

CostGradient cost_and_gradient(const TrainingDataset& data, const Circuit& c, std::span<const double> theta,
                               const TruncationSettings& trunc, const std::vector<bool>* mask) {
  check_sizes(data, c);
  if (mask != nullptr && mask->size() != c.num_blocks) throw ShapeError("cost_and_gradient: mask size mismatch");
  const Expanded e = expand(c, theta);
  const auto spectra = spectra_of(c, theta);

  std::vector<SampleResult> results(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    results[i] = evaluate_sample(data.samples[i], e, c, &spectra, mask, trunc);
  });
  return reduce(results, c.num_params());
}

void adam_step(std::span<double> theta, AdamState& state, std::span<const double> grad, const AdamConfig& cfg) {
  if (grad.size() != theta.size()) throw ShapeError("adam_step: gradient and parameter lengths differ");
  for (double g : grad)
    if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient entry");
  if (state.m.empty()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
  }
  if (state.m.size() != theta.size()) throw ShapeError("adam_step: moment and parameter lengths differ");
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mh = state.m[i] / c1;
    const double vh = state.v[i] / c2;
    theta[i] -= cfg.rate * mh / (std::sqrt(vh) + cfg.epsilon);
  }
}

std::vector<std::size_t> sweep_order(std::size_t depth) {
  std::vector<std::size_t> order;
  for (std::size_t l = 0; l < depth; ++l) order.push_back(l);
  for (std::size_t l = depth >= 2 ? depth - 2 : 0; l >= 1 && l < depth; --l) order.push_back(l);
  return order;
}

namespace {

// Parameter indices owned by a set of blocks.
std::vector<std::size_t> block_params(const std::vector<std::size_t>& blocks) {
  std::vector<std::size_t> idx;
  for (std::size_t b : blocks)
    for (std::size_t k = 0; k < kSu4Params; ++k) idx.push_back(b * kSu4Params + k);
  return idx;
}

TrainResult run(const TrainingDataset& train_set, const TrainingDataset* test_set, const Circuit& c,
                std::vector<double> theta, const TrainConfig& cfg, const ProgressCallback& progress, bool local) {
  if (theta.size() != c.num_params()) throw ShapeError("train: parameter length mismatch");
  if (test_set != nullptr && test_set->samples.empty()) test_set = nullptr;
  if (cfg.test_every == 0) throw ConfigError("train: test_every must be positive");
  if (local && cfg.inner_iterations == 0) throw ConfigError("train: inner_iterations must be positive");

  using clock = std::chrono::steady_clock;
  const auto start = clock::now();

  // Update groups: one for global training, one per layer for the local sweep.
  std::vector<std::vector<std::size_t>> group_params;
  std::vector<std::vector<bool>> group_masks;
  std::vector<std::size_t> order;
  if (local) {
    for (std::size_t l = 0; l < c.depth(); ++l) {
      const auto blocks = c.layer_blocks(l);
      std::vector<bool> mask(c.num_blocks, false);
      for (std::size_t b : blocks) mask[b] = true;
      group_params.push_back(block_params(blocks));
      group_masks.push_back(std::move(mask));
    }
    order = sweep_order(c.depth());
  }
  std::vector<AdamState> adam(local ? c.depth() : 1);

  TrainResult res;
  res.best_test_cost = std::numeric_limits<double>::infinity();
  double best_train_seen = std::numeric_limits<double>::infinity();
  double best_selector = std::numeric_limits<double>::infinity();
  std::size_t since_improvement = 0;
  std::optional<LayerCache> cache;

  for (std::size_t step = 0;; ++step) {
    const std::size_t group = local ? order[(step / cfg.inner_iterations) % order.size()] : 0;
    CostGradient cg;
    if (local) {
      check_sizes(train_set, c);
      if (step % cfg.inner_iterations == 0 || !cache) cache = build_layer_cache(train_set, c, theta, group, cfg.trunc);
      cg = layer_cost_and_gradient(*cache, c, theta, group_masks[group], cfg.trunc);
    } else {
      cg = cost_and_gradient(train_set, c, theta, cfg.trunc, nullptr);
    }

    HistoryRow row;
    row.step = step;
    row.train_cost = cg.cost;
    row.grad_norm = l2(cg.gradient);

    const bool at_tolerance = cg.cost <= cfg.cost_tolerance;
    const bool at_limit = step >= cfg.max_steps;
    if (cg.cost < best_train_seen * (1.0 - cfg.min_rel_improvement)) {
      best_train_seen = cg.cost;
      since_improvement = 0;
    } else if (step > 0) {
      ++since_improvement;
    }
    const bool patience_out = cfg.patience > 0 && since_improvement >= cfg.patience;
    const bool last = at_tolerance || at_limit || patience_out;

    double selector = cg.cost;
    if (test_set != nullptr && (step % cfg.test_every == 0 || last)) {
      row.test_cost = empirical_risk(*test_set, c, theta, cfg.trunc).cost;
      selector = *row.test_cost;
    }
    if ((test_set == nullptr || row.test_cost) && selector < best_selector) {
      best_selector = selector;
      res.theta = theta;
      res.best_step = step;
      res.best_train_cost = cg.cost;
      res.best_test_cost = row.test_cost.value_or(cg.cost);
    }
    row.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    res.history.push_back(row);
    if (progress) progress(row);

    if (last) {
      res.stop_reason = at_tolerance ? "cost_tolerance" : (at_limit ? "max_steps" : "early_stop");
      break;
    }
    if (local) {
      const auto& idx = group_params[group];
      std::vector<double> sub(idx.size()), g(idx.size());
      for (std::size_t k = 0; k < idx.size(); ++k) {
        sub[k] = theta[idx[k]];
        g[k] = cg.gradient[idx[k]];
      }
      adam_step(sub, adam[group], g, cfg.adam);
      for (std::size_t k = 0; k < idx.size(); ++k) theta[idx[k]] = sub[k];
    } else {
      adam_step(theta, adam[0], cg.gradient, cfg.adam);
    }
    ++res.steps;
  }
  res.last_theta = theta;
  return res;
}

}  // namespace

TrainResult train(const TrainingDataset& train_set, const TrainingDataset* test_set, const Circuit& c,
                  std::vector<double> theta, const TrainConfig& cfg, const ProgressCallback& progress) {
  return run(train_set, test_set, c, std::move(theta), cfg, progress, cfg.method == UpdateMethod::local_sweep);
}

TrainResult local_sweep_train(const TrainingDataset& train_set, const TrainingDataset* test_set, const Circuit& c,
                              std::vector<double> theta, TrainConfig cfg, const ProgressCallback& progress) {
  cfg.method = UpdateMethod::local_sweep;
  return run(train_set, test_set, c, std::move(theta), cfg, progress, true);
}

double generalization_gap_diagnostic(std::size_t t_gates, std::size_t k) {
  if (t_gates < 1 || k < 1) throw std::invalid_argument("generalization_gap_diagnostic: arguments must be >= 1");
  const double t = static_cast<double>(t_gates);
  return std::sqrt(t * std::log(t) / static_cast<double>(k));
}

// ---- warm starts ----------------------------------------------------------------

std::vector<double> warm_start_trotter(const HamiltonianSpec& spec, double t, const TrotterScheme& scheme,
                                       std::size_t steps, const Circuit& ansatz) {
  if (steps == 0) throw std::invalid_argument("warm_start_trotter: steps must be positive");
  if (spec.size() != ansatz.n) throw EmbeddingError("Trotter warm start: Hamiltonian and ansatz sizes differ");
  const Circuit tc = trotter_circuit(spec, t / static_cast<double>(steps), scheme, steps, true);
  static const Matrix swap = pauli::swap();
  std::vector<double> theta(ansatz.num_params(), 0.0);
  std::vector<bool> assigned(ansatz.num_blocks, false);
  std::size_t next = 0;
  for (std::size_t l = 0; l < ansatz.depth() && next < tc.depth(); ++l) {
    const auto& al = ansatz.layers[l];
    const auto& tl = tc.layers[next];
    if (tl.color != al.color) continue;
    std::size_t matched = 0;
    for (const auto& ag : al.gates) {
      const auto it = std::find_if(tl.gates.begin(), tl.gates.end(), [&](const CircuitGate& g) {
        return g.two_site() && g.lo() == ag.lo() && g.hi() == ag.hi();
      });
      if (it == tl.gates.end()) continue;
      ++matched;
      // Trotter gates are written in chain order; the ansatz block acts with its first factor on ag.first.
      Matrix m = tc.fixed[*it->fixed];
      if (it->first != ag.first) m = swap * m * swap;
      const auto p = su4_params_from_unitary(m);
      const std::size_t b = *ag.block;
      double* dst = theta.data() + b * kSu4Params;
      if (assigned[b]) {
        for (std::size_t k = 0; k < kSu4Params; ++k)
          if (std::abs(dst[k] - p[k]) > 1e-9)
            throw EmbeddingError("Trotter warm start: gates of a translation-invariant layer differ (layer " +
                                 std::to_string(l) + "); use a non-TI ansatz or another warm start");
      } else {
        std::copy(p.begin(), p.end(), dst);
        assigned[b] = true;
      }
    }
    if (matched != tl.gates.size())
      throw EmbeddingError("Trotter warm start: stage gates do not lie on the ansatz layer");
    ++next;
  }
  if (next != tc.depth()) {
    const int color = tc.layers[next].color;
    std::string why = color == color::next_nearest ? "next-nearest terms have no place in a nearest-neighbour brickwall"
                      : color == color::onsite     ? "on-site stages have no place in the brickwall"
                                                   : "the ansatz has too few layers of the required bond colors";
    throw EmbeddingError("Trotter warm start: " + std::to_string(tc.depth() - next) + " of " +
                         std::to_string(tc.depth()) + " stages do not embed (" + why + ")");
  }
  return theta;
}

namespace {

const Lattice& lattice_of(const Circuit& c) {
  if (!c.lattice) throw EmbeddingError("warm start: circuit has no lattice layout");
  return *c.lattice;
}

// Position of the gate on pair (lo, hi) within a layer, if any.
std::optional<std::size_t> find_pair(const CircuitLayer& layer, std::size_t lo, std::size_t hi) {
  for (std::size_t k = 0; k < layer.gates.size(); ++k)
    if (layer.gates[k].lo() == lo && layer.gates[k].hi() == hi) return k;
  return std::nullopt;
}

void copy_block(std::vector<double>& dst, std::size_t db, std::span<const double> src, std::size_t sb) {
  std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(sb * kSu4Params), kSu4Params,
              dst.begin() + static_cast<std::ptrdiff_t>(db * kSu4Params));
}

}  // namespace

std::pair<Circuit, std::vector<double>> warm_start_double_time(const Circuit& previous,
                                                               std::span<const double> theta) {
  if (theta.size() != previous.num_params()) throw ShapeError("double-time warm start: parameter length mismatch");
  const std::size_t tau0 = previous.depth();
  Circuit next = brickwall(lattice_of(previous), 2 * tau0, previous.translation_invariant);
  std::vector<double> out(next.num_params(), 0.0);
  for (std::size_t l = 0; l < next.depth(); ++l) {
    const auto& src = previous.layers[l % tau0];
    const auto& dst = next.layers[l];
    if (src.gates.size() != dst.gates.size())
      throw EmbeddingError("double-time warm start: layer " + std::to_string(l) +
                           " of the doubled brickwall does not repeat layer " + std::to_string(l % tau0) +
                           " (depth must be a multiple of the brickwall period)");
    for (std::size_t k = 0; k < dst.gates.size(); ++k) {
      if (dst.gates[k].first != src.gates[k].first || dst.gates[k].second != src.gates[k].second)
        throw EmbeddingError("double-time warm start: layer " + std::to_string(l) + " does not repeat layer " +
                             std::to_string(l % tau0) + " (depth must be a multiple of the brickwall period)");
      copy_block(out, *dst.gates[k].block, theta, *src.gates[k].block);
    }
  }
  return {std::move(next), std::move(out)};
}

std::pair<Circuit, std::vector<double>> warm_start_double_space(const Circuit& previous,
                                                                std::span<const double> theta) {
  if (theta.size() != previous.num_params()) throw ShapeError("double-space warm start: parameter length mismatch");
  const Lattice& old = lattice_of(previous);
  Lattice big = old;
  if (old.is_chain()) {
    if (old.size() % 2 != 0) throw EmbeddingError("double-space warm start: chain length must be even");
    big = Lattice::chain(2 * old.size());
  } else {
    if (old.lx() % 2 != 0) throw EmbeddingError("double-space warm start: strip length lx must be even");
    big = Lattice::strip(2 * old.lx(), old.ly(), old.periodic_x());
  }
  // Old site of a new site, with the half it lies in.
  auto fold = [&](std::size_t s) -> std::pair<std::size_t, std::size_t> {
    if (old.is_chain()) return {s / old.size(), s % old.size()};
    const auto [x, y] = big.coords(s);
    return {x / old.lx(), old.site(x % old.lx(), y)};
  };
  Circuit next = brickwall(big, previous.depth(), previous.translation_invariant);
  std::vector<double> out(next.num_params(), 0.0);
  for (std::size_t l = 0; l < next.depth(); ++l) {
    if (next.layers[l].color != previous.layers[l].color)
      throw EmbeddingError("double-space warm start: layer " + std::to_string(l) +
                           " changes bond color on the doubled lattice (" + old.describe() + " lacks bonds the doubled "
                           "lattice has)");
    if (previous.translation_invariant) {
      copy_block(out, next.layer_blocks(l).at(0), theta, previous.layer_blocks(l).at(0));
      continue;
    }
    for (const auto& g : next.layers[l].gates) {
      const auto [ha, a] = fold(g.first);
      const auto [hb, b] = fold(g.second);
      if (ha != hb) continue;
      const auto& src = previous.layers[l];
      const auto k = find_pair(src, std::min(a, b), std::max(a, b));
      if (!k) continue;
      const auto& sg = src.gates[*k];
      if (sg.first != a) throw EmbeddingError("double-space warm start: gate orientation differs between halves");
      copy_block(out, *g.block, theta, *sg.block);
    }
  }
  return {std::move(next), std::move(out)};
}

std::vector<double> near_identity_init(const Circuit& c, double scale, std::uint64_t seed) {
  Pcg32 rng(seed, 0x6e6561722d696400ULL);
  std::vector<double> theta(c.num_params());
  for (auto& x : theta) x = scale * rng.gaussian();
  return theta;
}

}  // namespace qdc
