#include "qdc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <ostream>

#include "qdc/dense.hpp"
#include "qdc/errors.hpp"
#include "qdc/trotter.hpp"
#include "qdc/verification.hpp"

namespace qdc {

namespace fs = std::filesystem;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::data_gen: return "data-gen";
    case ExperimentKind::compile: return "compile";
    case ExperimentKind::dynamics: return "dynamics";
    case ExperimentKind::resource_compare: return "resource-compare";
    case ExperimentKind::verify: return "verify";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto k : {ExperimentKind::data_gen, ExperimentKind::compile, ExperimentKind::dynamics,
                 ExperimentKind::resource_compare, ExperimentKind::verify})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown experiment kind '" + name + "'");
}

namespace {

template <class T>
T opt(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

const Json& section(const Json& doc, const char* key) {
  static const Json empty = Json::object();
  if (!doc.contains(key) || doc.at(key).is_null()) return empty;
  if (!doc.at(key).is_object()) throw ConfigError(std::string("section '") + key + "' must be an object");
  return doc.at(key);
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).string();
}

void log_line(std::ostream* log, const std::string& s) {
  if (log) *log << s << std::endl;
}

}  // namespace

RunConfig parse_run_config(const Json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  RunConfig c;
  c.raw = doc;
  c.kind = experiment_kind_from_string(opt<std::string>(doc, "kind", "compile"));
  if (!doc.contains("hamiltonian")) throw ConfigError("configuration: missing 'hamiltonian'");
  c.spec = hamiltonian_from_json(doc.at("hamiltonian"));
  c.time = opt<double>(doc, "time", 0.0);
  if (!(c.time >= 0.0)) throw ConfigError("configuration: time must be non-negative");

  const Json& ansatz = section(doc, "ansatz");
  c.tau = opt<std::size_t>(ansatz, "tau", 1);
  c.translation_invariant = opt<bool>(ansatz, "translation_invariant", opt<bool>(ansatz, "ti", true));
  if (c.tau < 1) throw ConfigError("ansatz: tau must be at least 1");

  const Json& data = section(doc, "dataset");
  c.train_size = opt<std::size_t>(data, "train_size", 16);
  c.test_size = opt<std::size_t>(data, "test_size", 100);
  c.data_seed = opt<std::uint64_t>(data, "seed", 0);
  c.dt = opt<double>(data, "dt", 1e-3);
  c.max_discarded = opt<double>(data, "max_discarded", 0.0);
  c.train_path = resolve(base_dir, opt<std::string>(data, "train_path", ""));
  c.test_path = resolve(base_dir, opt<std::string>(data, "test_path", ""));
  if (!(c.dt > 0.0)) throw ConfigError("dataset: dt must be positive");
  c.train_ensemble = ensemble_from_json(data.contains("ensemble") ? data.at("ensemble") : Json());
  if (!(data.contains("ensemble") && data.at("ensemble").contains("seed")))
    c.train_ensemble.seed = derive_seed(c.data_seed, 0);
  if (c.train_ensemble.kind == EnsembleKind::u1_rqc && c.train_ensemble.charge > c.spec.size())
    throw ConfigError("dataset: u1-rqc charge exceeds n");

  c.trunc = truncation_from_json(doc.contains("truncation") ? doc.at("truncation") : Json());
  c.circuit_trunc = doc.contains("circuit_truncation") ? truncation_from_json(doc.at("circuit_truncation")) : c.trunc;

  const Json& o = section(doc, "optimizer");
  auto& t = c.optimizer;
  t.adam.rate = opt<double>(o, "rate", t.adam.rate);
  t.adam.beta1 = opt<double>(o, "beta1", t.adam.beta1);
  t.adam.beta2 = opt<double>(o, "beta2", t.adam.beta2);
  t.adam.epsilon = opt<double>(o, "epsilon", t.adam.epsilon);
  t.max_steps = opt<std::size_t>(o, "max_steps", t.max_steps);
  t.patience = opt<std::size_t>(o, "patience", t.patience);
  t.min_rel_improvement = opt<double>(o, "min_rel_improvement", t.min_rel_improvement);
  t.test_every = opt<std::size_t>(o, "test_every", t.test_every);
  t.cost_tolerance = opt<double>(o, "cost_tolerance", t.cost_tolerance);
  t.inner_iterations = opt<std::size_t>(o, "inner_iterations", t.inner_iterations);
  const auto method = opt<std::string>(o, "method", "global");
  if (method == "global")
    t.method = UpdateMethod::global;
  else if (method == "local")
    t.method = UpdateMethod::local_sweep;
  else
    throw ConfigError("optimizer: method must be 'global' or 'local'");
  if (t.test_every == 0 || t.inner_iterations == 0) throw ConfigError("optimizer: test_every and inner_iterations must be positive");
  t.trunc = c.circuit_trunc;

  c.warm_start = doc.contains("warm_start") ? doc.at("warm_start") : Json{{"strategy", "none"}};
  if (!c.warm_start.is_object()) throw ConfigError("warm_start must be an object");
  c.output_dir = resolve(base_dir, opt<std::string>(doc, "output_dir", "out"));
  c.raw["__base_dir"] = base_dir;
  return c;
}

// ---- observables ----------------------------------------------------------------

Matrix hopping_correlations(const Mps& state) {
  const std::size_t n = state.size();
  static const Matrix sp = pauli::raising();
  static const Matrix sm = pauli::lowering();
  static const Matrix z = pauli::z();
  Matrix c = Matrix::Zero(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    c(j, j) = 0.5 * (1.0 - local_expectation(state, j, z).real());
    for (std::size_t k = j + 1; k < n; ++k) {
      c(j, k) = two_point_correlator(state, j, k, sp, sm);
      c(k, j) = std::conj(c(j, k));
    }
  }
  return c;
}

std::vector<double> structure_factor(const Lattice& lattice, const Matrix& corr) {
  const std::size_t n = lattice.size();
  if (static_cast<std::size_t>(corr.rows()) != n || static_cast<std::size_t>(corr.cols()) != n)
    throw ShapeError("structure_factor: correlation matrix must be n x n");
  const std::size_t len = lattice.ly();
  std::vector<double> s(len, 0.0);
  for (std::size_t m = 0; m < len; ++m) {
    const double k = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(len);
    cplx acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t jp = 0; jp < n; ++jp) {
        const double dy = static_cast<double>(lattice.coords(j).second) - static_cast<double>(lattice.coords(jp).second);
        acc += std::polar(1.0, k * dy) * corr(j, jp);
      }
    s[m] = acc.real() / static_cast<double>(len);
  }
  return s;
}

Mps initial_state(const std::string& d, const Lattice& lattice) {
  const std::size_t n = lattice.size();
  std::vector<int> bits(n, 0);
  if (d.rfind("bits:", 0) == 0) {
    const std::string b = d.substr(5);
    if (b.size() != n) throw ConfigError("initial state: bitstring length must equal n");
    return Mps::basis_state(b);
  }
  if (d == "neel") {
    for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<int>(i % 2);
  } else if (d == "domain") {
    // Middle third of the columns (rows for a chain) occupied, expressed in lattice coordinates.
    const std::size_t len = lattice.ly();
    const std::size_t lo = len / 3, hi = len - len / 3;
    for (std::size_t s = 0; s < n; ++s) {
      const auto y = lattice.coords(s).second;
      bits[s] = (y >= lo && y < hi) ? 1 : 0;
    }
  } else if (d == "single") {
    bits[lattice.site(lattice.lx() / 2, lattice.ly() / 2)] = 1;
  } else {
    throw ConfigError("initial state: unknown descriptor '" + d + "'");
  }
  return Mps::basis_state(bits);
}

// ---- compile ----------------------------------------------------------------------

namespace {

struct Datasets {
  TrainingDataset train;
  TrainingDataset test;
};

DatasetMeta meta_for(const RunConfig& c, const EnsembleSpec& e, const std::string& role) {
  DatasetMeta m;
  m.spec = c.spec;
  m.t = c.time;
  m.dt = c.dt;
  m.trunc = c.trunc;
  m.ensemble = e;
  m.role = role;
  return m;
}

EnsembleSpec test_ensemble(const RunConfig& c) {
  EnsembleSpec e;
  e.kind = EnsembleKind::random_product;
  e.seed = derive_seed(c.data_seed, 1);
  return e;
}

TrainingDataset load_dataset_checked(const std::string& path, const RunConfig& c) {
  TrainingDataset d = dataset_from_json(read_json_file(path));
  if (hamiltonian_to_json(d.meta.spec) != hamiltonian_to_json(c.spec) || std::abs(d.meta.t - c.time) > 1e-12)
    throw ConfigError("dataset '" + path + "' was generated for a different Hamiltonian or time");
  return d;
}

Datasets obtain_datasets(const RunConfig& c, std::ostream* log) {
  Datasets d;
  if (!c.train_path.empty()) {
    d.train = load_dataset_checked(c.train_path, c);
  } else {
    log_line(log, "generating " + std::to_string(c.train_size) + " training samples");
    d.train = generate_dataset(meta_for(c, c.train_ensemble, "train"), c.train_size, c.max_discarded);
  }
  if (!c.test_path.empty()) {
    d.test = load_dataset_checked(c.test_path, c);
  } else if (c.test_size > 0) {
    log_line(log, "generating " + std::to_string(c.test_size) + " test samples");
    d.test = generate_dataset(meta_for(c, test_ensemble(c), "test"), c.test_size, c.max_discarded);
  }
  return d;
}

struct Seeded {
  Circuit circuit;
  std::vector<double> theta;
  Json lineage;
};

bool same_layout(const Circuit& a, const Circuit& b) {
  if (a.n != b.n || a.depth() != b.depth() || a.num_blocks != b.num_blocks) return false;
  for (std::size_t l = 0; l < a.depth(); ++l) {
    if (a.layers[l].gates.size() != b.layers[l].gates.size()) return false;
    for (std::size_t k = 0; k < a.layers[l].gates.size(); ++k) {
      const auto& x = a.layers[l].gates[k];
      const auto& y = b.layers[l].gates[k];
      if (x.first != y.first || x.second != y.second || x.block != y.block) return false;
    }
  }
  return true;
}

Seeded seed_parameters(const RunConfig& c, std::ostream* log, int level);

// Predecessor solution for double-time / double-space: a checkpoint file or a nested run.
CircuitCheckpoint predecessor(const RunConfig& c, const Json& ws, const std::string& strategy, std::ostream* log,
                              int level) {
  const std::string base = opt<std::string>(c.raw, "__base_dir", "");
  if (ws.contains("checkpoint")) return circuit_from_json(read_json_file(resolve(base, ws.at("checkpoint").get<std::string>())));
  if (!ws.contains("from") || !ws.at("from").is_object())
    throw ConfigError("warm start '" + strategy + "' needs a 'checkpoint' path or a nested 'from' run");
  const Json& from = ws.at("from");
  Json child = c.raw;
  child.erase("__base_dir");
  child.erase("warm_start");
  child["kind"] = "compile";
  child.merge_patch(from);
  child["warm_start"] = from.contains("warm_start") ? from.at("warm_start") : Json{{"strategy", "none"}};
  if (strategy == "double-time") {
    if (!from.contains("time")) child["time"] = c.time / 2.0;
    if (!(from.contains("ansatz") && from.at("ansatz").contains("tau"))) {
      if (c.tau % 2 != 0) throw EmbeddingError("double-time warm start: depth must be even");
      child["ansatz"]["tau"] = c.tau / 2;
    }
  } else {
    if (!(from.contains("hamiltonian") && from.at("hamiltonian").contains("lattice"))) {
      const Lattice& l = c.spec.lattice;
      if (l.is_chain()) {
        if (l.size() % 2 != 0) throw EmbeddingError("double-space warm start: chain length must be even");
        child["hamiltonian"]["lattice"] = lattice_to_json(Lattice::chain(l.size() / 2));
      } else {
        if (l.lx() % 2 != 0) throw EmbeddingError("double-space warm start: lx must be even");
        child["hamiltonian"]["lattice"] = lattice_to_json(Lattice::strip(l.lx() / 2, l.ly(), l.periodic_x()));
      }
    }
  }
  const RunConfig cc = parse_run_config(child, base);
  log_line(log, std::string(static_cast<std::size_t>(2 * level), ' ') + "predecessor run: " + strategy + " from " +
                    cc.spec.lattice.describe() + ", t = " + format_double(cc.time) + ", tau = " + std::to_string(cc.tau));
  CompileOutcome out = compile_circuit(cc, log);
  return out.checkpoint;
}

Seeded seed_parameters(const RunConfig& c, std::ostream* log, int level) {
  const Json& ws = c.warm_start;
  const std::string strategy = opt<std::string>(ws, "strategy", "none");
  const Circuit ansatz = brickwall(c.spec.lattice, c.tau, c.translation_invariant);
  Seeded s;
  s.lineage = {{"strategy", strategy}};
  if (strategy == "none") {
    s.circuit = ansatz;
    s.theta.assign(ansatz.num_params(), 0.0);
  } else if (strategy == "near-identity") {
    const double scale = opt<double>(ws, "scale", 1e-2);
    const auto seed = opt<std::uint64_t>(ws, "seed", c.data_seed);
    s.circuit = ansatz;
    s.theta = near_identity_init(ansatz, scale, seed);
    s.lineage["scale"] = scale;
    s.lineage["seed"] = seed;
  } else if (strategy == "trotter") {
    const auto steps = opt<std::size_t>(ws, "steps", 1);
    const auto groups = term_groups(folded_terms(c.spec));
    TrotterScheme scheme;
    if (ws.contains("coefficient_file")) {
      const std::string base = opt<std::string>(c.raw, "__base_dir", "");
      scheme = load_trotter_scheme(resolve(base, ws.at("coefficient_file").get<std::string>()));
    } else {
      scheme = builtin_scheme(opt<int>(ws, "order", 2), groups);
    }
    s.circuit = ansatz;
    s.theta = warm_start_trotter(c.spec, c.time, scheme, steps, ansatz);
    s.lineage["order"] = scheme.order;
    s.lineage["steps"] = steps;
    s.lineage["scheme"] = scheme.provenance;
  } else if (strategy == "checkpoint") {
    const std::string base = opt<std::string>(c.raw, "__base_dir", "");
    if (!ws.contains("path")) throw ConfigError("warm start 'checkpoint' needs a 'path'");
    const auto path = resolve(base, ws.at("path").get<std::string>());
    auto cp = circuit_from_json(read_json_file(path));
    if (!same_layout(cp.circuit, ansatz)) throw ConfigError("checkpoint '" + path + "' does not match the ansatz layout");
    s.circuit = ansatz;
    s.theta = cp.theta;
    s.lineage["path"] = path;
    s.lineage["parent"] = cp.provenance;
  } else if (strategy == "double-time" || strategy == "double-space") {
    const CircuitCheckpoint prev = predecessor(c, ws, strategy, log, level + 1);
    auto [circ, theta] = strategy == "double-time" ? warm_start_double_time(prev.circuit, prev.theta)
                                                   : warm_start_double_space(prev.circuit, prev.theta);
    if (!same_layout(circ, ansatz))
      throw ConfigError("warm start '" + strategy + "' produces a circuit that does not match the configured ansatz");
    s.circuit = ansatz;
    s.theta = std::move(theta);
    s.lineage["parent"] = prev.provenance;
  } else {
    throw ConfigError("unknown warm start strategy '" + strategy + "'");
  }
  return s;
}

}  // namespace

CompileOutcome compile_circuit(const RunConfig& c, std::ostream* log) {
  Seeded seeded = seed_parameters(c, log, 0);
  const Datasets data = obtain_datasets(c, log);
  const TrainingDataset* test = data.test.samples.empty() ? nullptr : &data.test;
  log_line(log, "training " + c.spec.lattice.describe() + " t = " + format_double(c.time) + " tau = " +
                    std::to_string(c.tau) + (c.translation_invariant ? " (TI)" : " (non-TI)") +
                    ", warm start: " + seeded.lineage.value("strategy", "none"));
  const std::size_t every = c.optimizer.test_every;
  ProgressCallback progress = [&](const HistoryRow& r) {
    if (log && r.test_cost && (r.step % (every * 10) == 0))
      *log << "  step " << r.step << "  train " << format_double(r.train_cost) << "  test "
           << format_double(*r.test_cost) << std::endl;
  };
  CompileOutcome out;
  out.result = train(data.train, test, seeded.circuit, seeded.theta, c.optimizer, progress);
  out.final_train_cost = out.result.best_train_cost;
  out.final_test_cost = test ? out.result.best_test_cost : out.result.best_train_cost;
  out.resources = count_resources(seeded.circuit);
  out.checkpoint.circuit = seeded.circuit;
  out.checkpoint.theta = out.result.theta;
  out.checkpoint.provenance = {{"hamiltonian", hamiltonian_to_json(c.spec)},
                               {"time", c.time},
                               {"tau", c.tau},
                               {"translation_invariant", c.translation_invariant},
                               {"data_seed", c.data_seed},
                               {"train_size", data.train.size()},
                               {"train_ensemble", ensemble_to_json(c.train_ensemble)},
                               {"warm_start", seeded.lineage},
                               {"steps", out.result.steps},
                               {"best_step", out.result.best_step},
                               {"stop_reason", out.result.stop_reason},
                               {"train_cost", out.final_train_cost},
                               {"test_cost", out.final_test_cost}};
  log_line(log, "done: " + std::to_string(out.result.steps) + " steps (" + out.result.stop_reason + "), train " +
                    format_double(out.final_train_cost) + ", test " + format_double(out.final_test_cost));
  return out;
}

// ---- subcommands --------------------------------------------------------------------

namespace {

Json resources_json(const ResourceReport& r) {
  Json hist = Json::object();
  for (const auto& [d, count] : r.distance_histogram) hist[std::to_string(d)] = count;
  return {{"su4", r.su4},     {"nn_xx", r.nn_xx}, {"nnn_xx", r.nnn_xx}, {"swaps", r.swaps},
          {"local", r.local}, {"cnots", r.cnots}, {"distance_histogram", hist}};
}

std::string path_in(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

int cmd_data_gen(const RunConfig& c, const std::string& dir, std::ostream& log) {
  const auto train = generate_dataset(meta_for(c, c.train_ensemble, "train"), c.train_size, c.max_discarded);
  write_json_file(path_in(dir, "train.json"), dataset_to_json(train));
  Json summary = {{"kind", "data-gen"},
                  {"hamiltonian", hamiltonian_to_json(c.spec)},
                  {"time", c.time},
                  {"train_size", train.size()},
                  {"train_max_discarded_weight", train.max_discarded_weight()}};
  if (c.test_size > 0) {
    const auto test = generate_dataset(meta_for(c, test_ensemble(c), "test"), c.test_size, c.max_discarded);
    write_json_file(path_in(dir, "test.json"), dataset_to_json(test));
    summary["test_size"] = test.size();
    summary["test_max_discarded_weight"] = test.max_discarded_weight();
  }
  write_json_file(path_in(dir, "data-gen.json"), summary);
  log << "wrote datasets to " << dir << std::endl;
  return exit_code::ok;
}

int cmd_compile(const RunConfig& c, const std::string& dir, std::ostream& log) {
  const CompileOutcome out = compile_circuit(c, &log);
  write_json_file(path_in(dir, "checkpoint.json"), circuit_to_json(out.checkpoint));
  write_file_atomic(path_in(dir, "history.csv"), history_csv(out.result.history));
  write_file_atomic(path_in(dir, "timing.csv"), timing_csv(out.result.history));
  const std::size_t n = c.spec.size();
  Json summary = {{"kind", "compile"},
                  {"n", n},
                  {"time", c.time},
                  {"tau", c.tau},
                  {"translation_invariant", c.translation_invariant},
                  {"train_risk", out.final_train_cost},
                  {"test_risk", out.final_test_cost},
                  {"per_site_test_risk", per_site_risk(std::clamp(out.final_test_cost, 0.0, 1.0), n)},
                  {"steps", out.result.steps},
                  {"best_step", out.result.best_step},
                  {"stop_reason", out.result.stop_reason},
                  {"resources", resources_json(out.resources)},
                  {"generalization_diagnostic",
                   {{"value", generalization_gap_diagnostic(std::max<std::size_t>(1, out.checkpoint.circuit.num_gates()),
                                                            std::max<std::size_t>(1, c.train_size))},
                    {"note", "shape-only, unknown constant"},
                    {"measured_gap", out.final_test_cost - out.final_train_cost}}},
                  {"warm_start", out.checkpoint.provenance.at("warm_start")}};
  write_json_file(path_in(dir, "summary.json"), summary);
  return exit_code::ok;
}

int cmd_dynamics(const RunConfig& c, const std::string& dir, std::ostream& log) {
  const Json& d = section(c.raw, "dynamics");
  const std::string base = opt<std::string>(c.raw, "__base_dir", "");
  if (!d.contains("checkpoint")) throw ConfigError("dynamics: missing 'checkpoint'");
  const auto cp = circuit_from_json(read_json_file(resolve(base, d.at("checkpoint").get<std::string>())));
  if (cp.circuit.n != c.spec.size()) throw ConfigError("dynamics: checkpoint size does not match the Hamiltonian");
  double step_time = c.time;
  if (cp.provenance.contains("time")) {
    const double ct = cp.provenance.at("time").get<double>();
    if (c.raw.contains("time") && std::abs(ct - c.time) > 1e-12)
      throw ConfigError("dynamics: configured time differs from the checkpoint's compiled time");
    step_time = ct;
  }
  if (!(step_time > 0.0)) throw ConfigError("dynamics: compiled time must be positive");
  const double total = opt<double>(d, "total_time", step_time);
  const double ratio = total / step_time;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("dynamics: total_time must be an integer multiple of the compiled time");

  const std::size_t n = c.spec.size();
  const bool reference = opt<bool>(d, "reference", n <= 16);
  const double ref_dt = opt<double>(d, "reference_dt", c.dt);
  const auto every = opt<std::size_t>(d, "observables_every", 1);
  const bool want_sk = opt<bool>(d, "structure_factor", true);
  if (every == 0) throw ConfigError("dynamics: observables_every must be positive");

  Mps state = initial_state(opt<std::string>(d, "initial_state", "domain"), c.spec.lattice);
  Mps ref = state;
  const double z0 = total_z(state);

  std::string trace = "step,time,total_z,max_bond,discarded_weight,fidelity,reference_total_z\n";
  std::string mag = "step,time";
  for (std::size_t i = 0; i < n; ++i) mag += ",z_" + std::to_string(i);
  mag += "\n";
  std::string bonds = "step,time";
  for (std::size_t b = 0; b + 1 < n; ++b) bonds += ",chi_" + std::to_string(b);
  bonds += "\n";
  std::string sk = "step,time";
  for (std::size_t m = 0; m < c.spec.lattice.ly(); ++m) sk += ",S_" + std::to_string(m);
  sk += "\n";

  double min_fid = 1.0, final_fid = 1.0, max_dz = 0.0, max_ref_dz = 0.0, discarded = 0.0;
  static const Matrix z = pauli::z();
  for (std::size_t s = 0; s <= steps; ++s) {
    if (s > 0) {
      discarded += apply_circuit(state, cp.circuit, cp.theta, c.trunc).discarded_weight;
      if (reference) tebd_evolve(ref, c.spec, step_time, ref_dt, c.trunc);
    }
    const std::string t = format_double(static_cast<double>(s) * step_time);
    const double tz = total_z(state);
    max_dz = std::max(max_dz, std::abs(tz - z0));
    std::string fid, ref_z;
    if (reference) {
      final_fid = std::norm(overlap(ref, state));
      min_fid = std::min(min_fid, final_fid);
      fid = format_double(final_fid);
      const double rz = total_z(ref);
      max_ref_dz = std::max(max_ref_dz, std::abs(rz - z0));
      ref_z = format_double(rz);
    }
    trace += std::to_string(s) + "," + t + "," + format_double(tz) + "," + std::to_string(state.max_bond_dimension()) +
             "," + format_double(discarded) + "," + fid + "," + ref_z + "\n";
    if (s % every == 0 || s == steps) {
      mag += std::to_string(s) + "," + t;
      for (std::size_t i = 0; i < n; ++i) mag += "," + format_double(local_expectation(state, i, z).real());
      mag += "\n";
      bonds += std::to_string(s) + "," + t;
      for (std::size_t chi : state.bond_dimensions()) bonds += "," + std::to_string(chi);
      bonds += "\n";
      if (want_sk) {
        sk += std::to_string(s) + "," + t;
        for (double v : structure_factor(c.spec.lattice, hopping_correlations(state))) sk += "," + format_double(v);
        sk += "\n";
      }
    }
  }
  write_file_atomic(path_in(dir, "dynamics.csv"), trace);
  write_file_atomic(path_in(dir, "magnetization.csv"), mag);
  write_file_atomic(path_in(dir, "bonds.csv"), bonds);
  if (want_sk) write_file_atomic(path_in(dir, "structure_factor.csv"), sk);
  Json summary = {{"kind", "dynamics"},   {"steps", steps},          {"compiled_time", step_time},
                  {"total_time", total}, {"max_total_z_drift", max_dz}, {"discarded_weight", discarded},
                  {"reference", reference}};
  if (reference) {
    summary["final_fidelity"] = final_fid;
    summary["min_fidelity"] = min_fid;
    summary["max_reference_total_z_drift"] = max_ref_dz;
  }
  write_json_file(path_in(dir, "dynamics.json"), summary);
  log << "dynamics: " << steps << " applications, max total-Z drift " << format_double(max_dz)
      << (reference ? ", final fidelity " + format_double(final_fid) : std::string()) << std::endl;
  return exit_code::ok;
}

struct CompareRow {
  std::string label;
  std::string method;
  int order = 0;
  std::size_t steps = 0;
  ResourceReport res;
  double risk = 0.0;
  double risk_stderr = 0.0;
  std::optional<double> infidelity;
};

int cmd_resource_compare(const RunConfig& c, const std::string& dir, std::ostream& log) {
  const Json& rc = section(c.raw, "resource_compare");
  const std::string base = opt<std::string>(c.raw, "__base_dir", "");
  const auto test_size = opt<std::size_t>(rc, "test_size", c.test_size);
  const auto seed = opt<std::uint64_t>(rc, "seed", c.data_seed);
  const auto exact_max_n = opt<std::size_t>(rc, "exact_max_n", 10);
  if (!rc.contains("rows") || !rc.at("rows").is_array()) throw ConfigError("resource_compare: missing 'rows'");
  if (test_size == 0) throw ConfigError("resource_compare: test_size must be positive");

  EnsembleSpec e;
  e.kind = EnsembleKind::random_product;
  e.seed = derive_seed(seed, 1);
  log << "generating shared test set (" << test_size << " samples)" << std::endl;
  const auto test = generate_dataset(meta_for(c, e, "test"), test_size, c.max_discarded);
  const std::size_t n = c.spec.size();
  std::optional<Matrix> u;
  if (n <= exact_max_n) u = dense_evolution_operator(c.spec, c.time);

  std::vector<CompareRow> rows;
  auto evaluate = [&](CompareRow row, const Circuit& circ, const std::vector<double>& theta) {
    const auto rep = empirical_risk(test, circ, theta, c.circuit_trunc);
    row.risk = rep.cost;
    double var = 0.0;
    const double mean_f = 1.0 - rep.cost;
    for (double f : rep.fidelities) var += (f - mean_f) * (f - mean_f);
    const double k = static_cast<double>(rep.fidelities.size());
    row.risk_stderr = k > 1 ? std::sqrt(var / (k - 1) / k) : 0.0;
    row.res = count_resources(circ);
    if (u) row.infidelity = unitary_infidelity(*u, circuit_to_dense(circ, theta));
    log << "  " << row.label << ": cnots " << row.res.cnots << ", risk " << format_double(row.risk) << std::endl;
    rows.push_back(std::move(row));
  };
  for (const auto& rj : rc.at("rows")) {
    const auto method = opt<std::string>(rj, "method", "");
    CompareRow row;
    row.method = method;
    if (method == "vqc") {
      const auto path = resolve(base, opt<std::string>(rj, "checkpoint", ""));
      const auto cp = circuit_from_json(read_json_file(path));
      if (cp.circuit.n != n) throw ConfigError("resource_compare: checkpoint size does not match");
      row.label = opt<std::string>(rj, "label", "vqc");
      evaluate(row, cp.circuit, cp.theta);
    } else if (method == "trotter") {
      const bool folded = opt<bool>(rj, "folded", false);
      const auto terms = folded ? folded_terms(c.spec) : bond_terms(c.spec);
      TrotterScheme scheme = rj.contains("coefficient_file")
                                 ? load_trotter_scheme(resolve(base, rj.at("coefficient_file").get<std::string>()))
                                 : builtin_scheme(opt<int>(rj, "order", 2), term_groups(terms));
      std::vector<std::size_t> steps;
      if (rj.contains("steps") && rj.at("steps").is_array())
        steps = rj.at("steps").get<std::vector<std::size_t>>();
      else
        steps.push_back(opt<std::size_t>(rj, "steps", 1));
      for (std::size_t st : steps) {
        if (st == 0) throw ConfigError("resource_compare: Trotter steps must be positive");
        const Circuit tc = trotter_circuit(c.spec, c.time / static_cast<double>(st), scheme, st, folded);
        CompareRow r = row;
        r.order = scheme.order;
        r.steps = st;
        r.label = opt<std::string>(rj, "label", "trotter") + "-p" + std::to_string(scheme.order) + "-s" + std::to_string(st);
        evaluate(r, tc, {});
      }
    } else if (method == "identity") {
      Circuit empty;
      empty.n = n;
      row.label = opt<std::string>(rj, "label", "identity");
      evaluate(row, empty, {});
    } else {
      throw ConfigError("resource_compare: unknown method '" + method + "'");
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const CompareRow& a, const CompareRow& b) {
    return a.res.cnots < b.res.cnots;
  });
  std::string csv = "label,method,order,steps,su4,nn_xx,nnn_xx,swaps,cnots,test_risk,test_risk_stderr,exact_infidelity\n";
  Json out = Json::array();
  for (const auto& r : rows) {
    csv += r.label + "," + r.method + "," + std::to_string(r.order) + "," + std::to_string(r.steps) + "," +
           std::to_string(r.res.su4) + "," + std::to_string(r.res.nn_xx) + "," + std::to_string(r.res.nnn_xx) + "," +
           std::to_string(r.res.swaps) + "," + std::to_string(r.res.cnots) + "," + format_double(r.risk) + "," +
           format_double(r.risk_stderr) + "," + (r.infidelity ? format_double(*r.infidelity) : std::string()) + "\n";
    Json jr = {{"label", r.label}, {"method", r.method}, {"order", r.order}, {"steps", r.steps},
               {"resources", resources_json(r.res)}, {"test_risk", r.risk}, {"test_risk_stderr", r.risk_stderr}};
    jr["exact_infidelity"] = r.infidelity ? Json(*r.infidelity) : Json(nullptr);
    out.push_back(jr);
  }
  write_file_atomic(path_in(dir, "resource_compare.csv"), csv);
  write_json_file(path_in(dir, "resource_compare.json"), {{"kind", "resource-compare"}, {"rows", out}});
  return exit_code::ok;
}

Json risk_json(const RiskEstimate& r) { return {{"mean", r.mean}, {"stderr", r.stderr_}, {"samples", r.samples}}; }

int cmd_verify(const RunConfig& c, const std::string& dir, std::ostream& log) {
  const Json& v = section(c.raw, "verify");
  const std::string base = opt<std::string>(c.raw, "__base_dir", "");
  if (!v.contains("checkpoint")) throw ConfigError("verify: missing 'checkpoint'");
  const auto cp = circuit_from_json(read_json_file(resolve(base, v.at("checkpoint").get<std::string>())));
  const std::size_t n = c.spec.size();
  if (cp.circuit.n != n) throw ConfigError("verify: checkpoint size does not match the Hamiltonian");
  check_dense_limit(n, "verify");
  const auto samples = opt<std::size_t>(v, "samples", 2000);
  const auto seed = opt<std::uint64_t>(v, "seed", c.data_seed);

  const Matrix u = dense_evolution_operator(c.spec, c.time);
  const Matrix vd = circuit_to_dense(cp.circuit, cp.theta);
  const double infid = unitary_infidelity(u, vd);
  const double fbar = haar_average_fidelity(u, vd);
  const double dim = std::ldexp(1.0, static_cast<int>(n));
  const double identity_residual = std::abs(infid - (dim + 1.0) / dim * (1.0 - fbar));
  const auto bound = prop1_bound_check(u, vd, samples, seed);

  Json report = {{"kind", "verify"},
                 {"n", n},
                 {"time", c.time},
                 {"unitary_infidelity", infid},
                 {"haar_average_fidelity", fbar},
                 {"haar_identity_residual", identity_residual},
                 {"prop1",
                  {{"in_distribution_risk", risk_json(bound.in_distribution)},
                   {"haar_risk", bound.haar_risk},
                   {"lower_margin", bound.lower_margin},
                   {"upper_margin", bound.upper_margin},
                   {"slack_3sigma", bound.slack},
                   {"seed", seed},
                   {"pass", bound.pass()}}}};
  if (opt<bool>(v, "ensemble_tests", false)) {
    const auto es = opt<std::size_t>(v, "ensemble_samples", 2000);
    const auto depth = opt<std::size_t>(v, "light_cone_depth", 1);
    const std::size_t en = std::min<std::size_t>(n, 10);
    EnsembleSpec product;
    product.seed = derive_seed(seed, 7);
    EnsembleSpec u1;
    u1.kind = EnsembleKind::u1_rqc;
    u1.depth = depth;
    u1.charge = 1;
    u1.seed = derive_seed(seed, 8);
    const auto fp = first_moment_test(product, en, es);
    const auto fu = first_moment_test(u1, en, es);
    Json ens = {{"n", en},
                {"product", {{"max_deviation", fp.max_deviation}, {"within_3_sigma", fp.within_3_sigma}}},
                {"u1_rqc", {{"max_deviation", fu.max_deviation}, {"within_3_sigma", fu.within_3_sigma}}}};
    if (depth < n) {
      const auto lc = u1_light_cone_test(n, depth, es, derive_seed(seed, 9));
      ens["light_cone"] = {{"depth", depth},
                           {"mean_z", lc.mean_z},
                           {"gap", lc.gap},
                           {"scrambled_reference", lc.scrambled_reference},
                           {"untouched_from", lc.untouched_from}};
    }
    report["ensembles"] = ens;
  }
  report["pass"] = bound.pass() && identity_residual < 1e-12;
  write_json_file(path_in(dir, "verify.json"), report);
  log << "verify: infidelity " << format_double(infid) << ", risk bound " << (bound.pass() ? "holds" : "VIOLATED")
      << std::endl;
  return bound.pass() ? exit_code::ok : exit_code::numerical;
}

}  // namespace

int run_experiment(const Json& doc, const std::string& base_dir, const std::string& out_dir, std::ostream& log,
                   std::optional<ExperimentKind> expected) {
  try {
    Json d = doc;
    if (expected) {
      if (d.contains("kind") && experiment_kind_from_string(d.at("kind").get<std::string>()) != *expected)
        throw ConfigError("configuration kind '" + d.at("kind").get<std::string>() + "' does not match subcommand '" +
                          to_string(*expected) + "'");
      d["kind"] = to_string(*expected);
    }
    const RunConfig c = parse_run_config(d, base_dir);
    const std::string dir = out_dir.empty() ? c.output_dir : out_dir;
    fs::create_directories(dir);
    switch (c.kind) {
      case ExperimentKind::data_gen: return cmd_data_gen(c, dir, log);
      case ExperimentKind::compile: return cmd_compile(c, dir, log);
      case ExperimentKind::dynamics: return cmd_dynamics(c, dir, log);
      case ExperimentKind::resource_compare: return cmd_resource_compare(c, dir, log);
      case ExperimentKind::verify: return cmd_verify(c, dir, log);
    }
    return exit_code::failure;
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << std::endl;
    return exit_code::config;
  } catch (const EmbeddingError& e) {
    log << "warm start error: " << e.what()
        << "\n  hint: choose a depth that holds every Trotter stage, a non-TI ansatz, or the double-time / "
           "near-identity strategies"
        << std::endl;
    return exit_code::config;
  } catch (const DenseLimitError& e) {
    log << "configuration error: " << e.what() << std::endl;
    return exit_code::config;
  } catch (const Json::exception& e) {
    log << "configuration error: " << e.what() << std::endl;
    return exit_code::config;
  } catch (const NumericalError& e) {
    log << "numerical failure: " << e.what() << std::endl;
    return exit_code::numerical;
  } catch (const BondCapError& e) {
    log << "numerical failure: " << e.what() << std::endl;
    return exit_code::numerical;
  } catch (const ConvergenceError& e) {
    log << "numerical failure: " << e.what() << std::endl;
    return exit_code::numerical;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << std::endl;
    return exit_code::failure;
  }
}

}  // namespace qdc
