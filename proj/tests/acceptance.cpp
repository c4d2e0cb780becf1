// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion.
//
//   acceptance [--workdir DIR] [--only 1,4,7]

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "qdc/dense.hpp"
#include "qdc/experiments.hpp"
#include "qdc/trotter.hpp"
#include "qdc/verification.hpp"

using namespace qdc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string workdir;

std::string fmt(double x, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

// Writes the run's config next to its outputs and executes it like the CLI would.
int run_config(const std::string& name, Json doc) {
  const std::string dir = (fs::path(workdir) / name).string();
  fs::create_directories(dir);
  write_json_file(dir + "/config.json", doc);
  std::ofstream log(dir + "/log.txt");
  const int rc = run_experiment(read_json_file(dir + "/config.json"), dir, dir + "/out", log);
  if (rc != 0) std::cout << "    run " << name << " exited with " << rc << " (see " << dir << "/log.txt)\n";
  return rc;
}

Json out_json(const std::string& name, const std::string& file) {
  return read_json_file((fs::path(workdir) / name / "out" / file).string());
}

HamiltonianSpec heisenberg(std::size_t n, double h = 0.0) {
  HamiltonianSpec s;
  s.family = ModelFamily::heisenberg;
  s.lattice = Lattice::chain(n);
  s.h = h;
  return s;
}

HamiltonianSpec ising(const Lattice& l, double g, double kappa) {
  HamiltonianSpec s;
  s.family = ModelFamily::ising;
  s.lattice = l;
  s.g = g;
  s.kappa = kappa;
  return s;
}

Json exact_truncation() { return {{"chi_max", 1024}, {"cutoff", 1e-14}}; }

// ---- 1 ----------------------------------------------------------------------------

Outcome c1_dense_equivalence() {
  double worst = 0.0;
  for (std::size_t n = 2; n <= 8; ++n)
    for (std::uint64_t trial = 0; trial < 5; ++trial) {
      const std::uint64_t seed = 1000 * n + trial;
      const auto c = brickwall_1d(n, 5, trial % 2 == 0);
      const auto theta = oracle::random_vector(c.num_params(), 0.7, seed);
      const Vector a = oracle::random_state(std::size_t{1} << n, seed + 1);
      const Vector b = oracle::random_state(std::size_t{1} << n, seed + 2);
      Mps ma = Mps::from_dense(a, n), mb = Mps::from_dense(b, n);
      apply_circuit(ma, c, theta, TruncationSettings::exact());
      const Vector va = oracle::circuit_unitary(c, theta) * a;
      worst = std::max(worst, (oracle::mps_dense(ma) - va).norm());
      // Long-range gate in both orientations.
      const Matrix g = oracle::random_unitary(4, seed + 3);
      if (n >= 3) {
        apply_gate_long_range(mb, 0, n - 1, g, TruncationSettings::exact());
        const Vector vb = oracle::embed2(n, 0, n - 1, g) * b;
        worst = std::max(worst, (oracle::mps_dense(mb) - vb).norm());
        worst = std::max(worst, std::abs(overlap(ma, mb) - va.dot(vb)));
        for (std::size_t i = 0; i < n; ++i) {
          const Matrix op = oracle::random_matrix(2, 2, seed + 10 + i);
          const Matrix herm = op + op.adjoint();
          worst = std::max(worst, std::abs(local_expectation(mb, i, herm) - vb.dot(oracle::embed1(n, i, herm) * vb)));
        }
        const cplx ref = vb.dot(oracle::embed1(n, 0, pauli::x()) * oracle::embed1(n, n - 1, pauli::y()) * vb);
        worst = std::max(worst, std::abs(two_point_correlator(mb, 0, n - 1, pauli::x(), pauli::y()) - ref));
      }
    }
  return {worst <= 1e-9, "max deviation from dense " + fmt(worst)};
}

// ---- 2 ----------------------------------------------------------------------------

Outcome c2_gradient() {
  const std::size_t n = 6;
  DatasetMeta m;
  m.spec = heisenberg(n, 0.5);
  m.spec.disorder_seed = 3;
  m.t = 0.3;
  m.dt = 0.01;
  m.trunc = TruncationSettings::exact();
  m.ensemble.seed = 17;
  const auto data = generate_dataset(m, 4);
  double worst = 0.0, worst_abs = 0.0, smallest = 1e300;
  for (bool ti : {true, false}) {
    const auto c = brickwall_1d(n, 3, ti);
    for (std::uint64_t draw = 0; draw < 20; ++draw) {
      const auto theta = oracle::random_vector(c.num_params(), 0.5, 500 + draw + (ti ? 0 : 100));
      const auto cg = cost_and_gradient(data, c, theta, TruncationSettings::exact());
      auto f = [&](const std::vector<double>& x) { return empirical_risk(data, c, x, TruncationSettings::exact()).cost; };
      // Richardson-extrapolated central differences: truncation error O(h^4).
      const auto g1 = oracle::fd_gradient(f, theta, 2e-3);
      const auto g2 = oracle::fd_gradient(f, theta, 1e-3);
      for (std::size_t k = 0; k < theta.size(); ++k) {
        const double fd = (4.0 * g2[k] - g1[k]) / 3.0;
        const double err = std::abs(cg.gradient[k] - fd);
        // Relative error; components below 1e-6 are compared on an absolute 1e-11 scale instead.
        worst = std::max(worst, err / std::max(std::abs(fd), 1e-6));
        worst_abs = std::max(worst_abs, err);
        smallest = std::min(smallest, std::abs(fd));
      }
    }
  }
  return {worst <= 1e-5, "max relative error " + fmt(worst) + " (max abs " + fmt(worst_abs) + ", smallest |g| " +
                             fmt(smallest) + ", 40 draws)"};
}

// ---- 3 ----------------------------------------------------------------------------

Outcome c3_haar_identity() {
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    const std::size_t n = 1 + k % 5;
    const std::size_t dim = std::size_t{1} << n;
    const Matrix u = oracle::random_unitary(dim, 7000 + k);
    // Mix near and far pairs so both small and large infidelities are covered.
    const Matrix h = oracle::random_matrix(dim, dim, 8000 + k);
    const Matrix v = k % 2 ? oracle::random_unitary(dim, 9000 + k)
                           : Matrix(u * oracle::expm_series(cplx(0, -0.01 * (1 + k % 7)) * (h + h.adjoint())));
    const double nn = static_cast<double>(dim);
    worst = std::max(worst, std::abs(unitary_infidelity(u, v) - (nn + 1.0) / nn * (1.0 - haar_average_fidelity(u, v))));
  }
  const Matrix u = oracle::random_unitary(8, 1), v = oracle::random_unitary(8, 2);
  EnsembleSpec haar;
  haar.kind = EnsembleKind::haar;
  haar.seed = 2024;
  const auto mc = expected_risk_mc(u, v, haar, 100000);
  const double exact = 1.0 - haar_average_fidelity(u, v);
  const double z = std::abs(mc.mean - exact) / mc.stderr_;
  return {worst <= 1e-12 && z <= 3.0, "identity residual " + fmt(worst) + "; MC Haar risk " + fmt(mc.mean, 6) +
                                          " vs " + fmt(exact, 6) + " (" + fmt(z, 2) + " sigma)"};
}

// ---- 4 ----------------------------------------------------------------------------

Outcome c4_prop1() {
  std::size_t passed = 0;
  double min_margin = 1e300;
  std::string failures;
  for (std::size_t k = 0; k < 10; ++k) {
    const std::size_t n = k < 5 ? 4 : 6;
    const auto spec = ising(Lattice::chain(n), -1.0, 0.2 * static_cast<double>(k % 3));
    const double t = 0.1 + 0.05 * static_cast<double>(k);
    const Matrix u = dense_evolution_operator(spec, t);
    Matrix v;
    if (k % 2 == 0) {
      const auto tc = trotter_circuit(spec, t, builtin_scheme(1 + k % 4 / 2, term_groups(bond_terms(spec))), 1, false);
      v = circuit_to_dense(tc, {});
    } else {
      const auto c = brickwall_1d(n, 3, false);
      v = circuit_to_dense(c, oracle::random_vector(c.num_params(), 0.05 * static_cast<double>(k), 40 + k));
    }
    const auto r = prop1_bound_check(u, v, 2000, 300 + k);
    if (r.pass())
      ++passed;
    else
      failures += " #" + std::to_string(k);
    min_margin = std::min({min_margin, (r.lower_margin + r.slack) / std::max(r.haar_risk, 1e-300),
                           (r.upper_margin + r.slack) / std::max(r.haar_risk, 1e-300)});
  }
  return {passed == 10, std::to_string(passed) + "/10 instances satisfy both sides at 3 sigma" +
                            (failures.empty() ? "" : "; violated:" + failures) +
                            "; smallest margin/R_Haar " + fmt(min_margin)};
}

// ---- 5 ----------------------------------------------------------------------------

Outcome c5_trotter_order() {
  const auto spec = ising(Lattice::chain(4), -1.0, 0.0);
  const auto terms = bond_terms(spec);
  auto op_norm = [](const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues()(0); };
  bool ok = true;
  std::string detail;
  for (int p : {1, 2, 4}) {
    const auto scheme = builtin_scheme(p, term_groups(terms));
    const double dt = p == 4 ? 0.1 : 0.02;
    auto err = [&](double h) {
      return op_norm(circuit_to_dense(trotter_circuit(spec, h, scheme, 1, false), {}) -
                     dense_evolution_operator(spec, h));
    };
    const double ratio = err(dt) / err(dt / 2.0);
    const double target = std::pow(2.0, p + 1);
    ok = ok && std::abs(ratio / target - 1.0) <= 0.1;
    detail += "p=" + std::to_string(p) + ": " + fmt(ratio, 4) + " (target " + fmt(target) + ")  ";
  }
  return {ok, detail};
}

// ---- 6 ----------------------------------------------------------------------------

Json c6_config() {
  return Json::parse(R"({
    "kind": "compile",
    "hamiltonian": {"family": "heisenberg", "lattice": {"type": "chain", "n": 8}, "h": 0.0},
    "time": 0.5,
    "ansatz": {"tau": 4, "translation_invariant": true},
    "dataset": {"train_size": 16, "test_size": 100, "seed": 6, "dt": 0.005},
    "optimizer": {"max_steps": 1000, "rate": 0.003},
    "warm_start": {"strategy": "double-time", "from": {"warm_start": {"strategy": "trotter", "order": 1}}}
  })");
}

Outcome c6_compilation() {
  auto cfg = c6_config();
  cfg["truncation"] = exact_truncation();
  if (run_config("c6", cfg) != 0) return {false, "compile run failed"};
  const auto s = out_json("c6", "summary.json");
  const double risk = s["test_risk"].get<double>();
  const auto steps = s["steps"].get<std::size_t>();
  return {risk <= 1e-3 && steps <= 1000, "test risk " + fmt(risk) + " after " + std::to_string(steps) +
                                             " steps (best at " + std::to_string(s["best_step"].get<std::size_t>()) +
                                             ", " + s["stop_reason"].get<std::string>() + ")"};
}

// ---- 7 ----------------------------------------------------------------------------

Outcome c7_resources() {
  Json cfg = Json::parse(R"({
    "kind": "compile",
    "hamiltonian": {"family": "ising", "lattice": {"type": "chain", "n": 8}, "g": -1.0, "kappa": 0.0},
    "time": 0.5,
    "ansatz": {"tau": 4, "translation_invariant": true},
    "dataset": {"train_size": 16, "test_size": 100, "seed": 7, "dt": 0.005},
    "optimizer": {"max_steps": 1000, "rate": 0.003},
    "warm_start": {"strategy": "double-time", "from": {"warm_start": {"strategy": "trotter", "order": 1}}}
  })");
  cfg["truncation"] = exact_truncation();
  if (run_config("c7_compile", cfg) != 0) return {false, "compile run failed"};

  Json rc = cfg;
  rc["kind"] = "resource-compare";
  rc.erase("warm_start");
  rc["resource_compare"] = {
      {"test_size", 100},
      {"seed", 70},
      {"rows", Json::array({{{"method", "vqc"}, {"label", "vqc-tau4"}, {"checkpoint", "../c7_compile/out/checkpoint.json"}},
                            {{"method", "trotter"}, {"order", 2}, {"steps", {1, 2, 3, 4}}, {"folded", false},
                             {"label", "trotter-unfolded"}},
                            {{"method", "trotter"}, {"order", 2}, {"steps", {1, 2, 3, 4}}, {"folded", true},
                             {"label", "trotter-folded"}},
                            {{"method", "identity"}}})}};
  if (run_config("c7_compare", rc) != 0) return {false, "resource-compare run failed"};
  const auto rows = out_json("c7_compare", "resource_compare.json")["rows"];
  const Json* vqc = nullptr;
  for (const auto& r : rows)
    if (r["method"] == "vqc") vqc = &r;
  if (!vqc) return {false, "no vqc row"};
  const auto vqc_cnots = (*vqc)["resources"]["cnots"].get<std::size_t>();
  const double vqc_inf = (*vqc)["exact_infidelity"].get<double>();
  // The cheapest order-2 Trotter circuit of each gate accounting that spends at least as many CNOTs.
  bool ok = true;
  std::string detail = "VQC " + std::to_string(vqc_cnots) + " CNOTs, infidelity " + fmt(vqc_inf);
  for (const std::string label : {"trotter-unfolded", "trotter-folded"}) {
    const Json* best = nullptr;
    for (const auto& r : rows)
      if (r["label"].get<std::string>().rfind(label, 0) == 0 && r["resources"]["cnots"].get<std::size_t>() >= vqc_cnots &&
          (!best || r["resources"]["cnots"] < (*best)["resources"]["cnots"]))
        best = &r;
    if (!best) return {false, "no " + label + " row with enough CNOTs"};
    const double inf = (*best)["exact_infidelity"].get<double>();
    ok = ok && vqc_inf < inf;
    detail += "; " + (*best)["label"].get<std::string>() + " " + std::to_string((*best)["resources"]["cnots"].get<std::size_t>()) +
              " CNOTs, infidelity " + fmt(inf);
  }
  return {ok, detail};
}

// ---- 8 ----------------------------------------------------------------------------

Outcome c8_long_time() {
  Json cfg = Json::parse(R"({
    "kind": "compile",
    "hamiltonian": {"family": "heisenberg", "lattice": {"type": "chain", "n": 12}, "h": 0.0},
    "time": 0.1,
    "ansatz": {"tau": 4, "translation_invariant": true},
    "dataset": {"train_size": 16, "test_size": 100, "seed": 8, "dt": 0.001},
    "optimizer": {"max_steps": 1000, "rate": 0.001},
    "warm_start": {"strategy": "trotter", "order": 2}
  })");
  cfg["truncation"] = exact_truncation();
  if (run_config("c8_compile", cfg) != 0) return {false, "compile run failed"};
  const double risk = out_json("c8_compile", "summary.json")["test_risk"].get<double>();

  Json dyn = cfg;
  dyn["kind"] = "dynamics";
  dyn.erase("warm_start");
  dyn["dynamics"] = {{"checkpoint", "../c8_compile/out/checkpoint.json"},
                     {"total_time", 20.0},
                     {"initial_state", "domain"},
                     {"reference", true},
                     {"reference_dt", 0.005},
                     {"observables_every", 10}};
  if (run_config("c8_dynamics", dyn) != 0) return {false, "dynamics run failed"};
  const auto d = out_json("c8_dynamics", "dynamics.json");
  const double fid = d["final_fidelity"].get<double>(), min_fid = d["min_fidelity"].get<double>();
  const double drift = d["max_total_z_drift"].get<double>();
  const double ref_drift = d["max_reference_total_z_drift"].get<double>();
  return {min_fid >= 0.98 && drift <= 1e-6, "compiled test risk " + fmt(risk) + "; fidelity vs TEBD final " + fmt(fid, 5) +
                                                 ", min " + fmt(min_fid, 5) + "; max total-Z drift of the circuit trace " +
                                                 fmt(drift) + " (TEBD reference " + fmt(ref_drift) + ")"};
}

// ---- 9 ----------------------------------------------------------------------------

Outcome c9_per_site() {
  std::vector<double> per_site;
  std::string detail;
  for (std::size_t n : {8, 12, 16}) {
    Json cfg = Json::parse(R"({
      "kind": "compile",
      "hamiltonian": {"family": "ising", "lattice": {"type": "chain", "n": 8}, "g": 0.0, "kappa": 0.2},
      "time": 1.0,
      "ansatz": {"tau": 4, "translation_invariant": true},
      "dataset": {"train_size": 16, "test_size": 50, "seed": 9, "dt": 0.01},
      "truncation": {"chi_max": 128, "cutoff": 1e-12},
      "optimizer": {"max_steps": 600, "rate": 0.003},
      "warm_start": {"strategy": "double-time", "from": {"warm_start": {"strategy": "near-identity", "scale": 0.01}}}
    })");
    cfg["hamiltonian"]["lattice"]["n"] = n;
    const std::string name = "c9_n" + std::to_string(n);
    if (run_config(name, cfg) != 0) return {false, "compile run failed for n=" + std::to_string(n)};
    const auto s = out_json(name, "summary.json");
    per_site.push_back(s["per_site_test_risk"].get<double>());
    detail += "n=" + std::to_string(n) + ": " + fmt(per_site.back()) + "  ";
  }
  const double ratio = std::max(per_site[1], per_site[2]) / std::min(per_site[1], per_site[2]);
  return {ratio < 2.0, detail + "(n=12 vs 16 ratio " + fmt(ratio) + ")"};
}

// ---- 10 ---------------------------------------------------------------------------

Outcome c10_u1() {
  const auto lc = u1_light_cone_test(6, 1, 500, 10);
  double cone_dev = 0.0;
  for (std::size_t i = lc.untouched_from; i < 6; ++i) cone_dev = std::max(cone_dev, std::abs(lc.mean_z[i] - 1.0));
  const bool cone_ok = cone_dev <= 1e-12;

  std::vector<double> risks;
  for (const std::string kind : {"product", "u1"}) {
    Json cfg = Json::parse(R"({
      "kind": "compile",
      "hamiltonian": {"family": "heisenberg", "lattice": {"type": "chain", "n": 8}, "h": 0.0},
      "time": 0.5,
      "ansatz": {"tau": 4, "translation_invariant": true},
      "dataset": {"train_size": 16, "test_size": 100, "seed": 10, "dt": 0.005},
      "optimizer": {"max_steps": 500, "rate": 0.01},
      "warm_start": {"strategy": "near-identity", "scale": 0.01}
    })");
    cfg["truncation"] = exact_truncation();
    if (kind == "u1") cfg["dataset"]["ensemble"] = {{"kind", "u1-rqc"}, {"depth", 2}, {"charge", 4}};
    if (run_config("c10_" + kind, cfg) != 0) return {false, "compile run failed (" + kind + ")"};
    risks.push_back(out_json("c10_" + kind, "summary.json")["test_risk"].get<double>());
  }
  return {cone_ok && risks[1] > risks[0], "light-cone deviation " + fmt(cone_dev) + " beyond site " +
                                              std::to_string(lc.untouched_from) + "; product-state test risk: trained on product " +
                                              fmt(risks[0]) + ", trained on U(1) RQC " + fmt(risks[1])};
}

// ---- 11 ---------------------------------------------------------------------------

Outcome c11_local_global() {
  std::map<std::pair<std::size_t, std::string>, double> cost;
  for (std::size_t tau : {2, 4, 8})
    for (const std::string method : {"global", "local"}) {
      Json cfg = Json::parse(R"({
        "kind": "compile",
        "hamiltonian": {"family": "ising", "lattice": {"type": "strip", "lx": 4, "ly": 4, "periodic_x": false},
                        "g": -1.0, "kappa": 0.0},
        "time": 0.5,
        "ansatz": {"translation_invariant": true},
        "dataset": {"train_size": 4, "test_size": 0, "seed": 11, "dt": 0.01},
        "truncation": {"chi_max": 128, "cutoff": 1e-12},
        "circuit_truncation": {"chi_max": 128, "cutoff": 1e-8},
        "optimizer": {"max_steps": 200, "rate": 0.01, "patience": 0},
        "warm_start": {"strategy": "near-identity", "scale": 0.01}
      })");
      cfg["ansatz"]["tau"] = tau;
      cfg["optimizer"]["method"] = method;
      // Global converges within 200 steps; the sweep runs until it stalls.
      if (method == "local") {
        cfg["optimizer"]["max_steps"] = 2000;
        cfg["optimizer"]["patience"] = 50;
      }
      const std::string name = "c11_tau" + std::to_string(tau) + "_" + method;
      if (run_config(name, cfg) != 0) return {false, "run " + name + " failed"};
      cost[{tau, method}] = out_json(name, "summary.json")["train_risk"].get<double>();
    }
  bool ok = cost[{8, "global"}] <= cost[{8, "local"}];
  std::string detail;
  for (std::size_t tau : {2, 4, 8}) {
    const double g = cost[{tau, "global"}], l = cost[{tau, "local"}];
    if (tau <= 4) ok = ok && std::max(g, l) <= 2.0 * std::min(g, l);
    detail += "tau=" + std::to_string(tau) + " global " + fmt(g) + " local " + fmt(l) + "  ";
  }
  return {ok, detail};
}

// ---- 12 ---------------------------------------------------------------------------

Outcome c12_warm_start() {
  Json base = Json::parse(R"({
    "kind": "compile",
    "hamiltonian": {"family": "ising", "lattice": {"type": "chain", "n": 16}, "g": 1.0, "kappa": 0.0},
    "time": 1.0,
    "ansatz": {"tau": 8, "translation_invariant": true},
    "dataset": {"train_size": 16, "test_size": 50, "seed": 12, "dt": 0.01},
    "truncation": {"chi_max": 128, "cutoff": 1e-12},
    "optimizer": {"max_steps": 200, "rate": 0.01, "patience": 0}
  })");
  Json cold = base;
  cold["warm_start"] = {{"strategy", "near-identity"}, {"scale", 0.01}};
  Json warm = base;
  warm["warm_start"] = Json::parse(R"({"strategy": "double-time",
      "from": {"warm_start": {"strategy": "double-time",
               "from": {"warm_start": {"strategy": "trotter", "order": 1}}}}})");
  if (run_config("c12_cold", cold) != 0) return {false, "cold run failed"};
  if (run_config("c12_warm", warm) != 0) return {false, "warm run failed"};
  const double c = out_json("c12_cold", "summary.json")["test_risk"].get<double>();
  const double w = out_json("c12_warm", "summary.json")["test_risk"].get<double>();
  return {c > 0.5 && w < 0.1, "after 200 steps: near-identity test risk " + fmt(c) + ", double-time " + fmt(w)};
}

// ---- 13 ---------------------------------------------------------------------------

std::vector<std::string> outputs_of(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = e.path().extension();
    if ((ext == ".csv" || ext == ".json") && e.path().filename() != "timing.csv") files.push_back(e.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

Outcome c13_reproducible(const std::set<std::string>& ran) {
  // Every run executed above is repeated from its stored config into a sibling directory.
  std::size_t runs = 0, files = 0;
  std::string mismatched;
  for (const auto& name : ran) {
    const fs::path dir = fs::path(workdir) / name;
    if (!fs::exists(dir / "config.json")) continue;
    const std::string again = (fs::path(workdir) / "repeat" / name).string();
    fs::remove_all(again);
    fs::create_directories(again);
    std::ofstream log(again + "/log.txt");
    // Base directory stays the original one so relative checkpoint paths resolve identically.
    const int rc = run_experiment(read_json_file((dir / "config.json").string()), dir.string(), again + "/out", log);
    if (rc != 0) return {false, "re-run of " + name + " exited with " + std::to_string(rc)};
    const auto a = outputs_of((dir / "out").string());
    const auto b = outputs_of(again + "/out");
    if (a.size() != b.size()) mismatched += " " + name + "(file set)";
    for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
      ++files;
      if (read_file(a[k]) != read_file(b[k])) mismatched += " " + name + "/" + fs::path(a[k]).filename().string();
    }
    ++runs;
  }
  if (runs == 0) return {false, "no config-driven runs to repeat"};
  return {mismatched.empty(), std::to_string(runs) + " runs, " + std::to_string(files) + " CSV/JSON files compared" +
                                  (mismatched.empty() ? ", all byte-identical" : "; differing:" + mismatched)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  workdir = (fs::temp_directory_path() / "qdc_acceptance").string();
  std::string only;
  app.add_option("--workdir", workdir, "directory for run configs and outputs");
  app.add_option("--only", only, "comma-separated criterion numbers");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) selected.insert(std::stoi(tok));
  auto wanted = [&](int k) { return selected.empty() || selected.count(k); };
  fs::create_directories(workdir);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, c1_dense_equivalence}, {2, c2_gradient},     {3, c3_haar_identity},   {4, c4_prop1},
      {5, c5_trotter_order},     {6, c6_compilation},  {7, c7_resources},       {8, c8_long_time},
      {9, c9_per_site},          {10, c10_u1},         {11, c11_local_global},  {12, c12_warm_start},
  };
  int failures = 0;
  Json summary = Json::object();
  auto report = [&](int k, const Outcome& o, double seconds) {
    std::cout << "C" << k << " " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail << "  [" << fmt(seconds, 3) << " s]"
              << std::endl;
    summary[std::to_string(k)] = {{"pass", o.pass}, {"detail", o.detail}};
    if (!o.pass) ++failures;
  };
  for (const auto& [k, fn] : criteria) {
    if (!wanted(k)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(k, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  if (wanted(13)) {
    std::set<std::string> ran;
    for (const auto& e : fs::directory_iterator(workdir))
      if (e.is_directory() && e.path().filename() != "repeat" && fs::exists(e.path() / "config.json"))
        ran.insert(e.path().filename().string());
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c13_reproducible(ran);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report(13, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  write_json_file(workdir + "/acceptance.json", summary);
  return failures == 0 ? 0 : 1;
}
