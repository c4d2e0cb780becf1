#include "qdc/trotter.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "qdc/errors.hpp"

namespace qdc {

namespace {

void push_merged(std::vector<TrotterStage>& out, TrotterStage s) {
  if (!out.empty() && out.back().group == s.group)
    out.back().coefficient += s.coefficient;
  else
    out.push_back(s);
}

std::vector<TrotterStage> strang_stages(const std::vector<int>& groups, double x) {
  std::vector<TrotterStage> out;
  for (std::size_t k = 0; k + 1 < groups.size(); ++k) push_merged(out, {groups[k], x / 2});
  push_merged(out, {groups.back(), x});
  for (std::size_t k = groups.size() - 1; k-- > 0;) push_merged(out, {groups[k], x / 2});
  return out;
}

void require_groups(const std::vector<int>& groups) {
  if (groups.empty()) throw std::invalid_argument("Trotter scheme: no term groups");
}

// Greedy packing of pairwise-commuting gates into layers with disjoint supports.
std::vector<std::vector<CircuitGate>> pack_layers(const std::vector<CircuitGate>& gates, std::size_t n) {
  std::vector<std::vector<CircuitGate>> layers;
  std::vector<std::vector<bool>> used;
  for (const auto& g : gates) {
    std::size_t l = 0;
    for (; l < layers.size(); ++l)
      if (!used[l][g.first] && !used[l][g.second]) break;
    if (l == layers.size()) {
      layers.emplace_back();
      used.emplace_back(n, false);
    }
    layers[l].push_back(g);
    used[l][g.first] = used[l][g.second] = true;
  }
  return layers;
}

GateKind gate_kind(const HamiltonianSpec& spec, const Term& t, bool folded) {
  if (!t.two_site()) return GateKind::local;
  if (t.kind == TermKind::next_nearest) return GateKind::nnn_xx;
  if (!folded && spec.family == ModelFamily::ising) return GateKind::nn_xx;
  return GateKind::su4;
}

}  // namespace

TrotterScheme lie_scheme(const std::vector<int>& groups) {
  require_groups(groups);
  TrotterScheme s;
  s.order = 1;
  for (int g : groups) s.stages.push_back({g, 1.0});
  return s;
}

TrotterScheme strang_scheme(const std::vector<int>& groups) {
  require_groups(groups);
  TrotterScheme s;
  s.order = 2;
  s.stages = strang_stages(groups, 1.0);
  return s;
}

TrotterScheme suzuki4_scheme(const std::vector<int>& groups) {
  require_groups(groups);
  const double s = 1.0 / (4.0 - std::cbrt(4.0));
  TrotterScheme out;
  out.order = 4;
  for (double x : {s, s, 1.0 - 4.0 * s, s, s})
    for (const auto& st : strang_stages(groups, x)) push_merged(out.stages, st);
  return out;
}

TrotterScheme builtin_scheme(int order, const std::vector<int>& groups) {
  switch (order) {
    case 1: return lie_scheme(groups);
    case 2: return strang_scheme(groups);
    case 4: return suzuki4_scheme(groups);
    default: throw ConfigError("no built-in Trotter scheme of order " + std::to_string(order));
  }
}

TrotterScheme parse_trotter_scheme(const std::string& text) {
  static const std::regex stage_re(R"(^\s*\(?\s*(-?\d+)\s*,\s*([-+0-9.eE]+)\s*\)?\s*$)");
  static const std::regex order_re(R"(^\s*#\s*order\s+(\d+)\s*$)");
  TrotterScheme s;
  s.provenance = "external";
  s.order = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::smatch m;
    if (std::regex_match(line, m, order_re)) {
      s.order = std::stoi(m[1]);
      continue;
    }
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!std::regex_match(line, m, stage_re))
      throw ConfigError("Trotter coefficient file: cannot parse line " + std::to_string(lineno) + ": " + line);
    try {
      s.stages.push_back({std::stoi(m[1]), std::stod(m[2])});
    } catch (const std::exception&) {
      throw ConfigError("Trotter coefficient file: bad number on line " + std::to_string(lineno));
    }
  }
  if (s.stages.empty()) throw ConfigError("Trotter coefficient file: no stages");
  return s;
}

TrotterScheme load_trotter_scheme(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open Trotter coefficient file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  auto s = parse_trotter_scheme(ss.str());
  s.provenance = "external:" + path;
  return s;
}

void validate_scheme(const TrotterScheme& scheme, const std::vector<int>& groups) {
  std::map<int, double> sums;
  for (const auto& st : scheme.stages) sums[st.group] += st.coefficient;
  const std::set<int> expected(groups.begin(), groups.end());
  for (const auto& [g, sum] : sums) {
    if (!expected.count(g)) throw ConfigError("Trotter scheme: group " + std::to_string(g) + " has no terms");
    if (std::abs(sum - 1.0) > 1e-10)
      throw ConfigError("Trotter scheme: coefficients of group " + std::to_string(g) + " sum to " +
                        std::to_string(sum) + ", expected 1");
  }
  for (int g : expected)
    if (!sums.count(g)) throw ConfigError("Trotter scheme: group " + std::to_string(g) + " missing");
}

std::vector<TrotterStage> repeated_stages(const TrotterScheme& scheme, std::size_t steps) {
  std::vector<TrotterStage> out;
  for (std::size_t k = 0; k < steps; ++k)
    for (const auto& st : scheme.stages) push_merged(out, st);
  return out;
}

Circuit trotter_circuit(const HamiltonianSpec& spec, double dt, const TrotterScheme& scheme, std::size_t steps,
                        bool folded) {
  const auto terms = folded ? folded_terms(spec) : bond_terms(spec);
  validate_scheme(scheme, term_groups(terms));
  Circuit c;
  c.n = spec.size();
  c.lattice = spec.lattice;
  std::map<std::pair<std::size_t, double>, std::size_t> cache;
  for (const auto& st : repeated_stages(scheme, steps)) {
    std::vector<CircuitGate> gates;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& t = terms[k];
      if (t.group != st.group) continue;
      const double tau = st.coefficient * dt;
      auto [it, inserted] = cache.try_emplace({k, tau}, c.fixed.size());
      if (inserted) c.fixed.push_back(hermitian_exponential(t.op, -tau));
      CircuitGate g;
      g.first = t.a;
      g.second = t.b;
      g.fixed = it->second;
      g.kind = gate_kind(spec, t, folded);
      gates.push_back(g);
    }
    for (auto& layer_gates : pack_layers(gates, c.n)) {
      CircuitLayer layer;
      layer.color = st.group;
      layer.gates = std::move(layer_gates);
      c.layers.push_back(std::move(layer));
    }
  }
  return c;
}

TebdReport tebd_evolve(Mps& state, const HamiltonianSpec& spec, double t, double dt,
                       const TruncationSettings& trunc) {
  if (t < 0.0) throw std::invalid_argument("tebd_evolve: t must be non-negative");
  if (!(dt > 0.0)) throw std::invalid_argument("tebd_evolve: dt must be positive");
  if (state.size() != spec.size()) throw ShapeError("tebd_evolve: state and Hamiltonian sizes differ");
  TebdReport rep;
  rep.max_bond = state.max_bond_dimension();
  if (t == 0.0) return rep;

  const auto terms = folded_terms(spec);
  const auto scheme = strang_scheme(term_groups(terms));
  auto whole = static_cast<std::size_t>(std::floor(t / dt + 1e-9));
  double rest = t - static_cast<double>(whole) * dt;
  if (rest <= 1e-12 * t) rest = 0.0;

  // (group, duration) sequence with adjacent equal groups merged across steps.
  std::vector<TrotterStage> seq;
  auto add_step = [&](double h) {
    for (const auto& st : scheme.stages) push_merged(seq, {st.group, st.coefficient * h});
  };
  for (std::size_t k = 0; k < whole; ++k) add_step(dt);
  if (rest > 0.0) add_step(rest);
  rep.steps = whole + (rest > 0.0 ? 1 : 0);

  std::map<std::pair<std::size_t, double>, Matrix> cache;
  for (const auto& st : seq) {
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& term = terms[k];
      if (term.group != st.group) continue;
      auto it = cache.find({k, st.coefficient});
      if (it == cache.end()) it = cache.emplace(std::pair{k, st.coefficient}, hermitian_exponential(term.op, -st.coefficient)).first;
      const auto r = term.b == term.a + 1 ? state.apply_two_site_gate(term.a, it->second, trunc)
                                          : apply_gate_long_range(state, term.a, term.b, it->second, trunc);
      rep.discarded_weight += r.discarded_weight;
    }
    rep.max_bond = std::max(rep.max_bond, state.max_bond_dimension());
  }
  return rep;
}

}  // namespace qdc
