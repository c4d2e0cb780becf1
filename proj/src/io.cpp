#include "qdc/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qdc/errors.hpp"

namespace qdc {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

const Json& require(const Json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string(what) + ": missing field '" + key + "'");
  return j.at(key);
}

void check_schema(const Json& j, const char* schema) {
  if (!j.is_object() || !j.contains("schema") || j.at("schema") != schema)
    throw ConfigError(std::string("expected a document with schema '") + schema + "'");
}

void append_le(std::vector<unsigned char>& out, double x) {
  auto bits = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xffu));
}

double read_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string base64_encode(const std::vector<unsigned char>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
  int table[256];
  std::fill(std::begin(table), std::end(table), -1);
  for (int k = 0; k < 64; ++k) table[static_cast<unsigned char>(kAlphabet[k])] = k;
  std::vector<unsigned char> out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char ch : text) {
    if (ch == '=') break;
    const int v = table[static_cast<unsigned char>(ch)];
    if (v < 0) throw ConfigError("base64: invalid character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<unsigned char>((acc >> bits) & 0xffu));
    }
  }
  return out;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    f << content;
    if (!f) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& doc) { write_file_atomic(path, doc.dump(2) + "\n"); }

Json lattice_to_json(const Lattice& l) {
  if (l.is_chain()) return {{"type", "chain"}, {"n", l.size()}};
  return {{"type", "strip"}, {"lx", l.lx()}, {"ly", l.ly()}, {"periodic_x", l.periodic_x()}};
}

Lattice lattice_from_json(const Json& j) {
  try {
    const auto type = require(j, "type", "lattice").get<std::string>();
    if (type == "chain") return Lattice::chain(require(j, "n", "lattice").get<std::size_t>());
    if (type == "strip")
      return Lattice::strip(require(j, "lx", "lattice").get<std::size_t>(), require(j, "ly", "lattice").get<std::size_t>(),
                            get_or<bool>(j, "periodic_x", true));
    throw ConfigError("lattice: unknown type '" + type + "'");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("lattice: ") + e.what());
  }
}

Json hamiltonian_to_json(const HamiltonianSpec& s) {
  Json j = {{"family", to_string(s.family)}, {"lattice", lattice_to_json(s.lattice)}};
  if (s.family == ModelFamily::heisenberg) {
    j["h"] = s.h;
    j["disorder_seed"] = s.disorder_seed;
  } else {
    j["g"] = s.g;
    j["kappa"] = s.kappa;
  }
  return j;
}

HamiltonianSpec hamiltonian_from_json(const Json& j) {
  try {
    HamiltonianSpec s;
    s.family = model_family_from_string(require(j, "family", "hamiltonian").get<std::string>());
    s.lattice = lattice_from_json(require(j, "lattice", "hamiltonian"));
    s.h = get_or<double>(j, "h", 0.0);
    s.disorder_seed = get_or<std::uint64_t>(j, "disorder_seed", 0);
    s.g = get_or<double>(j, "g", 0.0);
    s.kappa = get_or<double>(j, "kappa", 0.0);
    if (s.h < 0.0) throw ConfigError("hamiltonian: disorder strength h must be non-negative");
    return s;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("hamiltonian: ") + e.what());
  }
}

Json truncation_to_json(const TruncationSettings& t) {
  return {{"chi_max", t.max_bond}, {"cutoff", t.cutoff}, {"hard_cap", t.hard_cap}};
}

TruncationSettings truncation_from_json(const Json& j) {
  TruncationSettings t;
  if (j.is_null()) return t;
  try {
    t.max_bond = get_or<std::size_t>(j, "chi_max", t.max_bond);
    t.cutoff = get_or<double>(j, "cutoff", t.cutoff);
    t.hard_cap = get_or<std::size_t>(j, "hard_cap", t.hard_cap);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("truncation: ") + e.what());
  }
  if (t.max_bond < 1 || t.cutoff < 0.0) throw ConfigError("truncation: chi_max must be >= 1 and cutoff >= 0");
  return t;
}

Json ensemble_to_json(const EnsembleSpec& e) {
  Json j = {{"kind", to_string(e.kind)}, {"seed", e.seed}};
  if (e.kind == EnsembleKind::computational_basis) j["basis"] = e.basis;
  if (e.kind == EnsembleKind::u1_rqc) {
    j["depth"] = e.depth;
    j["charge"] = e.charge;
  }
  return j;
}

EnsembleSpec ensemble_from_json(const Json& j) {
  EnsembleSpec e;
  if (j.is_null()) return e;
  try {
    e.kind = ensemble_kind_from_string(get_or<std::string>(j, "kind", "product"));
    e.seed = get_or<std::uint64_t>(j, "seed", 0);
    e.basis = get_or<std::string>(j, "basis", "");
    e.depth = get_or<std::size_t>(j, "depth", 0);
    e.charge = get_or<std::size_t>(j, "charge", 0);
  } catch (const Json::exception& ex) {
    throw ConfigError(std::string("ensemble: ") + ex.what());
  }
  return e;
}

Json mps_to_json(const Mps& state, const TruncationSettings& trunc) {
  Json sites = Json::array();
  for (std::size_t i = 0; i < state.size(); ++i) {
    const auto& t = state.site(i);
    std::vector<unsigned char> bytes;
    bytes.reserve(t.size() * 16);
    for (const cplx& z : t.data()) {
      append_le(bytes, z.real());
      append_le(bytes, z.imag());
    }
    sites.push_back({{"shape", t.shape()}, {"data", base64_encode(bytes)}});
  }
  Json j = {{"schema", kMpsSchema},
            {"n", state.size()},
            {"chi_max", trunc.max_bond},
            {"cutoff", trunc.cutoff},
            {"discarded_weight", state.discarded_weight()},
            {"sites", sites}};
  j["seed"] = state.seed() ? Json(*state.seed()) : Json(nullptr);
  j["center"] = state.center() ? Json(*state.center()) : Json(nullptr);
  return j;
}

Mps mps_from_json(const Json& j) {
  check_schema(j, kMpsSchema);
  try {
    const auto n = require(j, "n", "mps").get<std::size_t>();
    const auto& sites_json = require(j, "sites", "mps");
    if (!sites_json.is_array() || sites_json.size() != n) throw ConfigError("mps: site count does not match n");
    std::vector<ComplexTensor> sites;
    for (const auto& s : sites_json) {
      const auto shape = require(s, "shape", "mps site").get<std::vector<std::size_t>>();
      const auto bytes = base64_decode(require(s, "data", "mps site").get<std::string>());
      std::size_t count = 1;
      for (auto e : shape) count *= e;
      if (bytes.size() != count * 16) throw ConfigError("mps: site data length does not match its shape");
      std::vector<cplx> data(count);
      for (std::size_t k = 0; k < count; ++k) data[k] = {read_le(&bytes[16 * k]), read_le(&bytes[16 * k + 8])};
      sites.emplace_back(shape, std::move(data));
    }
    std::optional<std::size_t> center;
    if (j.contains("center") && !j.at("center").is_null()) center = j.at("center").get<std::size_t>();
    Mps m(std::move(sites), center, get_or<double>(j, "discarded_weight", 0.0));
    if (j.contains("seed") && !j.at("seed").is_null()) m.set_seed(j.at("seed").get<std::uint64_t>());
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("mps: ") + e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("mps: ") + e.what());
  }
}

Json dataset_to_json(const TrainingDataset& data) {
  Json samples = Json::array();
  for (const auto& s : data.samples)
    samples.push_back({{"input", mps_to_json(s.input, data.meta.trunc)},
                       {"target", mps_to_json(s.target, data.meta.trunc)},
                       {"discarded_weight", s.discarded_weight}});
  return {{"schema", kDatasetSchema},
          {"role", data.meta.role},
          {"hamiltonian", hamiltonian_to_json(data.meta.spec)},
          {"t", data.meta.t},
          {"dt", data.meta.dt},
          {"truncation", truncation_to_json(data.meta.trunc)},
          {"ensemble", ensemble_to_json(data.meta.ensemble)},
          {"size", data.size()},
          {"max_discarded_weight", data.max_discarded_weight()},
          {"samples", samples}};
}

TrainingDataset dataset_from_json(const Json& j) {
  check_schema(j, kDatasetSchema);
  try {
    TrainingDataset d;
    d.meta.role = get_or<std::string>(j, "role", "train");
    d.meta.spec = hamiltonian_from_json(require(j, "hamiltonian", "dataset"));
    d.meta.t = require(j, "t", "dataset").get<double>();
    d.meta.dt = get_or<double>(j, "dt", 1e-3);
    d.meta.trunc = truncation_from_json(j.value("truncation", Json()));
    d.meta.ensemble = ensemble_from_json(j.value("ensemble", Json()));
    for (const auto& s : require(j, "samples", "dataset")) {
      Sample smp;
      smp.input = mps_from_json(require(s, "input", "dataset sample"));
      smp.target = mps_from_json(require(s, "target", "dataset sample"));
      smp.discarded_weight = get_or<double>(s, "discarded_weight", 0.0);
      if (smp.input.size() != d.meta.spec.size() || smp.target.size() != d.meta.spec.size())
        throw ConfigError("dataset: sample size does not match the Hamiltonian");
      d.samples.push_back(std::move(smp));
    }
    return d;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
}

Json circuit_to_json(const CircuitCheckpoint& cp) {
  const Circuit& c = cp.circuit;
  Json layers = Json::array();
  for (const auto& l : c.layers) {
    Json gates = Json::array();
    for (const auto& g : l.gates) {
      if (!g.block) throw std::invalid_argument("circuit checkpoint: frozen gates cannot be stored");
      gates.push_back({g.first, g.second, *g.block});
    }
    layers.push_back({{"color", l.color}, {"gates", gates}});
  }
  Json layout = {{"n", c.n}, {"tau", c.depth()}, {"layers", layers}};
  layout["lattice"] = c.lattice ? lattice_to_json(*c.lattice) : Json(nullptr);
  Json theta = Json::array();
  for (double x : cp.theta) theta.push_back(format_double(x));
  return {{"schema", kCircuitSchema},
          {"layout", layout},
          {"sharing",
           {{"translation_invariant", c.translation_invariant},
            {"blocks", c.num_blocks},
            {"params_per_block", kSu4Params},
            {"generators", "IX,IY,IZ,XI,XX,XY,XZ,YI,YX,YY,YZ,ZI,ZX,ZY,ZZ"}}},
          {"theta", theta},
          {"provenance", cp.provenance}};
}

CircuitCheckpoint circuit_from_json(const Json& j) {
  check_schema(j, kCircuitSchema);
  try {
    CircuitCheckpoint cp;
    const auto& layout = require(j, "layout", "circuit");
    const auto& sharing = require(j, "sharing", "circuit");
    Circuit& c = cp.circuit;
    c.n = require(layout, "n", "circuit layout").get<std::size_t>();
    c.translation_invariant = require(sharing, "translation_invariant", "circuit sharing").get<bool>();
    c.num_blocks = require(sharing, "blocks", "circuit sharing").get<std::size_t>();
    if (layout.contains("lattice") && !layout.at("lattice").is_null()) c.lattice = lattice_from_json(layout.at("lattice"));
    for (const auto& lj : require(layout, "layers", "circuit layout")) {
      CircuitLayer l;
      l.color = get_or<int>(lj, "color", -1);
      for (const auto& gj : require(lj, "gates", "circuit layer")) {
        CircuitGate g;
        g.first = gj.at(0).get<std::size_t>();
        g.second = gj.at(1).get<std::size_t>();
        g.block = gj.at(2).get<std::size_t>();
        l.gates.push_back(g);
      }
      c.layers.push_back(std::move(l));
    }
    c.validate();
    for (const auto& t : require(j, "theta", "circuit")) {
      const auto s = t.get<std::string>();
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used != s.size()) throw ConfigError("circuit: malformed parameter '" + s + "'");
      cp.theta.push_back(x);
    }
    if (cp.theta.size() != c.num_params()) throw ConfigError("circuit: parameter count does not match the layout");
    cp.provenance = j.value("provenance", Json::object());
    return cp;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("circuit: ") + e.what());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("circuit: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("circuit: ") + e.what());
  }
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::string out = "step,train_cost,test_cost,grad_norm\n";
  for (const auto& r : rows) {
    out += std::to_string(r.step) + "," + format_double(r.train_cost) + ",";
    if (r.test_cost) out += format_double(*r.test_cost);
    out += "," + format_double(r.grad_norm) + "\n";
  }
  return out;
}

std::string timing_csv(const std::vector<HistoryRow>& rows) {
  std::string out = "step,wall_seconds\n";
  for (const auto& r : rows) out += std::to_string(r.step) + "," + format_double(r.wall_seconds) + "\n";
  return out;
}

}  // namespace qdc
