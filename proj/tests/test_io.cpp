#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "qdc/errors.hpp"
#include "qdc/io.hpp"

using namespace qdc;

namespace {

std::string temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("qdc_io_" + name);
  std::filesystem::remove_all(p);
  return p.string();
}

}  // namespace

TEST(Io, FormatDoubleRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 1e300, 0.0}) EXPECT_EQ(std::stod(format_double(x)), x);
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Io, Base64RoundTrip) {
  std::vector<unsigned char> bytes;
  for (int k = 0; k < 257; ++k) {
    bytes.push_back(static_cast<unsigned char>(k * 37));
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  }
  EXPECT_EQ(base64_encode({'M', 'a'}), "TWE=");
  EXPECT_THROW(base64_decode("T!E="), ConfigError);
}

TEST(Io, MpsRoundTripIsBitExact) {
  Mps s = Mps::from_dense(oracle::random_state(32, 1), 5);
  s.set_seed(77);
  s.canonicalize(2);
  const Json j = mps_to_json(s, {64, 1e-10, 0});
  const Mps back = mps_from_json(j);
  EXPECT_EQ(back.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(back.site(i).shape(), s.site(i).shape());
    for (std::size_t k = 0; k < s.site(i).size(); ++k) EXPECT_EQ(back.site(i).data()[k], s.site(i).data()[k]);
  }
  EXPECT_EQ(back.seed(), std::optional<std::uint64_t>(77));
  EXPECT_EQ(back.center(), std::optional<std::size_t>(2));
  EXPECT_EQ(mps_to_json(back, {64, 1e-10, 0}).dump(), j.dump());
}

TEST(Io, MpsRejectsBadSchemaAndShapes) {
  Json j = mps_to_json(Mps::basis_state(std::string_view("01")), {});
  Json bad = j;
  bad["schema"] = "qdc.mps/9";
  EXPECT_THROW(mps_from_json(bad), ConfigError);
  bad = j;
  bad["sites"][0]["shape"] = {1, 2, 2};
  EXPECT_THROW(mps_from_json(bad), ConfigError);
}

TEST(Io, CircuitCheckpointRoundTrip) {
  CircuitCheckpoint cp;
  cp.circuit = brickwall(Lattice::strip(2, 3, true), 3, false);
  cp.theta = oracle::random_vector(cp.circuit.num_params(), 0.7, 3);
  cp.provenance = {{"time", 0.5}};
  const Json j = circuit_to_json(cp);
  const auto back = circuit_from_json(j);
  EXPECT_EQ(back.theta, cp.theta);
  EXPECT_EQ(back.circuit.depth(), 3u);
  EXPECT_EQ(back.circuit.num_blocks, cp.circuit.num_blocks);
  ASSERT_TRUE(back.circuit.lattice.has_value());
  EXPECT_EQ(*back.circuit.lattice, *cp.circuit.lattice);
  EXPECT_EQ(circuit_to_json(back).dump(), j.dump());
  EXPECT_LT((circuit_to_dense(back.circuit, back.theta) - circuit_to_dense(cp.circuit, cp.theta)).norm(), 1e-15);
}

TEST(Io, DatasetRoundTrip) {
  DatasetMeta m;
  m.spec.lattice = Lattice::chain(4);
  m.spec.h = 0.5;
  m.t = 0.2;
  m.dt = 0.05;
  const auto d = generate_dataset(m, 3);
  const auto j = dataset_to_json(d);
  const auto back = dataset_from_json(j);
  EXPECT_EQ(back.size(), 3u);
  EXPECT_EQ(dataset_to_json(back).dump(), j.dump());
  EXPECT_EQ(back.meta.t, 0.2);
}

TEST(Io, AtomicWriteCreatesDirectories) {
  const auto dir = temp_dir("atomic");
  const auto p = dir + "/a/b/c.txt";
  write_file_atomic(p, "hello");
  EXPECT_EQ(read_file(p), "hello");
  EXPECT_FALSE(std::filesystem::exists(p + ".tmp"));
  EXPECT_THROW(read_json_file(dir + "/missing.json"), ConfigError);
  write_file_atomic(dir + "/bad.json", "{ nope");
  EXPECT_THROW(read_json_file(dir + "/bad.json"), ConfigError);
}

TEST(Io, ConfigSectionsValidate) {
  EXPECT_THROW(lattice_from_json({{"type", "torus"}}), ConfigError);
  EXPECT_THROW(hamiltonian_from_json({{"family", "heisenberg"}}), ConfigError);
  EXPECT_EQ(lattice_from_json(lattice_to_json(Lattice::strip(3, 4, true))), Lattice::strip(3, 4, true));
  const auto t = truncation_from_json({{"chi_max", 32}, {"cutoff", 1e-9}});
  EXPECT_EQ(t.max_bond, 32u);
  EXPECT_EQ(t.cutoff, 1e-9);
  const auto e = ensemble_from_json({{"kind", "u1-rqc"}, {"depth", 2}, {"charge", 1}});
  EXPECT_EQ(e.kind, EnsembleKind::u1_rqc);
  EXPECT_EQ(e.depth, 2u);
}

TEST(Io, HistoryCsv) {
  std::vector<HistoryRow> rows(2);
  rows[0].step = 0;
  rows[0].train_cost = 0.5;
  rows[0].test_cost = 0.25;
  rows[1].step = 1;
  rows[1].train_cost = 0.125;
  rows[1].wall_seconds = 2.0;
  EXPECT_EQ(history_csv(rows), "step,train_cost,test_cost,grad_norm\n0,0.5,0.25,0\n1,0.125,,0\n");
  EXPECT_EQ(timing_csv(rows), "step,wall_seconds\n0,0\n1,2\n");
}
