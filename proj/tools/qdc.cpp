#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "qdc/errors.hpp"
#include "qdc/experiments.hpp"

namespace {

struct Command {
  qdc::ExperimentKind kind;
  const char* help;
};

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("QDC_NUM_THREADS")) {
    const int t = std::atoi(threads);
    if (t > 0) omp_set_num_threads(t);
  }

  CLI::App app{"Variational compilation of quantum dynamics with matrix product states"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  const Command commands[] = {
      {qdc::ExperimentKind::data_gen, "Generate training and test datasets by TEBD"},
      {qdc::ExperimentKind::compile, "Train a brickwall circuit against the target propagator"},
      {qdc::ExperimentKind::dynamics, "Apply a compiled circuit repeatedly and record observables"},
      {qdc::ExperimentKind::resource_compare, "Compare gate counts and test risk with Trotter circuits"},
      {qdc::ExperimentKind::verify, "Dense checks of a compiled circuit against the exact propagator"},
  };
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(qdc::to_string(c.kind), c.help);
    sub->add_option("-c,--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out, "output directory (overrides output_dir)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qdc::exit_code::config;
  }

  qdc::ExperimentKind kind = qdc::ExperimentKind::compile;
  for (const auto& c : commands)
    if (app.got_subcommand(qdc::to_string(c.kind))) kind = c.kind;

  qdc::Json doc;
  try {
    doc = qdc::read_json_file(config);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return qdc::exit_code::config;
  }
  const std::string base = std::filesystem::absolute(config).parent_path().string();
  return qdc::run_experiment(doc, base, out, std::cerr, kind);
}
