// lightcone: run certification suites and print velocity constants from a JSON spec.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "lightcone/experiment.hpp"
#include "lightcone/parallel.hpp"

using namespace lightcone;

namespace {

OutputFormat parse_format(const std::string& s) {
  if (s == "json") return OutputFormat::Json;
  if (s == "csv") return OutputFormat::Csv;
  return OutputFormat::Table;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Light-cone certificates for lattice dispersive evolution"};
  app.require_subcommand(1);

  std::string format = "table";
  unsigned threads = 0;
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "json", "csv"}));
  app.add_option("--threads", threads, "Worker threads (default: LIGHTCONE_THREADS, else 1)");

  std::string run_spec;
  std::string out_dir;
  std::uint64_t seed_override = 0;
  auto* run = app.add_subcommand("run", "Run every theorem of a spec and write reports");
  run->add_option("spec", run_spec, "Experiment spec (JSON)")->required();
  auto* out_opt = run->add_option("--out-dir", out_dir, "Directory for reports and plots");
  auto* seed_opt = run->add_option("--seed-override", seed_override, "Seed replacing every spec seed");
  run->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "json", "csv"}));
  run->add_option("--threads", threads, "Worker threads");

  std::string const_spec;
  auto* constants = app.add_subcommand("constants", "Print c(mu), c~(m) and M for a spec's dispersion");
  constants->add_option("spec", const_spec, "Experiment spec (JSON)")->required();
  constants->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "json", "csv"}));
  constants->add_option("--threads", threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalidSpec;
  }
  if (threads > 0) set_default_threads(threads);

  try {
    if (*run) {
      const ExperimentSpec spec = load_experiment(run_spec);
      RunOptions opts;
      opts.format = parse_format(format);
      if (*out_opt) opts.out_dir = out_dir;
      if (*seed_opt) opts.seed_override = seed_override;
      RunResult res;
      try {
        res = run_experiment(spec, opts);
      } catch (const SpecError& e) {
        throw locate_spec_error(run_spec, e);
      }
      std::cout << res.summary;
      for (const auto& f : res.files) std::cerr << "wrote " << f << "\n";
      return res.exit_code;
    }
    const ExperimentSpec spec = load_experiment(const_spec);
    std::cout << render_constants(compute_constants(spec), parse_format(format));
    return kExitPass;
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidSpec;
  } catch (const ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kExitResource;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
}
