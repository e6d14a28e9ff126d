#pragma once

// Experiment specifications (JSON), the suite runner and the constants table.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lightcone/certify.hpp"
#include "lightcone/dispersion.hpp"
#include "lightcone/geometry.hpp"
#include "lightcone/hamiltonian.hpp"

namespace lightcone {

/// Line of the value addressed by each JSON pointer in a document.
class SourceMap {
 public:
  static SourceMap build(std::string_view text);
  /// Line of the pointer, or of its longest recorded prefix; 1 when unknown.
  int line_of(const std::string& pointer) const;

 private:
  std::map<std::string, int> lines_;
};

/// SpecError located in a file.
class SpecFileError : public SpecError {
 public:
  SpecFileError(const std::string& path, int line, const std::string& pointer, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct PotentialSpec {
  std::string kind = "zero";  // zero | delta | linear | sites
  Site site{};
  double strength = 0.0;
  std::array<double, kMaxDim> slope{};
  std::vector<std::pair<Site, double>> values;
};

struct RegionSpec {
  std::optional<Site> lower;
  std::optional<Site> upper;
  std::vector<Site> sites;  // used when lower/upper are absent
};

struct NBodySpec {
  int particles = 2;
  Sector sector = Sector::Distinguishable;
  std::string interaction = "none";  // none | onsite
  double strength = 0.0;
  std::size_t cap = ManyBodyBasis::kDefaultCap;
};

struct TheoremSpec {
  std::string kind;  // mvb | state | lca | lrb | otoc | power | nbody
  std::string label;
  std::string x;
  std::string y;
  std::vector<double> times;
  std::vector<double> mu_grid;  // empty: default grid
  double epsilon = 0.1;
  double floor = 1e-13;
  bool enforce_boundary_window = true;
  double window_margin = 5.0;
  std::optional<std::uint64_t> seed;  // observables / states; default: experiment seed
  // lca
  double eta = 0.0;
  // state
  std::string initial = "site";  // site | random_mixed
  std::optional<Site> initial_site;
  int rank = 2;
  // otoc
  std::string density = "maximally_mixed";  // maximally_mixed | random_mixed
  // power
  int m = 2;
  double smooth_mu = 0.5;
  double slack = 0.05;
  std::optional<double> max_fitted_power;
  // power, nbody
  std::vector<std::pair<std::string, std::string>> sweep;
};

struct ConstantsSpec {
  std::vector<double> mu;
  std::vector<int> m;
  double smooth_mu = 0.5;
};

struct ExperimentSpec {
  std::string name;
  std::uint64_t seed = 0;
  nlohmann::json dispersion;  // canonical dispersion document
  int dimension = 1;
  Site box_lower{};
  Site box_upper{};
  PotentialSpec potential;
  std::map<std::string, RegionSpec> regions;
  std::optional<NBodySpec> nbody;
  std::vector<TheoremSpec> theorems;
  std::optional<ConstantsSpec> constants;
  std::string output_dir;

  DispersionRelation dispersion_relation() const;
  Box box() const;
  Potential potential_function() const;
  Region region(const std::string& label) const;
};

/// Structural parse; throws SpecError with the JSON pointer of the culprit.
ExperimentSpec parse_experiment(const nlohmann::json& j);
/// Canonical form: parse(serialize(s)) == s.
nlohmann::json serialize_experiment(const ExperimentSpec& s);
/// Cross-references: regions inside the box, labels resolve, mu grids in the
/// strip, required fields per theorem kind, at least one theorem.
void validate_experiment(const ExperimentSpec& s);

/// Reads, parses and validates a spec file; errors become SpecFileError.
ExperimentSpec load_experiment(const std::string& path);

/// Anchors a SpecError raised later (e.g. while running) to its line in the file.
SpecFileError locate_spec_error(const std::string& path, const SpecError& error);

enum class OutputFormat { Table, Json, Csv };

struct RunOptions {
  OutputFormat format = OutputFormat::Table;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed_override;
  bool write_files = true;
};

struct RunResult {
  int exit_code = 0;
  std::vector<std::pair<std::string, CertificationReport>> reports;  // label, report
  std::vector<std::string> files;
  std::string summary;  // rendered in RunOptions::format
};

enum ExitCode { kExitPass = 0, kExitFail = 1, kExitInvalidSpec = 2, kExitResource = 3 };

/// Runs every theorem of the spec. DomainError raised while setting up a
/// theorem becomes SpecError at /theorems/<i>.
RunResult run_experiment(const ExperimentSpec& spec, const RunOptions& options);

/// Runs one theorem entry.
CertificationReport run_theorem(const ExperimentSpec& spec, std::size_t index, std::uint64_t seed);

struct ConstantsRow {
  std::string quantity;  // c | c_tilde | M
  double mu = 0.0;
  int m = 0;
  double value = 0.0;
};

std::vector<ConstantsRow> compute_constants(const ExperimentSpec& spec);
std::string render_constants(const std::vector<ConstantsRow>& rows, OutputFormat format);

/// SVG line plot of log10 measured against t with a dashed envelope.
std::string svg_norm_plot(const CertificationReport& report, const std::string& title);
/// SVG heat map of |psi_t(x)| with t on the vertical axis (1-D boxes).
std::string svg_front_heatmap(const Matrix& amplitude, const std::vector<double>& times, int x_lower,
                              const std::string& title);

}  // namespace lightcone
