#pragma once

// Pointwise certificates: measured quantity against analytic envelope, per time.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lightcone/dispersion.hpp"
#include "lightcone/evolve.hpp"
#include "lightcone/geometry.hpp"
#include "lightcone/hamiltonian.hpp"

namespace lightcone {

enum class RowStatus { Pass, VacuousBelowFloor, Fail };

std::string to_string(RowStatus s);

struct ReportRow {
  double t = 0.0;
  double d = 0.0;
  double measured = 0.0;
  double envelope = 0.0;
  double exponent = 0.0;  // log of the envelope
  double mu_star = 0.0;
  double log_margin = 0.0;  // log(envelope) - log(measured)
  RowStatus status = RowStatus::Pass;
  bool inside_cone = false;  // envelope >= 1: the row holds trivially
  std::map<std::string, double> aux;
};

/// Report-level assertion such as a fitted slope or a rate ratio.
struct ReportCheck {
  std::string name;
  double value = 0.0;
  double lower = -kInf;
  double upper = kInf;
  bool passed = true;
  std::string detail;
};

struct CertificationConfig {
  std::vector<double> times;   // non-negative, strictly increasing
  std::vector<double> mu_grid; // empty: default_mu_grid of the dispersion
  double epsilon = 0.1;        // reported mu' = (1 - epsilon) mu*
  double floor = 1e-13;
  std::uint64_t seed = 0;
  bool enforce_boundary_window = true;
  double window_margin = 5.0;
  EnvelopeOptions envelope{};

  /// Throws DomainError on an empty, negative or unsorted time grid or a bad epsilon / floor.
  void validate() const;
};

struct CertificationReport {
  std::string theorem;
  std::string instance;
  std::vector<ReportRow> rows;
  std::vector<ReportCheck> checks;
  std::map<std::string, std::string> environment;
  std::map<std::string, std::vector<double>> grids;

  /// No failed row and every check passed.
  bool verdict() const;
  std::size_t count(RowStatus s) const;

  nlohmann::json to_json() const;
  std::string to_csv() const;
  static std::string csv_header();
};

/// Row status from measured and envelope values.
RowStatus classify(double measured, double envelope, double floor);

/// Requires the bounding box of the closest points of X and Y, widened by
/// vmax * t_max + margin, to lie inside the box. Throws DomainError otherwise.
void check_boundary_window(const Box& box, const Region& x, const Region& y, double vmax, double t_max, double margin);

/// Sum over half-space pieces of exp(min_mu mu (c(mu) |t| - gap)), scaled by `copies`
/// in the exponent (N-body). Returns {log envelope, mu* of the dominant piece}.
struct PieceEnvelope {
  double log_envelope = -kInf;
  double mu_star = 0.0;
  double c_at_mu_star = 0.0;
  std::size_t pieces = 0;
};
PieceEnvelope piecewise_envelope(const EnvelopeSolver& solver, const std::vector<SeparatedPair>& pieces, double t,
                                 double copies = 1.0);

/// ||chi_X e^{-iHt} chi_Y|| against the constant-one half-space envelope.
CertificationReport certify_mvb(const LatticeHamiltonian& h, const Region& x, const Region& y,
                                const CertificationConfig& config);

/// Tr(chi_Y rho_t) for rho_0 supported in X, against min(e^E, e^{2E}).
CertificationReport certify_state_lightcone(const LatticeHamiltonian& h, const DensityOperator& rho0, const Region& y,
                                            const CertificationConfig& config);

/// ||A_t - A_{t, X_eta}|| against 2 ||A~|| sum_pieces e^{E} over pieces of (X, X_eta^c).
CertificationReport certify_lca(const LatticeHamiltonian& h, const Observable& a, double eta,
                                const CertificationConfig& config);

/// ||[alpha_t(A), B]|| against ||A~|| ||B~|| (e^{E(d,t)} + e^{E(d,-t)}).
CertificationReport certify_lrb(const LatticeHamiltonian& h, const Observable& a, const Observable& b,
                                const CertificationConfig& config);

/// -Tr([alpha_t(A), B]^2 rho) against the squared commutator envelope.
CertificationReport certify_otoc(const LatticeHamiltonian& h, const DensityOperator& rho, const Observable& a,
                                 const Observable& b, const CertificationConfig& config);

struct PowerConfig {
  int m = 2;
  double smooth_mu = 0.5;  // mu in the (i mu)^{k-1} weights
  double slack = 0.05;     // c~' = c~ (1 + slack)
  /// Required upper bound on the fitted log-log slope; default -(m + 1 - n) + 0.5.
  std::optional<double> max_fitted_power;
};

/// Leakage over a sweep of region pairs against t M (d - c~' t)^{-m-1+n};
/// asserts only the fitted power of measured vs (d - c~' t).
CertificationReport certify_power_mvb(const LatticeHamiltonian& h, const std::vector<std::pair<Region, Region>>& sweep,
                                      const PowerConfig& power, const CertificationConfig& config);

/// N-particle leakage ||chi_{X^N} e^{-itH_N} chi_{Y^N}|| against e^{N E(d, t)}
/// for each region pair; with two or more distances the per-time ratio of
/// fitted decay rates (N-body over one-body) must lie in [0.9 N, 1.1 N].
CertificationReport certify_nbody(const ManyBodyHamiltonian& hn, const LatticeHamiltonian& h1,
                                  const std::vector<std::pair<Region, Region>>& sweep,
                                  const CertificationConfig& config);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lightcone
