#pragma once

// Dispersion relations omega(k), their continuation to complex quasimomenta,
// and the velocity constants that control light-cone envelopes.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lightcone/types.hpp"

namespace lightcone {

struct HoppingTerm {
  Site displacement{};
  double amplitude = 0.0;
};

/// Generator of a hopping table with |t_x| = amplitude * decay(|x|).
struct DecayLaw {
  enum class Kind { Exponential, Power };
  Kind kind = Kind::Exponential;
  double amplitude = 1.0;
  double rate = 1.0;  // exponential rate a, or power exponent p
  int range = 0;      // max-norm truncation range of the generated table
};

class DispersionRelation {
 public:
  enum class Form { Hopping, DiscreteLaplacian, SemiRelativistic, Constant };

  /// Symmetric hopping table omega(k) = sum_x t_x e^{i k.x}. Duplicate
  /// displacements are merged. Throws DomainError if t_x != t_{-x}.
  static DispersionRelation hopping(int dimension, std::vector<HoppingTerm> terms, double strip = kInf);
  static DispersionRelation discrete_laplacian(int dimension);
  static DispersionRelation semi_relativistic(int dimension, double mass, double strip);
  static DispersionRelation constant(int dimension, double e0);

  /// t_x = -amplitude e^{-rate |x|} for x != 0, t_0 chosen so omega(0) = 0.
  /// Truncated at the smallest max-norm range whose discarded tail is below
  /// tail_tolerance. The strip half-width is the rate.
  static DispersionRelation exponential_decay(int dimension, double amplitude, double rate,
                                              double tail_tolerance = 1e-12);
  /// t_x = -amplitude |x|^{-exponent} for 0 < |x|_inf <= range; no analytic strip.
  static DispersionRelation power_decay(int dimension, double amplitude, double exponent, int range);

  int dimension() const noexcept { return dimension_; }
  Form form() const noexcept { return form_; }
  double strip() const noexcept { return strip_; }
  double parameter() const noexcept { return parameter_; }
  const std::vector<HoppingTerm>& terms() const noexcept { return terms_; }
  const std::optional<DecayLaw>& decay_law() const noexcept { return decay_; }

  /// Catalogue name, e.g. "semi_relativistic(1)"; "hopping" for tables.
  std::string name() const;

  /// Quasimomenta live on the torus [-pi, pi]^n (true) or on R^n.
  bool periodic() const noexcept { return form_ != Form::SemiRelativistic; }

  /// omega(zeta). Closed-form symbols throw DomainError outside the strip.
  cplx evaluate(std::span<const cplx> zeta) const;

  /// Im omega(xi + i mu b) for real xi and unit b.
  double imag_deformed(std::span<const double> xi, std::span<const double> b, double mu) const;

  /// Hopping table realizing the symbol on Z^n, when one exists.
  std::optional<std::vector<HoppingTerm>> lattice_terms() const;

  /// Largest |x| (Euclidean) in the lattice table; 0 without one.
  double hopping_range() const;

 private:
  DispersionRelation() = default;

  int dimension_ = 1;
  Form form_ = Form::Hopping;
  double strip_ = kInf;
  double parameter_ = 0.0;
  std::vector<HoppingTerm> terms_;
  std::optional<DecayLaw> decay_;
};

/// Free-function form of DispersionRelation::evaluate.
cplx eval_symbol(const DispersionRelation& disp, std::span<const cplx> zeta);

struct OptimizationSettings {
  int grid_points = 256;               // per dimension over the fundamental cell
  std::size_t max_grid_total = 16384;  // caps grid_points^n for n >= 2
  int directions = 64;                 // unit-sphere samples for n >= 2
  double tolerance = 1e-8;             // golden-section refinement tolerance
  int max_sweeps = 60;
  double grid_offset = 0.0;            // rigid shift of the quasimomentum grid
};

struct DirectionSample {
  std::array<double, kMaxDim> b{};
  double c = 0.0;
};

struct VelocityConstant {
  double mu = 0.0;
  double c = 0.0;
  std::vector<DirectionSample> direction_profile;
  bool converged = true;
};

/// c(mu) = sup over xi and unit b of Im omega(xi + i mu b) / mu, by grid
/// search followed by coordinate-wise golden-section refinement.
VelocityConstant velocity_constant(const DispersionRelation& disp, double mu,
                                   const OptimizationSettings& opts = {});

struct EnvelopeOptions {
  bool refine = true;          // golden-section polish between grid neighbours
  double mu_tolerance = 1e-10;
  OptimizationSettings velocity{};
};

struct EnvelopeExponent {
  double exponent = 0.0;  // min_mu mu (c(mu) t - d)
  double mu_star = 0.0;
  double c_at_mu_star = 0.0;
};

/// 64 log-spaced points in [0.05, min(0.95 a, 8)].
std::vector<double> default_mu_grid(const DispersionRelation& disp, int points = 64);

/// Minimizes mu (c(mu) |t| - d) over the grid (and, with refine, between
/// neighbouring grid points). The envelope value is exp(exponent).
EnvelopeExponent envelope_exponent(const DispersionRelation& disp, double d, double t,
                                   std::span<const double> mu_grid, const EnvelopeOptions& opts = {});

/// Caches c(mu) on a grid; evaluates the envelope exponent for many (d, t).
class EnvelopeSolver {
 public:
  EnvelopeSolver(DispersionRelation disp, std::vector<double> mu_grid, EnvelopeOptions opts = {});

  EnvelopeExponent exponent(double d, double t) const;
  double velocity(double mu) const;

  const DispersionRelation& dispersion() const noexcept { return disp_; }
  const std::vector<double>& mu_grid() const noexcept { return mu_grid_; }
  const std::vector<double>& c_grid() const noexcept { return c_grid_; }

 private:
  DispersionRelation disp_;
  std::vector<double> mu_grid_;
  std::vector<double> c_grid_;
  EnvelopeOptions opts_;
};

struct SmoothVelocityData {
  int m = 1;
  double c_tilde = 0.0;
  double M = 1.0;
  double mu = 0.0;
  /// sup_b sup_xi of the self-adjoint part of (b.grad)^k omega, k = 1..m.
  std::vector<double> derivative_sups;
};

/// c~ = sum_{k=1}^m Re (i mu)^{k-1} / k! * sup_b sup (b.grad)^k omega, and M.
SmoothVelocityData smooth_velocity_constant(const DispersionRelation& disp, int m, double mu,
                                            const OptimizationSettings& opts = {});

/// M = 1 + sup_b sup_xi |(b.grad)^{m+1} omega|.
double derivative_bound_M(const DispersionRelation& disp, int m, const OptimizationSettings& opts = {});

/// Largest group speed sup_b sup_k b.grad omega (c~ at m = 1).
double max_group_speed(const DispersionRelation& disp, const OptimizationSettings& opts = {});

DispersionRelation dispersion_from_json(const nlohmann::json& j, const std::string& pointer = "");
nlohmann::json dispersion_to_json(const DispersionRelation& disp);

}  // namespace lightcone
