#pragma once

// Schrodinger and Heisenberg evolution, leakage norms, commutators, OTOC.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "lightcone/geometry.hpp"
#include "lightcone/hamiltonian.hpp"
#include "lightcone/types.hpp"

namespace lightcone {

/// J_0(x), ..., J_{k_max}(x) by Miller's backward recurrence. Entries that
/// fall below the smallest normal double are returned as zero.
std::vector<double> bessel_j_sequence(double x, int k_max);

/// Smallest k >= |x| with |J_k(x)| certainly below `floor`.
int bessel_cutoff(double x, double floor = 1e-300);

enum class PropagationMethod { Auto, Spectral, Chebyshev };

/// e^{-iHt} for a Hermitian H. Spectral: dense eigendecomposition computed
/// once. Chebyshev: expansion in T_k((H - center) / half) with Bessel
/// coefficients, truncated where |J_k| < 1e-300, which keeps small far-field
/// amplitudes accurate relative to themselves.
class Propagator {
 public:
  static constexpr std::size_t kSpectralLimit = 4096;
  static constexpr int kMaxTerms = 2000000;

  explicit Propagator(CsrMatrix h, PropagationMethod method = PropagationMethod::Auto);

  PropagationMethod method() const noexcept { return method_; }
  std::size_t dimension() const noexcept { return h_.rows(); }
  const CsrMatrix& hamiltonian() const noexcept { return h_; }

  /// e^{-iHt} psi. Throws ResourceError when the expansion would exceed kMaxTerms.
  Vector apply(const Vector& psi, double t) const;
  /// Columns of U_t with the given indices (dimension x cols.size()).
  Matrix columns(std::span<const std::size_t> cols, double t) const;
  /// Rows of U_t, from U_t[r, :] = conj(U_{-t}[:, r]).
  Matrix rows(std::span<const std::size_t> rows, double t) const;
  /// chi_R U_t chi_C as a |R| x |C| block.
  Matrix block(std::span<const std::size_t> rows, std::span<const std::size_t> cols, double t) const;
  Matrix full(double t) const;

  /// Number of Chebyshev terms used for time t.
  int chebyshev_terms(double t) const;

 private:
  struct Spectral {
    Matrix vectors;
    RealVector values;
  };

  Vector apply_chebyshev(const Vector& psi, double t) const;

  CsrMatrix h_;
  PropagationMethod method_;
  double center_ = 0.0;
  double half_ = 1.0;
  std::shared_ptr<const Spectral> spectral_;
};

struct NormResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = true;  // false: power iteration stalled, dense SVD used
};

/// Largest singular value by block power iteration on A^H A (seeded random
/// start block of up to 8 vectors, Ritz residual tolerance 1e-10 relative,
/// up to 3 restarts), with a dense SVD fallback.
NormResult operator_norm(const Matrix& a, double tolerance = 1e-10);

/// ||chi_X U_t chi_Y||.
double leakage_norm(const Propagator& p, const Box& box, const Region& x, const Region& y, double t);

/// ||e^{-i H_zeta t}|| for a (generally non-Hermitian) matrix, via a dense
/// matrix exponential.
double deformed_evolution_norm(const CsrMatrix& h_zeta, double t);
Matrix dense_exponential(const CsrMatrix& h, cplx factor);

// ---------------------------------------------------------------------------
// Observables and states

class Observable {
 public:
  /// No declared action domain.
  static Observable global(Matrix a);
  /// A declared to act on X; throws DomainError unless A = chi_X A chi_X + chi_{X^c} exactly.
  static Observable acting_on(Matrix a, const Box& box, Region x);
  /// local (|X| x |X|) placed on X plus the identity on X^c.
  static Observable from_block(const Matrix& local, const Box& box, Region x);
  /// Random Hermitian block on X (Gaussian unitary ensemble) scaled to
  /// spectral norm 1, plus the identity on X^c.
  static Observable random_localized(const Box& box, Region x, std::uint64_t seed);

  const Matrix& matrix() const noexcept { return a_; }
  const std::optional<Region>& domain() const noexcept { return domain_; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(a_.rows()); }
  double norm() const;

 private:
  Observable(Matrix a, std::optional<Region> domain) : a_(std::move(a)), domain_(std::move(domain)) {}

  Matrix a_;
  std::optional<Region> domain_;
  mutable std::optional<double> norm_;
};

class DensityOperator {
 public:
  /// Validates Hermiticity, trace 1 (1e-10), eigenvalues >= -1e-12 and,
  /// when a support is given, Tr(chi_{X^c} rho) < 1e-12.
  DensityOperator(Matrix rho, const Box& box, std::optional<Region> support = std::nullopt);

  static DensityOperator pure(const Vector& psi, const Box& box, std::optional<Region> support = std::nullopt);
  static DensityOperator site(const Box& box, const Site& s);
  /// Random mixed state of the given rank supported in X.
  static DensityOperator random_mixed(const Box& box, const Region& x, int rank, std::uint64_t seed);

  const Matrix& matrix() const noexcept { return rho_; }
  const std::optional<Region>& support() const noexcept { return support_; }

 private:
  Matrix rho_;
  std::optional<Region> support_;
};

/// A_X~ = chi_X A chi_X - chi_X. Throws DomainError without a declared domain.
Observable localize_observable(const Observable& a, const Box& box);

/// alpha_t(A) = e^{iHt} A e^{-iHt}.
Observable heisenberg_evolve(const Propagator& p, const Observable& a, double t);

/// alpha'_t(rho) = e^{-iHt} rho e^{iHt}.
Matrix schrodinger_evolve(const Propagator& p, const Matrix& rho, double t);

/// A_{t,U} = chi_U A_t chi_U + chi_{U^c}.
Observable lc_truncation(const Observable& a_t, const Box& box, const Region& u);

double commutator_norm(const Observable& a_t, const Observable& b);

/// -Tr([A_t, B]^2 rho).
double otoc(const DensityOperator& rho, const Observable& a_t, const Observable& b);

/// Tr(chi_X rho).
double state_region_probability(const Matrix& rho, const Box& box, const Region& x);

}  // namespace lightcone
