#pragma once

// Finite-box matrix Hamiltonians H = T + V, their complex deformations
// H_zeta = T_zeta H T_zeta^{-1}, and N-particle Hamiltonians.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "lightcone/dispersion.hpp"
#include "lightcone/geometry.hpp"
#include "lightcone/kernels.hpp"
#include "lightcone/types.hpp"

namespace lightcone {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  cplx value{};
};

/// Square complex matrix in compressed sparse row form. Column indices are
/// sorted within each row; duplicate triplets are summed.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  static CsrMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets);
  static CsrMatrix from_dense(const Matrix& m, double drop = 0.0);

  std::size_t rows() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept { return val_.size(); }
  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::uint32_t>& col() const noexcept { return col_; }
  const std::vector<cplx>& val() const noexcept { return val_; }

  kernels::CsrView view() const noexcept { return {n_, row_ptr_.data(), col_.data(), val_.data()}; }
  Matrix to_dense() const;
  cplx at(std::size_t r, std::size_t c) const;

  /// y = A x through the active kernel table.
  void multiply(const cplx* x, cplx* y) const;
  Vector multiply(const Vector& x) const;

  CsrMatrix adjoint() const;
  /// max |A_ij - conj(A_ji)|.
  double hermiticity_defect() const;
  /// Gershgorin interval of the real parts (a spectral enclosure for Hermitian A).
  std::pair<double, double> gershgorin() const;
  /// 64-bit FNV-1a digest of the structure and values.
  std::uint64_t digest() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_;
  std::vector<cplx> val_;
};

/// Site potential v(x). Values must be real; a non-zero imaginary part is a
/// domain error at build time.
using Potential = std::function<cplx(const Site&)>;

Potential zero_potential();
Potential delta_potential(const Site& at, double strength);
/// v(x) = slope . x
Potential linear_potential(std::array<double, kMaxDim> slope);

/// Complex quasimomentum zeta = xi + i mu b, padded to three components.
using Quasimomentum = std::array<cplx, kMaxDim>;

Quasimomentum imaginary_direction(double mu, std::array<double, kMaxDim> b);

class LatticeHamiltonian {
 public:
  LatticeHamiltonian(Box box, DispersionRelation disp, std::vector<double> potential, CsrMatrix matrix,
                     std::optional<Quasimomentum> zeta = std::nullopt);

  const Box& box() const noexcept { return box_; }
  const DispersionRelation& dispersion() const noexcept { return disp_; }
  const std::vector<double>& potential() const noexcept { return potential_; }
  const CsrMatrix& matrix() const noexcept { return matrix_; }
  const std::optional<Quasimomentum>& deformation() const noexcept { return zeta_; }
  bool deformed() const noexcept { return zeta_.has_value(); }
  std::size_t dimension() const noexcept { return matrix_.rows(); }
  Matrix dense() const { return matrix_.to_dense(); }

 private:
  Box box_;
  DispersionRelation disp_;
  std::vector<double> potential_;
  CsrMatrix matrix_;
  std::optional<Quasimomentum> zeta_;
};

/// (T)_{xy} = t_{x-y} for x, y in the box (links leaving the box are
/// dropped), (V)_{xx} = v(x).
LatticeHamiltonian build_hamiltonian(const DispersionRelation& disp, const Potential& v, const Box& box);

/// Entries e^{-i zeta.x} h_xy e^{i zeta.y}; the diagonal is unchanged.
/// Throws DomainError if |Im zeta_j| >= strip or H is already deformed.
LatticeHamiltonian build_deformed_hamiltonian(const LatticeHamiltonian& h, const Quasimomentum& zeta);

/// Diagonal of T_zeta = e^{-i zeta.x} (or of its inverse) on the box.
std::vector<cplx> deformation_diagonal(const Box& box, const Quasimomentum& zeta, bool inverse = false);

/// Largest eigenvalue of (H - H^*) / 2i.
double max_imaginary_part(const CsrMatrix& h);

// ---------------------------------------------------------------------------
// N particles

enum class Sector { Distinguishable, Bosonic };

/// Pair interaction w(x_i - x_j).
using PairInteraction = std::function<double(const Site&)>;

PairInteraction no_interaction();
PairInteraction onsite_interaction(double strength);

/// Basis of N-particle configurations on the sites of a box. A configuration
/// lists site indices of the particles (sorted for bosons).
class ManyBodyBasis {
 public:
  static constexpr std::size_t kDefaultCap = 20000;

  /// Throws ResourceError when the sector dimension exceeds `cap`.
  ManyBodyBasis(std::size_t sites, int particles, Sector sector, std::size_t cap = kDefaultCap);

  static std::size_t sector_dimension(std::size_t sites, int particles, Sector sector);

  std::size_t sites() const noexcept { return sites_; }
  int particles() const noexcept { return n_; }
  Sector sector() const noexcept { return sector_; }
  std::size_t size() const noexcept { return configs_.size() / static_cast<std::size_t>(n_); }
  /// Particle positions of basis state i.
  const std::uint32_t* config(std::size_t i) const { return configs_.data() + i * static_cast<std::size_t>(n_); }
  /// Index of a configuration (sorted first for bosons); throws if absent.
  std::size_t index(std::vector<std::uint32_t> config) const;

 private:
  std::size_t sites_ = 0;
  int n_ = 1;
  Sector sector_ = Sector::Distinguishable;
  std::vector<std::uint32_t> configs_;
};

struct ManyBodyHamiltonian {
  Box box;
  ManyBodyBasis basis;
  CsrMatrix matrix;
};

/// sum_j (h_1)_j + 1/2 sum_{i != j} w(x_i - x_j), with h_1 the one-particle
/// Hamiltonian of build_hamiltonian.
ManyBodyHamiltonian build_n_particle_hamiltonian(const DispersionRelation& disp1, const Potential& v,
                                                 const PairInteraction& w, int particles, const Box& box,
                                                 Sector sector, std::size_t cap = ManyBodyBasis::kDefaultCap);

/// Diagonal of chi_{X^N}: 1 on configurations with every particle in X.
std::vector<double> product_cutoff(const ManyBodyBasis& basis, const Box& box, const Region& x);

/// Basis permutation exchanging particles i and j (distinguishable sector).
std::vector<std::size_t> transposition_permutation(const ManyBodyBasis& basis, int i, int j);

}  // namespace lightcone
