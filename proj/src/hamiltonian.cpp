#include "lightcone/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <Eigen/Eigenvalues>

namespace lightcone {

// ---------------------------------------------------------------------------
// CsrMatrix

CsrMatrix CsrMatrix::from_triplets(std::size_t n, std::vector<Triplet> triplets) {
  if (n > std::numeric_limits<std::uint32_t>::max()) throw ResourceError("matrix dimension exceeds 32-bit indexing");
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  CsrMatrix m;
  m.n_ = n;
  m.row_ptr_.assign(n + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const Triplet& t = triplets[k];
    if (t.row >= n || t.col >= n) throw DomainError("triplet index out of range");
    cplx v = t.value;
    std::size_t j = k + 1;
    while (j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col) v += triplets[j++].value;
    if (v != cplx{}) {
      m.col_.push_back(static_cast<std::uint32_t>(t.col));
      m.val_.push_back(v);
      ++m.row_ptr_[t.row + 1];
    }
    k = j;
  }
  for (std::size_t r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

CsrMatrix CsrMatrix::from_dense(const Matrix& a, double drop) {
  std::vector<Triplet> t;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (std::abs(a(r, c)) > drop) t.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), a(r, c)});
    }
  }
  return from_triplets(static_cast<std::size_t>(a.rows()), std::move(t));
}

Matrix CsrMatrix::to_dense() const {
  Matrix d = Matrix::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_));
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) d(static_cast<Eigen::Index>(r), col_[k]) = val_[k];
  }
  return d;
}

cplx CsrMatrix::at(std::size_t r, std::size_t c) const {
  const auto b = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
  const auto e = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
  const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(c));
  if (it == e || *it != c) return {};
  return val_[static_cast<std::size_t>(it - col_.begin())];
}

void CsrMatrix::multiply(const cplx* x, cplx* y) const { kernels::active().spmv(view(), x, y); }

Vector CsrMatrix::multiply(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != n_) throw DomainError("dimension mismatch in matrix-vector product");
  Vector y(x.size());
  multiply(x.data(), y.data());
  return y;
}

CsrMatrix CsrMatrix::adjoint() const {
  std::vector<Triplet> t;
  t.reserve(val_.size());
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) t.push_back({col_[k], r, std::conj(val_[k])});
  }
  return from_triplets(n_, std::move(t));
}

double CsrMatrix::hermiticity_defect() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < n_; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      worst = std::max(worst, std::abs(val_[k] - std::conj(at(col_[k], r))));
    }
  }
  return worst;
}

std::pair<double, double> CsrMatrix::gershgorin() const {
  if (n_ == 0) return {0.0, 0.0};
  double lo = kInf;
  double hi = -kInf;
  for (std::size_t r = 0; r < n_; ++r) {
    double center = 0.0;
    double radius = 0.0;
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      if (col_[k] == r) {
        center = val_[k].real();
        radius += std::abs(val_[k].imag());
      } else {
        radius += std::abs(val_[k]);
      }
    }
    lo = std::min(lo, center - radius);
    hi = std::max(hi, center + radius);
  }
  return {lo, hi};
}

std::uint64_t CsrMatrix::digest() const {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* p, std::size_t bytes) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= c[i];
      h *= 1099511628211ull;
    }
  };
  const std::uint64_t n = n_;
  mix(&n, sizeof n);
  for (std::size_t v : row_ptr_) {
    const std::uint64_t w = v;
    mix(&w, sizeof w);
  }
  mix(col_.data(), col_.size() * sizeof(std::uint32_t));
  for (const cplx& v : val_) {
    // Normalise -0.0 so the digest depends on values only.
    const double parts[2] = {v.real() + 0.0, v.imag() + 0.0};
    mix(parts, sizeof parts);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Potentials

Potential zero_potential() {
  return [](const Site&) { return cplx{}; };
}

Potential delta_potential(const Site& at, double strength) {
  return [at, strength](const Site& s) { return s == at ? cplx{strength} : cplx{}; };
}

Potential linear_potential(std::array<double, kMaxDim> slope) {
  return [slope](const Site& s) {
    double v = 0.0;
    for (int j = 0; j < kMaxDim; ++j) v += slope[j] * s[j];
    return cplx{v};
  };
}

Quasimomentum imaginary_direction(double mu, std::array<double, kMaxDim> b) {
  Quasimomentum z{};
  for (int j = 0; j < kMaxDim; ++j) z[j] = cplx{0.0, mu * b[j]};
  return z;
}

// ---------------------------------------------------------------------------
// Single particle

LatticeHamiltonian::LatticeHamiltonian(Box box, DispersionRelation disp, std::vector<double> potential,
                                       CsrMatrix matrix, std::optional<Quasimomentum> zeta)
    : box_(std::move(box)),
      disp_(std::move(disp)),
      potential_(std::move(potential)),
      matrix_(std::move(matrix)),
      zeta_(zeta) {}

namespace {

std::vector<double> potential_values(const Potential& v, const Box& box) {
  std::vector<double> out(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Site s = box.site(i);
    const cplx value = v ? v(s) : cplx{};
    if (!std::isfinite(value.real()) || value.imag() != 0.0) {
      throw DomainError("potential must be real and finite at every site");
    }
    out[i] = value.real();
  }
  return out;
}

std::vector<HoppingTerm> table_of(const DispersionRelation& disp) {
  auto terms = disp.lattice_terms();
  if (!terms) throw DomainError("dispersion '" + disp.name() + "' has no lattice hopping table");
  return *terms;
}

}  // namespace

LatticeHamiltonian build_hamiltonian(const DispersionRelation& disp, const Potential& v, const Box& box) {
  if (disp.dimension() != box.dimension()) throw DomainError("dispersion and box dimensions differ");
  const auto terms = table_of(disp);
  const auto pot = potential_values(v, box);
  std::vector<Triplet> t;
  t.reserve(box.size() * (terms.size() + 1));
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Site x = box.site(i);
    t.push_back({i, i, cplx{pot[i]}});
    for (const auto& term : terms) {
      // Row x, column y = x - displacement, so (T)_{xy} = t_{x-y}.
      Site y = x;
      for (int j = 0; j < kMaxDim; ++j) y[j] -= term.displacement[j];
      if (box.contains(y)) t.push_back({i, box.index(y), cplx{term.amplitude}});
    }
  }
  return LatticeHamiltonian(box, disp, pot, CsrMatrix::from_triplets(box.size(), std::move(t)));
}

std::vector<cplx> deformation_diagonal(const Box& box, const Quasimomentum& zeta, bool inverse) {
  std::vector<cplx> d(box.size());
  const cplx sign = inverse ? cplx{0.0, 1.0} : cplx{0.0, -1.0};
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Site x = box.site(i);
    cplx phase{};
    for (int j = 0; j < box.dimension(); ++j) phase += zeta[j] * static_cast<double>(x[j]);
    d[i] = std::exp(sign * phase);
  }
  return d;
}

LatticeHamiltonian build_deformed_hamiltonian(const LatticeHamiltonian& h, const Quasimomentum& zeta) {
  if (h.deformed()) throw DomainError("Hamiltonian is already deformed");
  const int n = h.box().dimension();
  for (int j = 0; j < n; ++j) {
    if (!(std::abs(zeta[j].imag()) < h.dispersion().strip())) {
      throw DomainError("deformation leaves the analyticity strip: |Im zeta_" + std::to_string(j) +
                        "| >= " + std::to_string(h.dispersion().strip()));
    }
  }
  for (int j = n; j < kMaxDim; ++j) {
    if (zeta[j] != cplx{}) throw DomainError("quasimomentum has more components than the lattice dimension");
  }
  const auto& m = h.matrix();
  std::vector<Triplet> t;
  t.reserve(m.nonzeros());
  const Box& box = h.box();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Site x = box.site(r);
    for (std::size_t k = m.row_ptr()[r]; k < m.row_ptr()[r + 1]; ++k) {
      const std::size_t c = m.col()[k];
      if (c == r) {
        t.push_back({r, c, m.val()[k]});
        continue;
      }
      const Site y = box.site(c);
      cplx phase{};
      for (int j = 0; j < n; ++j) phase += zeta[j] * static_cast<double>(x[j] - y[j]);
      t.push_back({r, c, m.val()[k] * std::exp(cplx{0.0, -1.0} * phase)});
    }
  }
  return LatticeHamiltonian(box, h.dispersion(), h.potential(), CsrMatrix::from_triplets(m.rows(), std::move(t)),
                            zeta);
}

double max_imaginary_part(const CsrMatrix& h) {
  const Matrix a = h.to_dense();
  const Matrix im = (a - a.adjoint()) / cplx{0.0, 2.0};
  Eigen::SelfAdjointEigenSolver<Matrix> es(im, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// ---------------------------------------------------------------------------
// N particles

PairInteraction no_interaction() {
  return [](const Site&) { return 0.0; };
}

PairInteraction onsite_interaction(double strength) {
  return [strength](const Site& d) { return d == Site{} ? strength : 0.0; };
}

std::size_t ManyBodyBasis::sector_dimension(std::size_t sites, int particles, Sector sector) {
  if (particles < 1) throw DomainError("particle number must be positive");
  const double cap = 1e18;
  double dim = 1.0;
  if (sector == Sector::Distinguishable) {
    for (int k = 0; k < particles; ++k) dim = std::min(cap, dim * static_cast<double>(sites));
  } else {
    // C(L + N - 1, N)
    for (int k = 1; k <= particles; ++k) {
      dim = std::min(cap, dim * static_cast<double>(sites + static_cast<std::size_t>(k) - 1) / k);
    }
    dim = std::round(dim);
  }
  return static_cast<std::size_t>(dim);
}

ManyBodyBasis::ManyBodyBasis(std::size_t sites, int particles, Sector sector, std::size_t cap)
    : sites_(sites), n_(particles), sector_(sector) {
  const std::size_t dim = sector_dimension(sites, particles, sector);
  if (dim > cap) {
    throw ResourceError("sector dimension " + std::to_string(dim) + " exceeds the cap " + std::to_string(cap));
  }
  configs_.reserve(dim * static_cast<std::size_t>(particles));
  std::vector<std::uint32_t> c(static_cast<std::size_t>(particles), 0);
  // Lexicographic enumeration; bosonic configurations are non-decreasing.
  while (true) {
    configs_.insert(configs_.end(), c.begin(), c.end());
    int j = particles - 1;
    while (j >= 0 && c[static_cast<std::size_t>(j)] + 1 >= sites) --j;
    if (j < 0) break;
    ++c[static_cast<std::size_t>(j)];
    for (int k = j + 1; k < particles; ++k) {
      c[static_cast<std::size_t>(k)] = sector == Sector::Bosonic ? c[static_cast<std::size_t>(j)] : 0;
    }
  }
}

std::size_t ManyBodyBasis::index(std::vector<std::uint32_t> config) const {
  if (config.size() != static_cast<std::size_t>(n_)) throw DomainError("configuration has the wrong particle count");
  if (sector_ == Sector::Distinguishable) {
    std::size_t idx = 0;
    for (auto x : config) {
      if (x >= sites_) throw DomainError("configuration site out of range");
      idx = idx * sites_ + x;
    }
    return idx;
  }
  std::sort(config.begin(), config.end());
  std::size_t lo = 0;
  std::size_t hi = size();
  const std::size_t n = static_cast<std::size_t>(n_);
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (std::lexicographical_compare(configs_.begin() + static_cast<std::ptrdiff_t>(mid * n),
                                     configs_.begin() + static_cast<std::ptrdiff_t>(mid * n + n), config.begin(),
                                     config.end())) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo == size() || !std::equal(config.begin(), config.end(), this->config(lo))) {
    throw DomainError("configuration not in the basis");
  }
  return lo;
}

ManyBodyHamiltonian build_n_particle_hamiltonian(const DispersionRelation& disp1, const Potential& v,
                                                 const PairInteraction& w, int particles, const Box& box,
                                                 Sector sector, std::size_t cap) {
  ManyBodyBasis basis(box.size(), particles, sector, cap);
  const LatticeHamiltonian h1 = build_hamiltonian(disp1, v, box);
  const CsrMatrix& m1 = h1.matrix();
  const std::size_t n = static_cast<std::size_t>(particles);
  std::vector<Triplet> t;
  std::vector<std::uint32_t> cfg(n);
  for (std::size_t s = 0; s < basis.size(); ++s) {
    std::copy(basis.config(s), basis.config(s) + n, cfg.begin());
    // Pair interaction, diagonal.
    double e = 0.0;
    if (w) {
      for (std::size_t i = 0; i < n; ++i) {
        const Site xi = box.site(cfg[i]);
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          const Site xj = box.site(cfg[j]);
          Site d{};
          for (int k = 0; k < kMaxDim; ++k) d[k] = xi[k] - xj[k];
          e += 0.5 * w(d);
        }
      }
    }
    if (e != 0.0) t.push_back({s, s, cplx{e}});
    // One-body terms: column s, rows reached by moving one particle.
    if (sector == Sector::Distinguishable) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::uint32_t x = cfg[j];
        for (std::size_t k = m1.row_ptr()[x]; k < m1.row_ptr()[x + 1]; ++k) {
          // m1 is Hermitian, so column x is the conjugate of row x.
          const std::uint32_t y = m1.col()[k];
          const cplx amp = std::conj(m1.val()[k]);
          cfg[j] = y;
          t.push_back({basis.index(cfg), s, amp});
          cfg[j] = x;
        }
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        if (j > 0 && cfg[j] == cfg[j - 1]) continue;  // distinct occupied sites only
        const std::uint32_t x = cfg[j];
        const double nx = static_cast<double>(std::count(cfg.begin(), cfg.end(), x));
        for (std::size_t k = m1.row_ptr()[x]; k < m1.row_ptr()[x + 1]; ++k) {
          const std::uint32_t y = m1.col()[k];
          const cplx amp = std::conj(m1.val()[k]);
          if (y == x) {
            t.push_back({s, s, amp * nx});
            continue;
          }
          const double ny = static_cast<double>(std::count(cfg.begin(), cfg.end(), y));
          std::vector<std::uint32_t> moved = cfg;
          moved[j] = y;
          t.push_back({basis.index(moved), s, amp * std::sqrt(nx * (ny + 1.0))});
        }
      }
    }
  }
  CsrMatrix m = CsrMatrix::from_triplets(basis.size(), std::move(t));
  return ManyBodyHamiltonian{box, std::move(basis), std::move(m)};
}

std::vector<double> product_cutoff(const ManyBodyBasis& basis, const Box& box, const Region& x) {
  std::vector<char> inside(box.size(), 0);
  for (const auto& s : x.sites()) {
    if (box.contains(s)) inside[box.index(s)] = 1;
  }
  std::vector<double> chi(basis.size(), 0.0);
  const auto n = static_cast<std::size_t>(basis.particles());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const std::uint32_t* c = basis.config(i);
    chi[i] = std::all_of(c, c + n, [&](std::uint32_t site) { return inside[site] != 0; }) ? 1.0 : 0.0;
  }
  return chi;
}

std::vector<std::size_t> transposition_permutation(const ManyBodyBasis& basis, int i, int j) {
  if (basis.sector() != Sector::Distinguishable) throw DomainError("transpositions act on the distinguishable sector");
  if (i < 0 || j < 0 || i >= basis.particles() || j >= basis.particles()) throw DomainError("particle label out of range");
  const auto n = static_cast<std::size_t>(basis.particles());
  std::vector<std::size_t> perm(basis.size());
  std::vector<std::uint32_t> cfg(n);
  for (std::size_t s = 0; s < basis.size(); ++s) {
    std::copy(basis.config(s), basis.config(s) + n, cfg.begin());
    std::swap(cfg[static_cast<std::size_t>(i)], cfg[static_cast<std::size_t>(j)]);
    perm[s] = basis.index(cfg);
  }
  return perm;
}

}  // namespace lightcone
