#include "lightcone/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include "lightcone/kernels.hpp"
#include "lightcone/parallel.hpp"

namespace lightcone {

// ---------------------------------------------------------------------------
// Bessel coefficients

int bessel_cutoff(double x, double floor) {
  const double ax = std::abs(x);
  if (ax == 0.0) return 1;
  // |J_k(x)| <= (|x|/2)^k / k!
  const double log_floor = std::log(floor);
  const double log_half = std::log(ax / 2.0);
  int k = static_cast<int>(std::ceil(ax)) + 1;
  while (k * log_half - std::lgamma(k + 1.0) >= log_floor) ++k;
  return k;
}

std::vector<double> bessel_j_sequence(double x, int k_max) {
  if (k_max < 0) throw DomainError("negative Bessel order");
  std::vector<double> j(static_cast<std::size_t>(k_max) + 1, 0.0);
  if (x == 0.0) {
    j[0] = 1.0;
    return j;
  }
  const double ax = std::abs(x);
  const int start = std::max(k_max, bessel_cutoff(ax, 1e-320)) + 16;
  std::vector<double> v(static_cast<std::size_t>(start) + 2, 0.0);
  v[static_cast<std::size_t>(start) + 1] = 0.0;
  v[static_cast<std::size_t>(start)] = 1e-300;
  for (int k = start; k >= 1; --k) {
    const auto ku = static_cast<std::size_t>(k);
    v[ku - 1] = (2.0 * k / ax) * v[ku] - v[ku + 1];
    if (std::abs(v[ku - 1]) > 1e200) {
      for (std::size_t i = ku - 1; i < v.size(); ++i) v[i] *= 1e-200;
    }
  }
  // J_0^2 + 2 sum J_k^2 = 1 fixes the scale; J_0 + 2 sum J_2k = 1 the sign.
  double sq = v[0] * v[0];
  double even = v[0];
  for (std::size_t k = 1; k < v.size(); ++k) {
    sq += 2.0 * v[k] * v[k];
    if (k % 2 == 0) even += 2.0 * v[k];
  }
  const double scale = (even < 0.0 ? -1.0 : 1.0) / std::sqrt(sq);
  for (int k = 0; k <= k_max; ++k) {
    double value = v[static_cast<std::size_t>(k)] * scale;
    if (x < 0.0 && (k % 2 == 1)) value = -value;
    j[static_cast<std::size_t>(k)] = value;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Propagator

Propagator::Propagator(CsrMatrix h, PropagationMethod method) : h_(std::move(h)), method_(method) {
  const double defect = h_.hermiticity_defect();
  if (defect > 1e-12) throw DomainError("propagator requires a Hermitian matrix");
  if (method_ == PropagationMethod::Auto) {
    method_ = h_.rows() <= kSpectralLimit ? PropagationMethod::Spectral : PropagationMethod::Chebyshev;
  }
  auto [lo, hi] = h_.gershgorin();
  const double width = std::max(hi - lo, 1e-12);
  lo -= 0.005 * width;
  hi += 0.005 * width;
  center_ = 0.5 * (lo + hi);
  half_ = 0.5 * (hi - lo);
  if (method_ == PropagationMethod::Spectral) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h_.to_dense());
    if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
    spectral_ = std::make_shared<Spectral>(Spectral{es.eigenvectors(), es.eigenvalues()});
  }
}

int Propagator::chebyshev_terms(double t) const { return bessel_cutoff(half_ * t) + 1; }

Vector Propagator::apply_chebyshev(const Vector& psi, double t) const {
  const std::size_t n = h_.rows();
  const double tau = half_ * t;
  const int terms = chebyshev_terms(t);
  if (terms > kMaxTerms) throw ResourceError("Chebyshev expansion needs too many terms for this time step");
  const auto jk = bessel_j_sequence(std::abs(tau), terms - 1);
  const auto& kt = kernels::active();
  // e^{-i tau x} = sum_k (2 - delta_k0) (-i sgn)^k J_k(|tau|) T_k(x)
  const cplx step = tau >= 0.0 ? cplx{0.0, -1.0} : cplx{0.0, 1.0};
  Vector prev = psi;
  Vector cur(static_cast<Eigen::Index>(n));
  Vector next(static_cast<Eigen::Index>(n));
  Vector hv(static_cast<Eigen::Index>(n));
  Vector out = psi * jk[0];
  if (terms > 1) {
    h_.multiply(prev.data(), hv.data());
    cur = (hv - center_ * prev) / half_;
    kt.axpy(n, 2.0 * step * jk[1], cur.data(), out.data());
  }
  cplx phase = step;
  const double alpha = 2.0 / half_;
  const double beta = -2.0 * center_ / half_;
  for (int k = 2; k < terms; ++k) {
    h_.multiply(cur.data(), hv.data());
    kt.cheb_step(n, alpha, hv.data(), beta, cur.data(), prev.data(), next.data());
    phase *= step;
    const double c = jk[static_cast<std::size_t>(k)];
    if (c != 0.0) kt.axpy(n, 2.0 * c * phase, next.data(), out.data());
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  return out * std::exp(cplx{0.0, -center_ * t});
}

Vector Propagator::apply(const Vector& psi, double t) const {
  if (static_cast<std::size_t>(psi.size()) != dimension()) throw DomainError("state dimension mismatch");
  if (t == 0.0) return psi;
  if (spectral_) {
    const Vector coeff = spectral_->vectors.adjoint() * psi;
    Vector phased(coeff.size());
    for (Eigen::Index i = 0; i < coeff.size(); ++i) {
      phased(i) = std::exp(cplx{0.0, -spectral_->values(i) * t}) * coeff(i);
    }
    return spectral_->vectors * phased;
  }
  return apply_chebyshev(psi, t);
}

Matrix Propagator::columns(std::span<const std::size_t> cols, double t) const {
  const auto n = static_cast<Eigen::Index>(dimension());
  Matrix out(n, static_cast<Eigen::Index>(cols.size()));
  if (spectral_) {
    Matrix vt(static_cast<Eigen::Index>(spectral_->vectors.cols()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      vt.col(static_cast<Eigen::Index>(j)) = spectral_->vectors.row(static_cast<Eigen::Index>(cols[j])).adjoint();
    }
    for (Eigen::Index i = 0; i < vt.rows(); ++i) vt.row(i) *= std::exp(cplx{0.0, -spectral_->values(i) * t});
    out.noalias() = spectral_->vectors * vt;
    return out;
  }
  parallel_for(cols.size(), [&](std::size_t j) {
    if (cols[j] >= dimension()) throw DomainError("column index out of range");
    Vector e = Vector::Zero(n);
    e(static_cast<Eigen::Index>(cols[j])) = 1.0;
    out.col(static_cast<Eigen::Index>(j)) = apply(e, t);
  });
  return out;
}

Matrix Propagator::rows(std::span<const std::size_t> r, double t) const {
  return columns(r, -t).adjoint();
}

Matrix Propagator::block(std::span<const std::size_t> r, std::span<const std::size_t> c, double t) const {
  // Propagate from the smaller side.
  Matrix out(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(c.size()));
  if (c.size() <= r.size()) {
    const Matrix cols = columns(c, t);
    for (std::size_t i = 0; i < r.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = cols.row(static_cast<Eigen::Index>(r[i]));
  } else {
    const Matrix rws = rows(r, t);
    for (std::size_t j = 0; j < c.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = rws.col(static_cast<Eigen::Index>(c[j]));
  }
  return out;
}

Matrix Propagator::full(double t) const {
  std::vector<std::size_t> all(dimension());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return columns(all, t);
}

// ---------------------------------------------------------------------------
// Norms

namespace {

// y = A x, column by column.
void gemv(const Matrix& a, const Vector& x, Vector& y) {
  const auto& kt = kernels::active();
  y.setZero(a.rows());
  const auto m = static_cast<std::size_t>(a.rows());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    if (x(j) != cplx{}) kt.axpy(m, x(j), a.col(j).data(), y.data());
  }
}

// z = A^H y
void gemv_adjoint(const Matrix& a, const Vector& y, Vector& z) {
  const auto& kt = kernels::active();
  z.resize(a.cols());
  const auto m = static_cast<std::size_t>(a.rows());
  for (Eigen::Index j = 0; j < a.cols(); ++j) z(j) = kt.dotc(m, a.col(j).data(), y.data());
}

}  // namespace

NormResult operator_norm(const Matrix& a, double tolerance) {
  NormResult res;
  if (a.size() == 0) return res;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return res;
  // Work on A / scale so that tiny blocks do not underflow in A^H A.
  const Matrix as = a / scale;
  // Block power iteration on A^H A with Rayleigh-Ritz extraction; the block
  // resolves near-degenerate top pairs (e.g. +-sigma of Hermitian blocks).
  const Eigen::Index block = std::min<Eigen::Index>(as.cols(), 8);
  std::mt19937_64 rng(0x6c69676874636f6eull);
  std::normal_distribution<double> gauss;
  constexpr int kRestarts = 3;
  constexpr int kMaxIter = 500;
  Matrix v(as.cols(), block);
  Matrix z(as.rows(), block);
  Matrix g(as.cols(), block);
  Vector tmp;
  double best = 0.0;
  bool converged = false;
  for (int restart = 0; restart < kRestarts && !converged; ++restart) {
    for (Eigen::Index c = 0; c < block; ++c) {
      for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, c) = cplx{gauss(rng), gauss(rng)};
    }
    v = Eigen::HouseholderQR<Matrix>(v).householderQ() * Matrix::Identity(v.rows(), block);
    for (int it = 0; it < kMaxIter; ++it) {
      ++res.iterations;
      for (Eigen::Index c = 0; c < block; ++c) {
        gemv(as, v.col(c), tmp);
        z.col(c) = tmp;
        gemv_adjoint(as, z.col(c), tmp);
        g.col(c) = tmp;
      }
      const Matrix t = z.adjoint() * z;
      Eigen::SelfAdjointEigenSolver<Matrix> es(t);
      const double theta = es.eigenvalues()(block - 1);
      best = std::max(best, theta);
      if (theta <= 0.0) {
        converged = true;
        break;
      }
      const Vector u = es.eigenvectors().col(block - 1);
      const double resid = (g * u - theta * (v * u)).norm();
      if (resid <= tolerance * theta) {
        converged = true;
        break;
      }
      v = Eigen::HouseholderQR<Matrix>(g).householderQ() * Matrix::Identity(g.rows(), block);
    }
  }
  if (!converged) {
    Eigen::BDCSVD<Matrix> svd(as);
    best = std::pow(svd.singularValues()(0), 2);
    res.converged = false;
  }
  res.value = std::sqrt(best) * scale;
  return res;
}

double leakage_norm(const Propagator& p, const Box& box, const Region& x, const Region& y, double t) {
  if (x.empty() || y.empty()) return 0.0;
  const auto xi = site_indices(box, x);
  const auto yi = site_indices(box, y);
  return operator_norm(p.block(xi, yi, t)).value;
}

Matrix dense_exponential(const CsrMatrix& h, cplx factor) {
  const Matrix a = h.to_dense() * factor;
  return a.exp();
}

double deformed_evolution_norm(const CsrMatrix& h_zeta, double t) {
  return operator_norm(dense_exponential(h_zeta, cplx{0.0, -t})).value;
}

// ---------------------------------------------------------------------------
// Observables

namespace {

// chi_X A chi_X + chi_{X^c}, computed entrywise.
Matrix restrict_to(const Matrix& a, const std::vector<double>& chi) {
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    if (chi[cu] == 0.0) {
      out(c, c) = 1.0;
      continue;
    }
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (chi[static_cast<std::size_t>(r)] != 0.0) out(r, c) = a(r, c);
    }
  }
  return out;
}

void require_square(const Matrix& a, std::size_t dim) {
  if (a.rows() != a.cols() || static_cast<std::size_t>(a.rows()) != dim) {
    throw DomainError("operator dimension does not match the box");
  }
}

}  // namespace

Observable Observable::global(Matrix a) {
  if (a.rows() != a.cols()) throw DomainError("observable must be square");
  return Observable(std::move(a), std::nullopt);
}

Observable Observable::acting_on(Matrix a, const Box& box, Region x) {
  require_square(a, box.size());
  if (!x.within(box)) throw DomainError("action domain outside the box");
  const Matrix r = restrict_to(a, indicator(box, x));
  if (r != a) throw DomainError("operator does not act on the declared region: A != chi_X A chi_X + chi_{X^c}");
  return Observable(std::move(a), std::move(x));
}

Observable Observable::from_block(const Matrix& local, const Box& box, Region x) {
  if (!x.within(box)) throw DomainError("action domain outside the box");
  const auto idx = site_indices(box, x);
  if (local.rows() != static_cast<Eigen::Index>(idx.size()) || local.cols() != local.rows()) {
    throw DomainError("local block size does not match the region");
  }
  Matrix a = Matrix::Identity(static_cast<Eigen::Index>(box.size()), static_cast<Eigen::Index>(box.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (std::size_t j = 0; j < idx.size(); ++j) {
      a(static_cast<Eigen::Index>(idx[i]), static_cast<Eigen::Index>(idx[j])) =
          local(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return Observable(std::move(a), std::move(x));
}

Observable Observable::random_localized(const Box& box, Region x, std::uint64_t seed) {
  const auto k = static_cast<Eigen::Index>(x.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix g(k, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index r = 0; r < k; ++r) g(r, c) = cplx{gauss(rng), gauss(rng)};
  }
  Matrix h = (g + g.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  const double n = std::max(std::abs(es.eigenvalues().minCoeff()), std::abs(es.eigenvalues().maxCoeff()));
  if (n > 0.0) h /= n;
  return from_block(h, box, std::move(x));
}

double Observable::norm() const {
  if (!norm_) norm_ = operator_norm(a_).value;
  return *norm_;
}

DensityOperator::DensityOperator(Matrix rho, const Box& box, std::optional<Region> support)
    : rho_(std::move(rho)), support_(std::move(support)) {
  require_square(rho_, box.size());
  if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("density operator is not Hermitian");
  if (std::abs(rho_.trace() - cplx{1.0}) > 1e-10) throw DomainError("density operator must have unit trace");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-12) throw DomainError("density operator has a negative eigenvalue");
  if (support_) {
    if (!support_->within(box)) throw DomainError("support region outside the box");
    if (1.0 - state_region_probability(rho_, box, *support_) >= 1e-12) {
      throw DomainError("density operator is not supported in the declared region");
    }
  }
}

DensityOperator DensityOperator::pure(const Vector& psi, const Box& box, std::optional<Region> support) {
  const double n = psi.norm();
  if (n == 0.0) throw DomainError("zero state vector");
  const Vector u = psi / n;
  return DensityOperator(u * u.adjoint(), box, std::move(support));
}

DensityOperator DensityOperator::site(const Box& box, const Site& s) {
  Vector psi = Vector::Zero(static_cast<Eigen::Index>(box.size()));
  psi(static_cast<Eigen::Index>(box.index(s))) = 1.0;
  return pure(psi, box, Region(box.dimension(), {s}));
}

DensityOperator DensityOperator::random_mixed(const Box& box, const Region& x, int rank, std::uint64_t seed) {
  if (rank < 1) throw DomainError("rank must be positive");
  const auto idx = site_indices(box, x);
  const auto d = static_cast<Eigen::Index>(box.size());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix g = Matrix::Zero(d, rank);
  for (Eigen::Index c = 0; c < rank; ++c) {
    for (std::size_t i : idx) g(static_cast<Eigen::Index>(i), c) = cplx{gauss(rng), gauss(rng)};
  }
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityOperator(std::move(rho), box, x);
}

Observable localize_observable(const Observable& a, const Box& box) {
  if (!a.domain()) throw DomainError("observable has no declared action domain");
  const auto chi = indicator(box, *a.domain());
  Matrix t = a.matrix();
  for (Eigen::Index c = 0; c < t.cols(); ++c) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      if (chi[static_cast<std::size_t>(r)] == 0.0 || chi[static_cast<std::size_t>(c)] == 0.0) t(r, c) = 0.0;
    }
    if (chi[static_cast<std::size_t>(c)] != 0.0) t(c, c) -= 1.0;
  }
  return Observable::global(std::move(t));
}

Observable heisenberg_evolve(const Propagator& p, const Observable& a, double t) {
  if (a.dimension() != p.dimension()) throw DomainError("observable dimension mismatch");
  if (t == 0.0) return a;
  const Matrix u = p.full(t);
  return Observable::global(u.adjoint() * a.matrix() * u);
}

Matrix schrodinger_evolve(const Propagator& p, const Matrix& rho, double t) {
  if (t == 0.0) return rho;
  const Matrix u = p.full(t);
  return u * rho * u.adjoint();
}

Observable lc_truncation(const Observable& a_t, const Box& box, const Region& u) {
  require_square(a_t.matrix(), box.size());
  return Observable::acting_on(restrict_to(a_t.matrix(), indicator(box, u)), box, u);
}

double commutator_norm(const Observable& a_t, const Observable& b) {
  const Matrix k = a_t.matrix() * b.matrix() - b.matrix() * a_t.matrix();
  return operator_norm(k).value;
}

double otoc(const DensityOperator& rho, const Observable& a_t, const Observable& b) {
  const Matrix k = a_t.matrix() * b.matrix() - b.matrix() * a_t.matrix();
  return -(k * k * rho.matrix()).trace().real();
}

double state_region_probability(const Matrix& rho, const Box& box, const Region& x) {
  double p = 0.0;
  for (std::size_t i : site_indices(box, x)) p += rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  return p;
}

}  // namespace lightcone
