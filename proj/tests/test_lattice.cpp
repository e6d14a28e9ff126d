#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numeric>
#include <random>
#include <set>

#include "lightcone/evolve.hpp"
#include "lightcone/hamiltonian.hpp"

using namespace lightcone;

namespace {

DispersionRelation nn_chain() { return DispersionRelation::discrete_laplacian(1); }

// Eigenvalues of a real symmetric tridiagonal matrix by Sturm-sequence bisection.
std::vector<double> tridiagonal_eigenvalues(const std::vector<double>& diag, const std::vector<double>& off) {
  const std::size_t n = diag.size();
  auto count_below = [&](double x) {
    std::size_t c = 0;
    double q = diag[0] - x;
    if (q < 0) ++c;
    for (std::size_t i = 1; i < n; ++i) {
      if (q == 0.0) q = 1e-300;
      q = diag[i] - x - off[i - 1] * off[i - 1] / q;
      if (q < 0) ++c;
    }
    return c;
  };
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(off[i - 1]) : 0.0) + (i + 1 < n ? std::abs(off[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  std::vector<double> out;
  for (std::size_t k = 0; k < n; ++k) {
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      if (count_below(m) > k) {
        b = m;
      } else {
        a = m;
      }
    }
    out.push_back(0.5 * (a + b));
  }
  return out;
}

RealVector hermitian_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = {g(rng), g(rng)};
  return v;
}

}  // namespace

TEST_CASE("box and region basics") {
  const Box b(2, {-1, 0, 0}, {1, 2, 0});
  CHECK(b.size() == 9);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.index(b.site(i)) == i);
  CHECK(b.site(0) == Site{-1, 0, 0});
  CHECK(b.site(1) == Site{-1, 1, 0});  // first axis slowest
  CHECK_THROWS_AS(b.index({2, 0, 0}), DomainError);
  CHECK_THROWS_AS(Box(1, {3, 0, 0}, {2, 0, 0}), DomainError);

  const Region r(1, {{3, 0, 0}, {1, 0, 0}, {3, 0, 0}});
  REQUIRE(r.size() == 2);
  CHECK(r.sites()[0][0] == 1);
  CHECK(r.within(Box::interval(0, 5)));
  CHECK(!r.within(Box::interval(2, 5)));
}

TEST_CASE("region distance examples") {
  CHECK(region_distance(Region::interval(0, 10), Region::interval(20, 30)) == 10.0);
  CHECK(region_distance(Region::interval(0, 10), Region::interval(5, 30)) == 0.0);
  CHECK(region_distance(Region(2, {{0, 0, 0}}), Region(2, {{3, 4, 0}})) == 5.0);
  CHECK_THROWS_AS(region_distance(Region(1, {}), Region::interval(0, 1)), DomainError);
}

TEST_CASE("neighbourhood examples") {
  const Box box = Box::interval(-50, 50);
  const Region x = Region::interval(0, 10);
  CHECK(neighborhood(x, 0.0, box) == x);
  CHECK(neighborhood(x, 2.5, box) == Region::interval(-2, 12));
  CHECK(neighborhood(x, 2.0, box) == Region::interval(-1, 11));
  CHECK(neighborhood(x, 1000.0, box) == Region::whole(box));
  CHECK(neighborhood(Region::interval(45, 50), 10.0, box) == Region::interval(36, 50));
}

TEST_CASE("projection algebra") {
  const Box box(2, {0, 0, 0}, {4, 3, 0});
  const Region x(2, {{0, 0, 0}, {1, 2, 0}, {4, 3, 0}});
  const auto a = indicator(box, x);
  const auto b = indicator(box, x.complement(box));
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] * b[i] == 0.0);
    CHECK(a[i] + b[i] == 1.0);
  }
}

TEST_CASE("half-space decomposition") {
  SUBCASE("intervals are one piece") {
    const auto p = half_space_decomposition(Region::interval(-20, -3), Region::interval(4, 9));
    REQUIRE(p.size() == 1);
    CHECK(p[0].gap == doctest::Approx(7.0));
  }
  SUBCASE("pieces partition the pairs of a non-convex geometry") {
    // C surrounded on two sides by A in Z^2.
    std::vector<Site> as, cs;
    for (int i = 0; i <= 6; ++i) {
      as.push_back({i, 0, 0});
      as.push_back({0, i, 0});
    }
    for (int i = 3; i <= 5; ++i) {
      for (int j = 3; j <= 5; ++j) cs.push_back({i, j, 0});
    }
    const Region a(2, as), c(2, cs);
    const auto pieces = half_space_decomposition(a, c);
    std::multiset<std::pair<Site, Site>> covered;
    for (const auto& p : pieces) {
      CHECK(p.gap > 0.0);
      for (const auto& s : p.a.sites()) {
        for (const auto& t : p.b.sites()) covered.insert({s, t});
      }
    }
    CHECK(covered.size() == a.size() * c.size());
    for (const auto& s : a.sites()) {
      for (const auto& t : c.sites()) CHECK(covered.count({s, t}) == 1);
    }
  }
  SUBCASE("intersecting regions are rejected") {
    CHECK_THROWS_AS(half_space_decomposition(Region::interval(0, 5), Region::interval(5, 8)), DomainError);
  }
}

TEST_CASE("build_hamiltonian examples") {
  SUBCASE("NN chain on 5 sites") {
    const auto h = build_hamiltonian(nn_chain(), zero_potential(), Box::interval(0, 4));
    Matrix expected = Matrix::Zero(5, 5);
    for (int i = 0; i < 5; ++i) {
      expected(i, i) = 2.0;
      if (i + 1 < 5) expected(i, i + 1) = expected(i + 1, i) = -1.0;
    }
    CHECK((h.dense() - expected).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero hopping with a linear potential") {
    const auto h = build_hamiltonian(DispersionRelation::constant(1, 0.0), linear_potential({1.0, 0.0, 0.0}),
                                     Box::interval(-3, 4));
    const Matrix d = h.dense();
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) CHECK(d(i, j) == (i == j ? cplx{-3.0 + i} : cplx{0.0}));
    }
  }
  SUBCASE("delta bump against Sturm bisection") {
    const auto h = build_hamiltonian(nn_chain(), delta_potential({0, 0, 0}, 1.0), Box::interval(-30, 30));
    std::vector<double> diag(61, 2.0), off(60, -1.0);
    diag[30] += 1.0;
    const auto oracle = tridiagonal_eigenvalues(diag, off);
    const RealVector ev = hermitian_eigenvalues(h.dense());
    for (int i = 0; i < 61; ++i) CHECK(std::abs(ev(i) - oracle[static_cast<std::size_t>(i)]) < 1e-10);
  }
  SUBCASE("Hermitian and rejects complex potentials") {
    const auto h = build_hamiltonian(DispersionRelation::exponential_decay(2, 0.5, 1.2), linear_potential({0.3, -0.1, 0}),
                                     Box(2, {0, 0, 0}, {6, 5, 0}));
    CHECK(h.matrix().hermiticity_defect() < 1e-14);
    CHECK_THROWS_AS(build_hamiltonian(nn_chain(), [](const Site&) { return cplx{0.0, 1.0}; }, Box::interval(0, 3)),
                    DomainError);
    CHECK_THROWS_AS(build_hamiltonian(nn_chain(), zero_potential(), Box(2, {0, 0, 0}, {2, 2, 0})), DomainError);
  }
}

TEST_CASE("deformed Hamiltonian") {
  const Box box = Box::interval(-20, 20);
  const auto h = build_hamiltonian(nn_chain(), delta_potential({3, 0, 0}, 0.5), box);
  SUBCASE("real zeta preserves the spectrum") {
    const auto hz = build_deformed_hamiltonian(h, {cplx{0.7}, 0.0, 0.0});
    const RealVector a = hermitian_eigenvalues(h.dense());
    const RealVector b = hermitian_eigenvalues(hz.dense());
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("imaginary zeta scales the hopping entries") {
    const double mu = 0.6;
    const auto hz = build_deformed_hamiltonian(h, imaginary_direction(mu, {1.0, 0.0, 0.0}));
    const Matrix d = hz.dense();
    const Matrix d0 = h.dense();
    for (int i = 0; i < 41; ++i) {
      CHECK(d(i, i) == d0(i, i));
      if (i + 1 < 41) {
        CHECK(std::abs(d(i + 1, i) - cplx{-std::exp(mu)}) < 1e-14);
        CHECK(std::abs(d(i, i + 1) - cplx{-std::exp(-mu)}) < 1e-14);
      }
    }
    // |(H_zeta)_xy| = |h_xy| e^{mu b.(x - y)}
    for (int x = 0; x < 41; ++x) {
      for (int y = 0; y < 41; ++y) CHECK(std::abs(std::abs(d(x, y)) - std::abs(d0(x, y)) * std::exp(mu * (x - y))) < 1e-13);
    }
  }
  SUBCASE("strip and double deformation errors") {
    const auto he = build_hamiltonian(DispersionRelation::exponential_decay(1, 1.0, 0.5), zero_potential(), box);
    CHECK_THROWS_AS(build_deformed_hamiltonian(he, imaginary_direction(0.6, {1.0, 0, 0})), DomainError);
    const auto hz = build_deformed_hamiltonian(h, imaginary_direction(0.3, {1.0, 0, 0}));
    CHECK_THROWS_AS(build_deformed_hamiltonian(hz, imaginary_direction(0.3, {1.0, 0, 0})), DomainError);
  }
}

TEST_CASE("imaginary part of the deformed chain") {
  // On an open L-site chain Im H_{i mu} is tridiagonal with off-diagonal
  // -/+ i sinh(mu), so its top eigenvalue is 2 sinh(mu) cos(pi / (L + 1)).
  const int L = 201;
  const auto h = build_hamiltonian(nn_chain(), zero_potential(), Box::interval(-100, 100));
  for (double mu : {0.5, 1.0}) {
    const auto hz = build_deformed_hamiltonian(h, imaginary_direction(mu, {1.0, 0, 0}));
    const double top = max_imaginary_part(hz.matrix());
    CHECK(std::abs(top - 2.0 * std::sinh(mu) * std::cos(kPi / (L + 1))) < 1e-8);
    CHECK(top <= mu * velocity_constant(nn_chain(), mu).c + 1e-6);
    CHECK(std::abs(top - 2.0 * std::sinh(mu)) < 2.0 * std::sinh(mu) * 1.3e-4);
  }
}

TEST_CASE("conjugation identity on a 101-site chain") {
  const Box box = Box::interval(-50, 50);
  const auto h = build_hamiltonian(nn_chain(), delta_potential({0, 0, 0}, 0.4), box);
  const Matrix u_ref = dense_exponential(h.matrix(), cplx{0.0, -1.0} * 3.0);
  for (double mu : {0.25, 1.0}) {
    for (double b : {-1.0, 1.0}) {
      const Quasimomentum zeta = imaginary_direction(mu, {b, 0, 0});
      const auto hz = build_deformed_hamiltonian(h, zeta);
      const Matrix uz = dense_exponential(hz.matrix(), cplx{0.0, -1.0} * 3.0);
      const auto tz = deformation_diagonal(box, zeta);
      const auto tzi = deformation_diagonal(box, zeta, true);
      // chi_X U chi_Y against chi_X T^{-1} U_zeta T chi_Y for X left half, Y right half.
      double diff = 0.0, scale_x = 0.0, scale_y = 0.0;
      for (int x = 0; x < 50; ++x) scale_x = std::max(scale_x, std::abs(tzi[static_cast<std::size_t>(x)]));
      for (int y = 51; y < 101; ++y) scale_y = std::max(scale_y, std::abs(tz[static_cast<std::size_t>(y)]));
      for (int x = 0; x < 50; ++x) {
        for (int y = 51; y < 101; ++y) {
          const cplx rhs = tzi[static_cast<std::size_t>(x)] * uz(x, y) * tz[static_cast<std::size_t>(y)];
          diff = std::max(diff, std::abs(u_ref(x, y) - rhs));
        }
      }
      const double scale = scale_x * operator_norm(uz).value * scale_y;
      CHECK(diff / scale < 1e-8);
    }
  }
}

TEST_CASE("N-particle Hamiltonians") {
  const Box box = Box::interval(0, 6);
  const auto disp = nn_chain();
  const auto v = delta_potential({2, 0, 0}, 0.3);
  SUBCASE("N = 1 equals the one-body Hamiltonian") {
    const auto h1 = build_hamiltonian(disp, v, box);
    const auto hn = build_n_particle_hamiltonian(disp, v, no_interaction(), 1, box, Sector::Distinguishable);
    CHECK((h1.dense() - hn.matrix.to_dense()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("free two-body spectrum is the outer sum") {
    const auto h1 = build_hamiltonian(disp, v, box);
    const RealVector e1 = hermitian_eigenvalues(h1.dense());
    std::vector<double> sums;
    for (int i = 0; i < e1.size(); ++i) {
      for (int j = 0; j < e1.size(); ++j) sums.push_back(e1(i) + e1(j));
    }
    std::sort(sums.begin(), sums.end());
    const auto hn = build_n_particle_hamiltonian(disp, v, no_interaction(), 2, box, Sector::Distinguishable);
    const RealVector e2 = hermitian_eigenvalues(hn.matrix.to_dense());
    REQUIRE(static_cast<std::size_t>(e2.size()) == sums.size());
    for (std::size_t k = 0; k < sums.size(); ++k) CHECK(std::abs(e2(static_cast<Eigen::Index>(k)) - sums[k]) < 1e-9);
  }
  SUBCASE("sector dimensions and the cap") {
    CHECK(build_n_particle_hamiltonian(disp, v, no_interaction(), 2, Box::interval(0, 2), Sector::Bosonic).basis.size() == 6);
    CHECK(ManyBodyBasis::sector_dimension(7, 3, Sector::Bosonic) == 84);
    CHECK(ManyBodyBasis::sector_dimension(7, 3, Sector::Distinguishable) == 343);
    CHECK_THROWS_AS(build_n_particle_hamiltonian(disp, v, no_interaction(), 3, Box::interval(0, 40),
                                                 Sector::Distinguishable),
                    ResourceError);
  }
  SUBCASE("Hermitian in both sectors with interaction") {
    for (Sector s : {Sector::Distinguishable, Sector::Bosonic}) {
      const auto hn = build_n_particle_hamiltonian(disp, v, onsite_interaction(1.5), 3, box, s);
      CHECK(hn.matrix.hermiticity_defect() < 1e-14);
    }
  }
  SUBCASE("bosonic free spectrum is the symmetric outer sum") {
    const auto h1 = build_hamiltonian(disp, v, box);
    const RealVector e1 = hermitian_eigenvalues(h1.dense());
    std::vector<double> sums;
    for (int i = 0; i < e1.size(); ++i) {
      for (int j = i; j < e1.size(); ++j) sums.push_back(e1(i) + e1(j));
    }
    std::sort(sums.begin(), sums.end());
    const auto hn = build_n_particle_hamiltonian(disp, v, no_interaction(), 2, box, Sector::Bosonic);
    const RealVector e2 = hermitian_eigenvalues(hn.matrix.to_dense());
    for (std::size_t k = 0; k < sums.size(); ++k) CHECK(std::abs(e2(static_cast<Eigen::Index>(k)) - sums[k]) < 1e-9);
  }
}

TEST_CASE("permutation symmetry of the distinguishable sector") {
  const Box box = Box::interval(0, 7);
  const auto hn = build_n_particle_hamiltonian(nn_chain(), linear_potential({0.2, 0, 0}), onsite_interaction(2.0), 3, box,
                                               Sector::Distinguishable);
  for (auto [i, j] : {std::pair{0, 1}, std::pair{0, 2}, std::pair{1, 2}}) {
    const auto perm = transposition_permutation(hn.basis, i, j);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const Vector v = random_vector(hn.basis.size(), seed);
      Vector pv(v.size());
      for (std::size_t k = 0; k < perm.size(); ++k) pv(static_cast<Eigen::Index>(perm[k])) = v(static_cast<Eigen::Index>(k));
      const Vector hv = hn.matrix.multiply(v);
      const Vector hpv = hn.matrix.multiply(pv);
      Vector phv(v.size());
      for (std::size_t k = 0; k < perm.size(); ++k) phv(static_cast<Eigen::Index>(perm[k])) = hv(static_cast<Eigen::Index>(k));
      CHECK((hpv - phv).norm() < 1e-12);
    }
  }
}

TEST_CASE("product cutoff") {
  const Box box = Box::interval(0, 9);
  const ManyBodyBasis bos(10, 2, Sector::Bosonic);
  const ManyBodyBasis dis(10, 2, Sector::Distinguishable);
  auto sum = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); };
  const auto all = product_cutoff(dis, box, Region::whole(box));
  CHECK(sum(all) == static_cast<double>(dis.size()));
  CHECK(sum(product_cutoff(dis, box, Region(1, {}))) == 0.0);
  const auto half = product_cutoff(bos, box, Region::interval(0, 4));
  CHECK(sum(half) == 15.0);  // C(5 + 1, 2)
  for (double x : half) CHECK(x * x == x);
}
