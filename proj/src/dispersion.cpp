#include "lightcone/dispersion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace lightcone {
namespace {

constexpr double kGolden = 0.6180339887498949;

double dot(const Site& x, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += static_cast<double>(x[j]) * v[j];
  return s;
}

double norm2(const Site& x) {
  double s = 0.0;
  for (int v : x) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

Site negate(const Site& x) {
  Site y{};
  for (int j = 0; j < kMaxDim; ++j) y[j] = -x[j];
  return y;
}

// Golden-section search for a maximum of g on [a, b]. Returns the best point
// seen, including the starting point `x0` with value `v0`.
std::pair<double, double> golden_max(const std::function<double(double)>& g, double a, double b, double tol,
                                     double x0, double v0) {
  double best_x = x0;
  double best_v = v0;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = g(c);
  double fd = g(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = g(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = g(d);
    }
  }
  for (auto [x, v] : {std::pair{c, fc}, std::pair{d, fd}}) {
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }
  return {best_x, best_v};
}

struct Coordinate {
  double lo = 0.0;
  double hi = 0.0;
  bool periodic = true;
  int grid = 1;
  double offset = 0.0;

  double node(int i) const {
    const double h = (hi - lo) / grid;
    return periodic ? lo + offset + h * i : lo + h * (i + 0.5);
  }
  double spacing() const { return (hi - lo) / grid; }
};

struct MaxResult {
  std::vector<double> x;
  double value = -kInf;
  bool converged = true;
};

using Objective = std::function<double(std::span<const double>)>;

// Coordinate-wise golden-section ascent from `start`.
MaxResult refine(const Objective& f, std::span<const Coordinate> coords, MaxResult start, double tol,
                 int max_sweeps) {
  MaxResult r = std::move(start);
  std::vector<double> x = r.x;
  r.converged = false;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (std::size_t j = 0; j < coords.size(); ++j) {
      const Coordinate& c = coords[j];
      const double h = c.spacing();
      double a = r.x[j] - h;
      double b = r.x[j] + h;
      if (!c.periodic) {
        const double eps = 1e-9 * (c.hi - c.lo);
        a = std::max(a, c.lo + eps);
        b = std::min(b, c.hi - eps);
      }
      x = r.x;
      auto g = [&](double s) {
        x[j] = s;
        return f(x);
      };
      const auto [bx, bv] = golden_max(g, a, b, tol, r.x[j], r.value);
      if (bv > r.value) {
        moved = std::max(moved, std::abs(bx - r.x[j]));
        r.x[j] = bx;
        r.value = bv;
      }
    }
    if (moved < tol) {
      r.converged = true;
      break;
    }
  }
  return r;
}

MaxResult maximize(const Objective& f, std::span<const Coordinate> coords, double tol, int max_sweeps) {
  MaxResult best;
  best.x.assign(coords.size(), 0.0);
  std::vector<int> idx(coords.size(), 0);
  std::vector<double> x(coords.size());
  while (true) {
    for (std::size_t j = 0; j < coords.size(); ++j) x[j] = coords[j].node(idx[j]);
    const double v = f(x);
    if (v > best.value) {
      best.value = v;
      best.x = x;
    }
    std::size_t j = 0;
    for (; j < coords.size(); ++j) {
      if (++idx[j] < coords[j].grid) break;
      idx[j] = 0;
    }
    if (j == coords.size()) break;
  }
  return refine(f, coords, std::move(best), tol, max_sweeps);
}

std::vector<std::array<double, kMaxDim>> sample_directions(int n, int count) {
  std::vector<std::array<double, kMaxDim>> out;
  if (n == 1) {
    out.push_back({1.0, 0.0, 0.0});
    out.push_back({-1.0, 0.0, 0.0});
  } else if (n == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * kPi * k / count;
      out.push_back({std::cos(th), std::sin(th), 0.0});
    }
  } else {
    // Antipodally symmetric Fibonacci set.
    const int half = std::max(1, count / 2);
    const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < half; ++k) {
      const double z = 1.0 - (2.0 * k + 1.0) / (2.0 * half);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden_angle * k;
      out.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    for (int k = 0; k < half; ++k) out.push_back({-out[k][0], -out[k][1], -out[k][2]});
  }
  return out;
}

std::array<double, kMaxDim> direction_from_angles(int n, std::span<const double> ang) {
  if (n == 2) return {std::cos(ang[0]), std::sin(ang[0]), 0.0};
  return {std::sin(ang[0]) * std::cos(ang[1]), std::sin(ang[0]) * std::sin(ang[1]), std::cos(ang[0])};
}

std::vector<double> angles_from_direction(int n, const std::array<double, kMaxDim>& b) {
  if (n == 2) return {std::atan2(b[1], b[0])};
  return {std::acos(std::clamp(b[2], -1.0, 1.0)), std::atan2(b[1], b[0])};
}

struct SupResult {
  double value = 0.0;
  std::vector<DirectionSample> profile;
  bool converged = true;
};

// sup over the quasimomentum cell and unit directions of f(xi, b).
using DirectionalObjective = std::function<double(std::span<const double>, std::span<const double>)>;

SupResult sup_over_cell_and_directions(const DirectionalObjective& f, int n, bool periodic,
                                       const OptimizationSettings& opts) {
  int per_dim = opts.grid_points;
  if (n >= 2) {
    while (per_dim > 2 && std::pow(static_cast<double>(per_dim), n) > static_cast<double>(opts.max_grid_total)) {
      per_dim /= 2;
    }
  }
  std::vector<Coordinate> xi_coords;
  for (int j = 0; j < n; ++j) {
    if (periodic) {
      xi_coords.push_back({-kPi, kPi, true, per_dim, opts.grid_offset});
    } else {
      xi_coords.push_back({-kPi / 2, kPi / 2, false, per_dim, 0.0});
    }
  }
  // Non-periodic cells are R^n reached through xi = tan(theta).
  auto to_xi = [periodic](std::span<const double> th, std::vector<double>& xi) {
    for (std::size_t j = 0; j < th.size(); ++j) xi[j] = periodic ? th[j] : std::tan(th[j]);
  };

  SupResult out;
  out.value = -kInf;
  std::size_t best_dir = 0;
  std::vector<MaxResult> per_direction;
  const auto dirs = sample_directions(n, opts.directions);
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const auto& b = dirs[k];
    std::vector<double> xi(n);
    auto g = [&](std::span<const double> th) {
      to_xi(th, xi);
      return f(xi, std::span<const double>(b.data(), n));
    };
    MaxResult r = maximize(g, xi_coords, opts.tolerance, opts.max_sweeps);
    out.converged = out.converged && r.converged;
    out.profile.push_back({b, r.value});
    if (r.value > out.value) {
      out.value = r.value;
      best_dir = k;
    }
    per_direction.push_back(std::move(r));
  }

  if (n >= 2) {
    // Joint polish over quasimomentum and direction angles.
    std::vector<Coordinate> coords = xi_coords;
    const double dtheta = (n == 2 ? 2.0 * kPi : kPi) / std::max(4, opts.directions);
    if (n == 2) {
      coords.push_back({-kPi, kPi, true, static_cast<int>(std::lround(2.0 * kPi / dtheta)), 0.0});
    } else {
      coords.push_back({0.0, kPi, true, static_cast<int>(std::lround(kPi / dtheta)), 0.0});
      coords.push_back({-kPi, kPi, true, static_cast<int>(std::lround(2.0 * kPi / dtheta)), 0.0});
    }
    MaxResult start = per_direction[best_dir];
    for (double a : angles_from_direction(n, dirs[best_dir])) start.x.push_back(a);
    std::vector<double> xi(n);
    auto g = [&](std::span<const double> z) {
      to_xi(z.first(n), xi);
      const auto b = direction_from_angles(n, z.subspan(n));
      return f(xi, std::span<const double>(b.data(), n));
    };
    MaxResult r = refine(g, coords, start, opts.tolerance, opts.max_sweeps);
    out.converged = out.converged && r.converged;
    if (r.value > out.value) {
      const auto b = direction_from_angles(n, std::span<const double>(r.x).subspan(n));
      out.profile.push_back({b, r.value});
      out.value = r.value;
    }
  }
  return out;
}

void require_lattice(const DispersionRelation& disp, const char* what) {
  if (!disp.lattice_terms()) {
    throw DomainError(std::string(what) + " requires a dispersion with a lattice hopping table; got " + disp.name());
  }
}

// Weighted sums sum |x|^k |t_x| diverge for power-law generators when
// exponent - k <= n.
void require_moment(const DispersionRelation& disp, int order) {
  const auto& law = disp.decay_law();
  if (law && law->kind == DecayLaw::Kind::Power && law->rate - order <= disp.dimension()) {
    std::ostringstream os;
    os << "sum |x|^" << order << " |t_x| diverges for power-law hopping with exponent " << law->rate
       << " in dimension " << disp.dimension();
    throw DomainError(os.str());
  }
}

// Re/abs of sum_x t_x (i b.x)^k e^{i xi.x}.
cplx derivative_symbol(const std::vector<HoppingTerm>& terms, int n, int k, std::span<const double> xi,
                       std::span<const double> b) {
  cplx ik{1.0, 0.0};
  for (int j = 0; j < k; ++j) ik *= cplx{0.0, 1.0};
  double re = 0.0;
  double im = 0.0;
  for (const auto& t : terms) {
    const double s = dot(t.displacement, b.first(n));
    const double phase = dot(t.displacement, xi.first(n));
    const double w = t.amplitude * std::pow(s, k);
    re += w * std::cos(phase);
    im += w * std::sin(phase);
  }
  return ik * cplx{re, im};
}

}  // namespace

// ---------------------------------------------------------------------------
// DispersionRelation

DispersionRelation DispersionRelation::hopping(int dimension, std::vector<HoppingTerm> terms, double strip) {
  if (dimension < 1 || dimension > kMaxDim) throw DomainError("dimension must be in [1, 3]");
  if (!(strip >= 0.0)) throw DomainError("strip half-width must be non-negative");
  std::map<Site, double> merged;
  for (const auto& t : terms) {
    for (int j = dimension; j < kMaxDim; ++j) {
      if (t.displacement[j] != 0) throw DomainError("hopping displacement has more components than the dimension");
    }
    if (!std::isfinite(t.amplitude)) throw DomainError("hopping amplitude must be finite");
    merged[t.displacement] += t.amplitude;
  }
  for (const auto& [x, a] : merged) {
    const auto it = merged.find(negate(x));
    const double other = it == merged.end() ? 0.0 : it->second;
    if (std::abs(a - other) > 1e-12 * std::max(1.0, std::abs(a))) {
      throw DomainError("hopping table is not symmetric under x -> -x");
    }
  }
  DispersionRelation d;
  d.dimension_ = dimension;
  d.form_ = Form::Hopping;
  d.strip_ = strip;
  for (const auto& [x, a] : merged) {
    if (a != 0.0) d.terms_.push_back({x, a});
  }
  return d;
}

DispersionRelation DispersionRelation::discrete_laplacian(int dimension) {
  if (dimension < 1 || dimension > kMaxDim) throw DomainError("dimension must be in [1, 3]");
  DispersionRelation d;
  d.dimension_ = dimension;
  d.form_ = Form::DiscreteLaplacian;
  d.terms_ = *d.lattice_terms();
  return d;
}

DispersionRelation DispersionRelation::semi_relativistic(int dimension, double mass, double strip) {
  if (dimension < 1 || dimension > kMaxDim) throw DomainError("dimension must be in [1, 3]");
  if (!(mass > 0.0)) throw DomainError("semi_relativistic mass must be positive");
  if (!(strip > 0.0)) throw DomainError("strip half-width must be positive");
  DispersionRelation d;
  d.dimension_ = dimension;
  d.form_ = Form::SemiRelativistic;
  d.parameter_ = mass;
  d.strip_ = strip;
  return d;
}

DispersionRelation DispersionRelation::constant(int dimension, double e0) {
  if (dimension < 1 || dimension > kMaxDim) throw DomainError("dimension must be in [1, 3]");
  if (!std::isfinite(e0)) throw DomainError("constant symbol must be finite");
  DispersionRelation d;
  d.dimension_ = dimension;
  d.form_ = Form::Constant;
  d.parameter_ = e0;
  d.terms_ = *d.lattice_terms();
  return d;
}

namespace {

std::vector<HoppingTerm> generate_table(int n, int range, double amplitude,
                                        const std::function<double(double)>& decay) {
  std::vector<HoppingTerm> terms;
  double onsite = 0.0;
  Site x{};
  std::function<void(int)> rec = [&](int j) {
    if (j == n) {
      const double r = norm2(x);
      if (r > 0.0) {
        const double t = -amplitude * decay(r);
        terms.push_back({x, t});
        onsite -= t;
      }
      return;
    }
    for (int v = -range; v <= range; ++v) {
      x[j] = v;
      rec(j + 1);
    }
    x[j] = 0;
  };
  rec(0);
  terms.push_back({Site{}, onsite});
  return terms;
}

}  // namespace

DispersionRelation DispersionRelation::exponential_decay(int dimension, double amplitude, double rate,
                                                         double tail_tolerance) {
  if (!(rate > 0.0)) throw DomainError("exponential decay rate must be positive");
  if (!(tail_tolerance > 0.0)) throw DomainError("tail tolerance must be positive");
  // Points outside the cube of max-norm R have Euclidean norm > R; shell k of
  // the cube holds (2k+1)^n - (2k-1)^n sites.
  auto tail = [&](int range) {
    double s = 0.0;
    for (int k = range + 1; k < range + 100000; ++k) {
      const double shell = std::pow(2.0 * k + 1, dimension) - std::pow(2.0 * k - 1, dimension);
      const double term = shell * std::abs(amplitude) * std::exp(-rate * k);
      s += term;
      if (term < 1e-18 * s) break;
    }
    return s;
  };
  int range = 1;
  while (tail(range) >= tail_tolerance) {
    ++range;
    if (range > 100000) throw ResourceError("exponential hopping table does not converge");
  }
  auto d = hopping(dimension, generate_table(dimension, range, amplitude, [rate](double r) { return std::exp(-rate * r); }),
                   rate);
  d.decay_ = DecayLaw{DecayLaw::Kind::Exponential, amplitude, rate, range};
  return d;
}

DispersionRelation DispersionRelation::power_decay(int dimension, double amplitude, double exponent, int range) {
  if (!(exponent > 0.0)) throw DomainError("power-law exponent must be positive");
  if (range < 1) throw DomainError("power-law range must be at least 1");
  auto d = hopping(dimension,
                   generate_table(dimension, range, amplitude, [exponent](double r) { return std::pow(r, -exponent); }),
                   0.0);
  d.decay_ = DecayLaw{DecayLaw::Kind::Power, amplitude, exponent, range};
  return d;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string DispersionRelation::name() const {
  switch (form_) {
    case Form::Hopping:
      return "hopping";
    case Form::DiscreteLaplacian:
      return "discrete_laplacian";
    case Form::SemiRelativistic:
      return "semi_relativistic(" + shortest(parameter_) + ")";
    case Form::Constant:
      return "constant(" + shortest(parameter_) + ")";
  }
  return "unknown";
}

cplx DispersionRelation::evaluate(std::span<const cplx> zeta) const {
  if (static_cast<int>(zeta.size()) != dimension_) throw DomainError("quasimomentum has wrong dimension");
  if (form_ != Form::Hopping) {
    for (const cplx& z : zeta) {
      if (!(std::abs(z.imag()) < strip_)) throw DomainError("quasimomentum outside the analyticity strip");
    }
  }
  switch (form_) {
    case Form::Hopping: {
      cplx s{0.0, 0.0};
      for (const auto& t : terms_) {
        cplx phase{0.0, 0.0};
        for (int j = 0; j < dimension_; ++j) phase += zeta[j] * static_cast<double>(t.displacement[j]);
        s += t.amplitude * std::exp(cplx{0.0, 1.0} * phase);
      }
      return s;
    }
    case Form::DiscreteLaplacian: {
      cplx s{0.0, 0.0};
      for (const cplx& z : zeta) s += 2.0 - 2.0 * std::cos(z);
      return s;
    }
    case Form::SemiRelativistic: {
      cplx s{parameter_ * parameter_, 0.0};
      for (const cplx& z : zeta) s += z * z;
      return std::sqrt(s);
    }
    case Form::Constant:
      return {parameter_, 0.0};
  }
  return {};
}

double DispersionRelation::imag_deformed(std::span<const double> xi, std::span<const double> b, double mu) const {
  if (form_ == Form::Hopping) {
    double s = 0.0;
    for (const auto& t : terms_) {
      s += t.amplitude * std::sin(dot(t.displacement, xi.first(dimension_))) *
           std::exp(-mu * dot(t.displacement, b.first(dimension_)));
    }
    return s;
  }
  std::array<cplx, kMaxDim> z{};
  for (int j = 0; j < dimension_; ++j) z[j] = {xi[j], mu * b[j]};
  return evaluate(std::span<const cplx>(z.data(), dimension_)).imag();
}

std::optional<std::vector<HoppingTerm>> DispersionRelation::lattice_terms() const {
  switch (form_) {
    case Form::Hopping:
      return terms_;
    case Form::DiscreteLaplacian: {
      std::vector<HoppingTerm> t;
      t.push_back({Site{}, 2.0 * dimension_});
      for (int j = 0; j < dimension_; ++j) {
        Site e{};
        e[j] = 1;
        t.push_back({e, -1.0});
        t.push_back({negate(e), -1.0});
      }
      std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) { return a.displacement < b.displacement; });
      return t;
    }
    case Form::Constant:
      return std::vector<HoppingTerm>{{Site{}, parameter_}};
    case Form::SemiRelativistic:
      return std::nullopt;
  }
  return std::nullopt;
}

double DispersionRelation::hopping_range() const {
  double r = 0.0;
  for (const auto& t : terms_) r = std::max(r, norm2(t.displacement));
  return r;
}

cplx eval_symbol(const DispersionRelation& disp, std::span<const cplx> zeta) { return disp.evaluate(zeta); }

// ---------------------------------------------------------------------------
// Velocity constants

VelocityConstant velocity_constant(const DispersionRelation& disp, double mu, const OptimizationSettings& opts) {
  if (!(mu > 0.0 && mu < disp.strip())) {
    std::ostringstream os;
    os << "deformation depth mu = " << mu << " outside (0, " << disp.strip() << ")";
    throw DomainError(os.str());
  }
  const int n = disp.dimension();
  auto f = [&](std::span<const double> xi, std::span<const double> b) { return disp.imag_deformed(xi, b, mu) / mu; };
  SupResult s = sup_over_cell_and_directions(f, n, disp.periodic(), opts);
  VelocityConstant v;
  v.mu = mu;
  v.c = s.value;
  v.direction_profile = std::move(s.profile);
  v.converged = s.converged;
  return v;
}

std::vector<double> default_mu_grid(const DispersionRelation& disp, int points) {
  if (!(disp.strip() > 0.0)) throw DomainError("dispersion has no analyticity strip");
  const double hi = std::min(0.95 * disp.strip(), 8.0);
  const double lo = std::min(0.05, hi / 2.0);
  std::vector<double> g;
  if (points <= 1) return {hi};
  for (int i = 0; i < points; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  return g;
}

EnvelopeSolver::EnvelopeSolver(DispersionRelation disp, std::vector<double> mu_grid, EnvelopeOptions opts)
    : disp_(std::move(disp)), mu_grid_(std::move(mu_grid)), opts_(opts) {
  if (mu_grid_.empty()) throw DomainError("mu grid is empty");
  std::sort(mu_grid_.begin(), mu_grid_.end());
  mu_grid_.erase(std::unique(mu_grid_.begin(), mu_grid_.end()), mu_grid_.end());
  c_grid_.reserve(mu_grid_.size());
  for (double mu : mu_grid_) c_grid_.push_back(velocity_constant(disp_, mu, opts_.velocity).c);
}

double EnvelopeSolver::velocity(double mu) const {
  const auto it = std::lower_bound(mu_grid_.begin(), mu_grid_.end(), mu);
  if (it != mu_grid_.end() && *it == mu) return c_grid_[static_cast<std::size_t>(it - mu_grid_.begin())];
  return velocity_constant(disp_, mu, opts_.velocity).c;
}

EnvelopeExponent EnvelopeSolver::exponent(double d, double t) const {
  const double at = std::abs(t);
  EnvelopeExponent best;
  best.exponent = kInf;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < mu_grid_.size(); ++i) {
    const double e = mu_grid_[i] * (c_grid_[i] * at - d);
    if (e < best.exponent) {
      best = {e, mu_grid_[i], c_grid_[i]};
      best_i = i;
    }
  }
  if (opts_.refine && mu_grid_.size() >= 2) {
    const std::size_t lo = best_i == 0 ? 0 : best_i - 1;
    const std::size_t hi = std::min(best_i + 1, mu_grid_.size() - 1);
    auto g = [&](double mu) { return -(mu * (velocity(mu) * at - d)); };
    const auto [mx, mv] = golden_max(g, mu_grid_[lo], mu_grid_[hi], opts_.mu_tolerance, best.mu_star, -best.exponent);
    if (-mv < best.exponent) best = {-mv, mx, velocity(mx)};
  }
  return best;
}

EnvelopeExponent envelope_exponent(const DispersionRelation& disp, double d, double t,
                                   std::span<const double> mu_grid, const EnvelopeOptions& opts) {
  if (!(d >= 0.0)) throw DomainError("distance must be non-negative");
  EnvelopeSolver solver(disp, std::vector<double>(mu_grid.begin(), mu_grid.end()), opts);
  return solver.exponent(d, t);
}

SmoothVelocityData smooth_velocity_constant(const DispersionRelation& disp, int m, double mu,
                                            const OptimizationSettings& opts) {
  if (m < 1) throw DomainError("differentiability order m must be >= 1");
  if (!(mu > 0.0 && mu < 1.0)) throw DomainError("mu must lie in (0, 1)");
  require_lattice(disp, "smooth_velocity_constant");
  require_moment(disp, m + 1);
  const auto terms = *disp.lattice_terms();
  const int n = disp.dimension();

  SmoothVelocityData out;
  out.m = m;
  out.mu = mu;
  cplx weight{1.0, 0.0};  // (i mu)^{k-1}
  double factorial = 1.0;
  for (int k = 1; k <= m; ++k) {
    factorial *= k;
    auto f = [&](std::span<const double> xi, std::span<const double> b) {
      return derivative_symbol(terms, n, k, xi, b).real();
    };
    const double sup = sup_over_cell_and_directions(f, n, true, opts).value;
    out.derivative_sups.push_back(sup);
    out.c_tilde += weight.real() / factorial * sup;
    weight *= cplx{0.0, mu};
  }
  out.M = derivative_bound_M(disp, m, opts);
  return out;
}

double derivative_bound_M(const DispersionRelation& disp, int m, const OptimizationSettings& opts) {
  if (m < 1) throw DomainError("differentiability order m must be >= 1");
  require_lattice(disp, "derivative_bound_M");
  require_moment(disp, m + 1);
  const auto terms = *disp.lattice_terms();
  const int n = disp.dimension();
  auto f = [&](std::span<const double> xi, std::span<const double> b) {
    return std::abs(derivative_symbol(terms, n, m + 1, xi, b));
  };
  return 1.0 + sup_over_cell_and_directions(f, n, true, opts).value;
}

double max_group_speed(const DispersionRelation& disp, const OptimizationSettings& opts) {
  require_lattice(disp, "max_group_speed");
  require_moment(disp, 1);
  const auto terms = *disp.lattice_terms();
  const int n = disp.dimension();
  auto f = [&](std::span<const double> xi, std::span<const double> b) {
    return derivative_symbol(terms, n, 1, xi, b).real();
  };
  return std::max(0.0, sup_over_cell_and_directions(f, n, true, opts).value);
}

}  // namespace lightcone
