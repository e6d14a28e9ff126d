#include "lightcone/certify.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "lightcone/parallel.hpp"

namespace lightcone {

std::string to_string(RowStatus s) {
  switch (s) {
    case RowStatus::Pass:
      return "pass";
    case RowStatus::VacuousBelowFloor:
      return "vacuous-below-floor";
    case RowStatus::Fail:
      return "fail";
  }
  return "fail";
}

void CertificationConfig::validate() const {
  if (times.empty()) throw DomainError("time grid is empty");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0) throw DomainError("times must be finite and non-negative");
    if (i > 0 && !(times[i] > times[i - 1])) throw DomainError("time grid must be strictly increasing");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  if (!(floor >= 0.0)) throw DomainError("numerical floor must be non-negative");
  if (!(window_margin >= 0.0)) throw DomainError("boundary window margin must be non-negative");
}

RowStatus classify(double measured, double envelope, double floor) {
  if (measured <= envelope) return RowStatus::Pass;
  if (measured < floor && envelope < floor) return RowStatus::VacuousBelowFloor;
  return RowStatus::Fail;
}

bool CertificationReport::verdict() const {
  const bool rows_ok = std::none_of(rows.begin(), rows.end(), [](const ReportRow& r) { return r.status == RowStatus::Fail; });
  const bool checks_ok = std::all_of(checks.begin(), checks.end(), [](const ReportCheck& c) { return c.passed; });
  return rows_ok && checks_ok;
}

std::size_t CertificationReport::count(RowStatus s) const {
  return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [s](const ReportRow& r) { return r.status == s; }));
}

namespace {

using nlohmann::json;

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

}  // namespace

json CertificationReport::to_json() const {
  json j;
  j["schema_version"] = 1;
  j["theorem"] = theorem;
  j["instance"] = instance;
  j["verdict"] = verdict() ? "pass" : "fail";
  json rs = json::array();
  for (const auto& r : rows) {
    json row;
    row["t"] = num(r.t);
    row["d"] = num(r.d);
    row["measured"] = num(r.measured);
    row["envelope"] = num(r.envelope);
    row["exponent"] = num(r.exponent);
    row["mu_star"] = num(r.mu_star);
    row["log_margin"] = num(r.log_margin);
    row["status"] = to_string(r.status);
    row["inside_cone"] = r.inside_cone;
    json aux = json::object();
    for (const auto& [k, v] : r.aux) aux[k] = num(v);
    row["aux"] = aux;
    rs.push_back(row);
  }
  j["rows"] = rs;
  json cs = json::array();
  for (const auto& c : checks) {
    cs.push_back({{"name", c.name},
                  {"value", num(c.value)},
                  {"lower", num(c.lower)},
                  {"upper", num(c.upper)},
                  {"passed", c.passed},
                  {"detail", c.detail}});
  }
  j["checks"] = cs;
  json env = json::object();
  for (const auto& [k, v] : environment) env[k] = v;
  for (const auto& [k, v] : grids) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    env[k] = a;
  }
  j["environment"] = env;
  j["summary"] = {{"rows", rows.size()},
                  {"pass", count(RowStatus::Pass)},
                  {"vacuous_below_floor", count(RowStatus::VacuousBelowFloor)},
                  {"fail", count(RowStatus::Fail)},
                  {"inside_cone", std::count_if(rows.begin(), rows.end(), [](const ReportRow& r) { return r.inside_cone; })}};
  return j;
}

std::string CertificationReport::csv_header() {
  return "theorem,instance,t,d,measured,envelope,exponent,mu_star,log_margin,status,inside_cone\n";
}

std::string CertificationReport::to_csv() const {
  std::string out = csv_header();
  for (const auto& r : rows) {
    out += theorem + "," + instance + "," + fmt(r.t) + "," + fmt(r.d) + "," + fmt(r.measured) + "," +
           fmt(r.envelope) + "," + fmt(r.exponent) + "," + fmt(r.mu_star) + "," + fmt(r.log_margin) + "," +
           to_string(r.status) + "," + (r.inside_cone ? "1" : "0") + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

void check_boundary_window(const Box& box, const Region& x, const Region& y, double vmax, double t_max,
                           double margin) {
  if (x.empty() || y.empty()) return;
  double best = kInf;
  Site p{};
  Site q{};
  for (const auto& a : x.sites()) {
    for (const auto& b : y.sites()) {
      double s = 0.0;
      for (int j = 0; j < kMaxDim; ++j) s += static_cast<double>(a[j] - b[j]) * (a[j] - b[j]);
      if (s < best) {
        best = s;
        p = a;
        q = b;
      }
    }
  }
  const double reach = vmax * t_max + margin;
  for (int j = 0; j < box.dimension(); ++j) {
    const double lo = std::min(p[j], q[j]) - reach;
    const double hi = std::max(p[j], q[j]) + reach;
    if (lo < box.lower()[j] - 1e-9 || hi > box.upper()[j] + 1e-9) {
      throw DomainError("boundary window violated: the ballistic front (speed " + fmt(vmax) + ", t_max " + fmt(t_max) +
                        ") comes within " + fmt(margin) + " sites of the box edge on axis " + std::to_string(j));
    }
  }
}

PieceEnvelope piecewise_envelope(const EnvelopeSolver& solver, const std::vector<SeparatedPair>& pieces, double t,
                                 double copies) {
  PieceEnvelope out;
  out.pieces = pieces.size();
  if (pieces.empty()) return out;
  std::vector<EnvelopeExponent> e;
  e.reserve(pieces.size());
  double top = -kInf;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    e.push_back(solver.exponent(pieces[i].gap, t));
    if (copies * e.back().exponent > top) {
      top = copies * e.back().exponent;
      arg = i;
    }
  }
  double s = 0.0;
  for (const auto& x : e) s += std::exp(copies * x.exponent - top);
  out.log_envelope = top + std::log(s);
  out.mu_star = e[arg].mu_star;
  out.c_at_mu_star = e[arg].c_at_mu_star;
  return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mx = std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / sxx;
}

namespace {

std::vector<double> resolve_mu_grid(const DispersionRelation& disp, const CertificationConfig& config) {
  return config.mu_grid.empty() ? default_mu_grid(disp) : config.mu_grid;
}

CertificationReport start_report(std::string theorem, const CsrMatrix& m, const DispersionRelation& disp,
                                 const CertificationConfig& config, const std::vector<double>& mu_grid) {
  CertificationReport r;
  r.theorem = std::move(theorem);
  r.instance = r.theorem;
  r.environment["hamiltonian_digest"] = hex64(m.digest());
  r.environment["dimension"] = std::to_string(m.rows());
  r.environment["dispersion"] = disp.name();
  r.environment["seed"] = std::to_string(config.seed);
  r.environment["epsilon"] = fmt(config.epsilon);
  r.environment["floor"] = fmt(config.floor);
  r.environment["propagator"] = "chebyshev";
  r.grids["times"] = config.times;
  r.grids["mu_grid"] = mu_grid;
  return r;
}

void finish_row(ReportRow& row, double measured, double log_env, double mu_star, double c_star,
                const CertificationConfig& config) {
  row.measured = measured;
  row.exponent = log_env;
  row.envelope = std::exp(log_env);
  row.mu_star = mu_star;
  row.log_margin = measured > 0.0 ? log_env - std::log(measured) : kInf;
  row.status = classify(measured, row.envelope, config.floor);
  row.inside_cone = log_env >= 0.0;
  const double mu_prime = (1.0 - config.epsilon) * mu_star;
  row.aux["mu_prime"] = mu_prime;
  row.aux["c_at_mu_star"] = c_star;
  row.aux["c_prime"] = mu_prime > 0.0 ? c_star * mu_star / mu_prime : 0.0;
}

double t_max(const CertificationConfig& c) { return c.times.back(); }

void require_disjoint(const Region& x, const Region& y) {
  if (x.empty() || y.empty()) throw DomainError("regions must be non-empty");
  if (intersects(x, y)) throw DomainError("regions intersect");
}

void require_within(const Region& x, const Box& box) {
  if (!x.within(box)) throw DomainError("region lies outside the box");
}

Matrix sub_block(const Matrix& a, const std::vector<std::size_t>& r, const std::vector<std::size_t>& c) {
  Matrix out(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(c.size()));
  for (std::size_t j = 0; j < c.size(); ++j) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          a(static_cast<Eigen::Index>(r[i]), static_cast<Eigen::Index>(c[j]));
    }
  }
  return out;
}

// alpha_t(A~) = W^H A~_XX W with W = U_t[X, :].
Matrix evolved_localized(const Propagator& p, const std::vector<std::size_t>& xi, const Matrix& a_xx, double t) {
  const Matrix w = p.rows(xi, t);
  return w.adjoint() * (a_xx * w);
}

}  // namespace

CertificationReport certify_mvb(const LatticeHamiltonian& h, const Region& x, const Region& y,
                                const CertificationConfig& config) {
  config.validate();
  require_disjoint(x, y);
  require_within(x, h.box());
  require_within(y, h.box());
  const auto& disp = h.dispersion();
  if (config.enforce_boundary_window) {
    check_boundary_window(h.box(), x, y, max_group_speed(disp), t_max(config), config.window_margin);
  }
  const auto grid = resolve_mu_grid(disp, config);
  const EnvelopeSolver solver(disp, grid, config.envelope);
  const auto pieces = half_space_decomposition(x, y);
  const Propagator prop(h.matrix(), PropagationMethod::Chebyshev);
  const double d = region_distance(x, y);

  CertificationReport rep = start_report("mvb", h.matrix(), disp, config, solver.mu_grid());
  rep.environment["geometry"] = pieces.size() == 1 ? "half-space" : "piecewise-half-space";
  rep.rows.resize(config.times.size());
  parallel_for(config.times.size(), [&](std::size_t i) {
    const double t = config.times[i];
    ReportRow& row = rep.rows[i];
    row.t = t;
    row.d = d;
    const double measured = leakage_norm(prop, h.box(), x, y, t);
    const auto env = piecewise_envelope(solver, pieces, t);
    finish_row(row, measured, env.log_envelope, env.mu_star, env.c_at_mu_star, config);
    row.aux["pieces"] = static_cast<double>(env.pieces);
  });
  return rep;
}

CertificationReport certify_state_lightcone(const LatticeHamiltonian& h, const DensityOperator& rho0, const Region& y,
                                            const CertificationConfig& config) {
  config.validate();
  if (!rho0.support()) throw DomainError("initial state must declare its support region X");
  const Region& x = *rho0.support();
  require_disjoint(x, y);
  require_within(y, h.box());
  if (static_cast<std::size_t>(rho0.matrix().rows()) != h.dimension()) throw DomainError("state dimension mismatch");
  const auto& disp = h.dispersion();
  if (config.enforce_boundary_window) {
    check_boundary_window(h.box(), x, y, max_group_speed(disp), t_max(config), config.window_margin);
  }
  const auto grid = resolve_mu_grid(disp, config);
  const EnvelopeSolver solver(disp, grid, config.envelope);
  const auto pieces = half_space_decomposition(y, x);
  const Propagator prop(h.matrix(), PropagationMethod::Chebyshev);
  const auto xi = site_indices(h.box(), x);
  const auto yi = site_indices(h.box(), y);
  const Matrix rho_xx = sub_block(rho0.matrix(), xi, xi);
  const double d = region_distance(x, y);

  CertificationReport rep = start_report("state", h.matrix(), disp, config, solver.mu_grid());
  rep.rows.resize(config.times.size());
  parallel_for(config.times.size(), [&](std::size_t i) {
    const double t = config.times[i];
    ReportRow& row = rep.rows[i];
    row.t = t;
    row.d = d;
    const Matrix g = prop.block(yi, xi, t);
    const double measured = std::max(0.0, (g * rho_xx * g.adjoint()).trace().real());
    const double leak = operator_norm(g).value;
    const auto env = piecewise_envelope(solver, pieces, t);
    const double log_env = std::min(env.log_envelope, 2.0 * env.log_envelope);
    finish_row(row, measured, log_env, env.mu_star, env.c_at_mu_star, config);
    row.aux["leakage"] = leak;
    row.aux["leakage_squared"] = leak * leak;
    row.aux["first_power_exponent"] = env.log_envelope;
  });
  ReportCheck cyc{"cyclicity", 0.0, -kInf, 0.0, true, "max over t of Tr(chi_Y rho_t) - ||chi_Y U_t chi_X||^2 (1 + 1e-9)"};
  double worst = -kInf;
  for (const auto& r : rep.rows) worst = std::max(worst, r.measured - r.aux.at("leakage_squared") * (1.0 + 1e-9));
  cyc.value = worst;
  cyc.passed = worst <= 0.0;
  rep.checks.push_back(cyc);
  return rep;
}

CertificationReport certify_lca(const LatticeHamiltonian& h, const Observable& a, double eta,
                                const CertificationConfig& config) {
  config.validate();
  if (!(eta >= 1.0)) throw DomainError("eta must be at least 1");
  if (!a.domain()) throw DomainError("observable must declare its action domain X");
  if (a.dimension() != h.dimension()) throw DomainError("observable dimension mismatch");
  const Box& box = h.box();
  const Region& x = *a.domain();
  const Region u = neighborhood(x, eta, box);
  const Region uc = u.complement(box);
  const auto& disp = h.dispersion();
  if (config.enforce_boundary_window && !uc.empty()) {
    check_boundary_window(box, x, uc, max_group_speed(disp), t_max(config), config.window_margin);
  }
  const auto grid = resolve_mu_grid(disp, config);
  const EnvelopeSolver solver(disp, grid, config.envelope);
  const auto pieces = uc.empty() ? std::vector<SeparatedPair>{} : half_space_decomposition(x, uc);
  const Propagator prop(h.matrix(), PropagationMethod::Chebyshev);
  const auto xi = site_indices(box, x);
  const Matrix a_tilde = sub_block(localize_observable(a, box).matrix(), xi, xi);
  const double a_norm = operator_norm(a_tilde).value;
  const auto chi_u = indicator(box, u);

  CertificationReport rep = start_report("lca", h.matrix(), disp, config, solver.mu_grid());
  rep.environment["eta"] = fmt(eta);
  rep.rows.resize(config.times.size());
  parallel_for(config.times.size(), [&](std::size_t i) {
    const double t = config.times[i];
    ReportRow& row = rep.rows[i];
    row.t = t;
    row.d = eta;
    // A_t - A_{t,U} = alpha_t(A~) - chi_U alpha_t(A~) chi_U
    Matrix diff = evolved_localized(prop, xi, a_tilde, t);
    for (Eigen::Index c = 0; c < diff.cols(); ++c) {
      if (chi_u[static_cast<std::size_t>(c)] == 0.0) continue;
      for (Eigen::Index r = 0; r < diff.rows(); ++r) {
        if (chi_u[static_cast<std::size_t>(r)] != 0.0) diff(r, c) = 0.0;
      }
    }
    const double measured = operator_norm(diff).value;
    const auto env = piecewise_envelope(solver, pieces, t);
    const double log_env = std::log(2.0 * a_norm) + env.log_envelope;
    finish_row(row, measured, log_env, env.mu_star, env.c_at_mu_star, config);
    row.aux["norm_a_tilde"] = a_norm;
    row.aux["pieces"] = static_cast<double>(env.pieces);
  });
  return rep;
}

namespace {

struct CommutatorData {
  Matrix k;
  double leak_xy = 0.0;  // ||chi_X U_t chi_Y||
  double leak_yx = 0.0;  // ||chi_Y U_t chi_X||
};

CommutatorData commutator(const Propagator& p, const std::vector<std::size_t>& xi, const Matrix& a_xx,
                          const std::vector<std::size_t>& yi, const Matrix& b_yy, double t) {
  const Matrix w = p.rows(xi, t);
  const Matrix alpha = w.adjoint() * (a_xx * w);
  const auto n = alpha.rows();
  Matrix k = Matrix::Zero(n, n);
  // alpha B~ lives in the Y columns, B~ alpha in the Y rows.
  Matrix alpha_y(n, static_cast<Eigen::Index>(yi.size()));
  Matrix y_alpha(static_cast<Eigen::Index>(yi.size()), n);
  for (std::size_t j = 0; j < yi.size(); ++j) {
    alpha_y.col(static_cast<Eigen::Index>(j)) = alpha.col(static_cast<Eigen::Index>(yi[j]));
    y_alpha.row(static_cast<Eigen::Index>(j)) = alpha.row(static_cast<Eigen::Index>(yi[j]));
  }
  const Matrix left = alpha_y * b_yy;
  const Matrix right = b_yy * y_alpha;
  for (std::size_t j = 0; j < yi.size(); ++j) k.col(static_cast<Eigen::Index>(yi[j])) += left.col(static_cast<Eigen::Index>(j));
  for (std::size_t j = 0; j < yi.size(); ++j) k.row(static_cast<Eigen::Index>(yi[j])) -= right.row(static_cast<Eigen::Index>(j));
  CommutatorData out;
  out.k = std::move(k);
  Matrix wxy(static_cast<Eigen::Index>(xi.size()), static_cast<Eigen::Index>(yi.size()));
  for (std::size_t j = 0; j < yi.size(); ++j) wxy.col(static_cast<Eigen::Index>(j)) = w.col(static_cast<Eigen::Index>(yi[j]));
  out.leak_xy = operator_norm(wxy).value;
  out.leak_yx = operator_norm(p.block(yi, xi, t)).value;
  return out;
}

struct PairSetup {
  Region x;
  Region y;
  std::vector<std::size_t> xi;
  std::vector<std::size_t> yi;
  Matrix a_tilde;
  Matrix b_tilde;
  double a_tilde_norm = 0.0;
  double b_tilde_norm = 0.0;
  double a_norm = 0.0;
  double b_norm = 0.0;
  std::vector<SeparatedPair> pieces;
};

PairSetup pair_setup(const LatticeHamiltonian& h, const Observable& a, const Observable& b,
                     const CertificationConfig& config) {
  config.validate();
  if (!a.domain() || !b.domain()) throw DomainError("observables must declare their action domains");
  if (a.dimension() != h.dimension() || b.dimension() != h.dimension()) throw DomainError("observable dimension mismatch");
  PairSetup s;
  s.x = *a.domain();
  s.y = *b.domain();
  require_disjoint(s.x, s.y);
  const Box& box = h.box();
  if (config.enforce_boundary_window) {
    check_boundary_window(box, s.x, s.y, max_group_speed(h.dispersion()), t_max(config), config.window_margin);
  }
  s.xi = site_indices(box, s.x);
  s.yi = site_indices(box, s.y);
  s.a_tilde = sub_block(localize_observable(a, box).matrix(), s.xi, s.xi);
  s.b_tilde = sub_block(localize_observable(b, box).matrix(), s.yi, s.yi);
  s.a_tilde_norm = operator_norm(s.a_tilde).value;
  s.b_tilde_norm = operator_norm(s.b_tilde).value;
  s.a_norm = a.norm();
  s.b_norm = b.norm();
  s.pieces = half_space_decomposition(s.x, s.y);
  return s;
}

// log of ||A~|| ||B~|| (e^{E(d,t)} + e^{E(d,-t)})
double lrb_log_envelope(const PairSetup& s, const EnvelopeSolver& solver, double t, PieceEnvelope& env) {
  env = piecewise_envelope(solver, s.pieces, t);
  const PieceEnvelope back = piecewise_envelope(solver, s.pieces, -t);
  const double top = std::max(env.log_envelope, back.log_envelope);
  const double both = top + std::log(std::exp(env.log_envelope - top) + std::exp(back.log_envelope - top));
  return std::log(s.a_tilde_norm * s.b_tilde_norm) + both;
}

}  // namespace

CertificationReport certify_lrb(const LatticeHamiltonian& h, const Observable& a, const Observable& b,
                                const CertificationConfig& config) {
  const PairSetup s = pair_setup(h, a, b, config);
  const auto grid = resolve_mu_grid(h.dispersion(), config);
  const EnvelopeSolver solver(h.dispersion(), grid, config.envelope);
  const Propagator prop(h.matrix(), PropagationMethod::Chebyshev);
  const double d = region_distance(s.x, s.y);

  CertificationReport rep = start_report("lrb", h.matrix(), h.dispersion(), config, solver.mu_grid());
  rep.rows.resize(config.times.size());
  parallel_for(config.times.size(), [&](std::size_t i) {
    const double t = config.times[i];
    ReportRow& row = rep.rows[i];
    row.t = t;
    row.d = d;
    const CommutatorData cd = commutator(prop, s.xi, s.a_tilde, s.yi, s.b_tilde, t);
    const double measured = operator_norm(cd.k).value;
    PieceEnvelope env;
    const double log_env = lrb_log_envelope(s, solver, t, env);
    finish_row(row, measured, log_env, env.mu_star, env.c_at_mu_star, config);
    row.aux["proof_chain"] = s.a_tilde_norm * s.b_tilde_norm * (cd.leak_xy + cd.leak_yx);
    row.aux["theorem_envelope"] = 4.0 * s.a_norm * s.b_norm * std::exp(env.log_envelope);
    row.aux["norm_a_tilde"] = s.a_tilde_norm;
    row.aux["norm_b_tilde"] = s.b_tilde_norm;
  });
  ReportCheck chain{"proof_chain", 0.0, -kInf, 0.0, true,
                    "max over t of ||[A_t,B]|| - ||A~|| ||B~|| (||chi_X U_-t chi_Y|| + ||chi_Y U_t chi_X||) (1 + 1e-9)"};
  double worst = -kInf;
  for (const auto& r : rep.rows) worst = std::max(worst, r.measured - r.aux.at("proof_chain") * (1.0 + 1e-9));
  chain.value = worst;
  chain.passed = worst <= 0.0;
  rep.checks.push_back(chain);
  return rep;
}

CertificationReport certify_otoc(const LatticeHamiltonian& h, const DensityOperator& rho, const Observable& a,
                                 const Observable& b, const CertificationConfig& config) {
  const PairSetup s = pair_setup(h, a, b, config);
  if (static_cast<std::size_t>(rho.matrix().rows()) != h.dimension()) throw DomainError("state dimension mismatch");
  const auto grid = resolve_mu_grid(h.dispersion(), config);
  const EnvelopeSolver solver(h.dispersion(), grid, config.envelope);
  const Propagator prop(h.matrix(), PropagationMethod::Chebyshev);
  const double d = region_distance(s.x, s.y);

  CertificationReport rep = start_report("otoc", h.matrix(), h.dispersion(), config, solver.mu_grid());
  rep.rows.resize(config.times.size());
  parallel_for(config.times.size(), [&](std::size_t i) {
    const double t = config.times[i];
    ReportRow& row = rep.rows[i];
    row.t = t;
    row.d = d;
    const CommutatorData cd = commutator(prop, s.xi, s.a_tilde, s.yi, s.b_tilde, t);
    const double measured = -(cd.k * (cd.k * rho.matrix())).trace().real();
    const double comm = operator_norm(cd.k).value;
    PieceEnvelope env;
    const double log_lrb = lrb_log_envelope(s, solver, t, env);
    finish_row(row, measured, 2.0 * log_lrb, env.mu_star, env.c_at_mu_star, config);
    row.aux["commutator_norm"] = comm;
    row.aux["commutator_squared"] = comm * comm;
    row.aux["lrb_envelope"] = std::exp(log_lrb);
  });
  ReportCheck sq{"otoc_below_commutator_squared", 0.0, -kInf, 0.0, true,
                 "max over t of OTOC - ||[A_t,B]||^2 (1 + 1e-9)"};
  double worst = -kInf;
  for (const auto& r : rep.rows) worst = std::max(worst, r.measured - r.aux.at("commutator_squared") * (1.0 + 1e-9));
  sq.value = worst;
  sq.passed = worst <= 0.0;
  rep.checks.push_back(sq);
  return rep;
}

CertificationReport certify_power_mvb(const LatticeHamiltonian& h, const std::vector<std::pair<Region, Region>>& sweep,
                                      const PowerConfig& power, const CertificationConfig& config) {
  config.validate();
  if (sweep.empty()) throw DomainError("power certificate needs at least one region pair");
  if (power.m < 1) throw DomainError("differentiability order m must be >= 1");
  if (!(power.slack >= 0.0)) throw DomainError("velocity slack must be non-negative");
  const auto& disp = h.dispersion();
  const int n = disp.dimension();
  const SmoothVelocityData sv = smooth_velocity_constant(disp, power.m, power.smooth_mu);
  const double ct = sv.c_tilde * (1.0 + power.slack);
  const double big_m = derivative_bound_M(disp, power.m);
  const double vmax = max_group_speed(disp);

  std::vector<double> dist;
  for (const auto& [x, y] : sweep) {
    require_disjoint(x, y);
    require_within(x, h.box());
    require_within(y, h.box());
    const double d = region_distance(x, y);
    for (double t : config.times) {
      if (t < 1.0 || t > d / ct) {
        throw DomainError("t = " + fmt(t) + " outside [1, d / c~'] = [1, " + fmt(d / ct) + "] for d = " + fmt(d));
      }
    }
    if (config.enforce_boundary_window) check_boundary_window(h.box(), x, y, vmax, t_max(config), config.window_margin);
    dist.push_back(d);
  }
  // Rows ordered by t, then by distance.
  std::vector<std::size_t> order(sweep.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

  const Propagator prop(h.matrix(), PropagationMethod::Chebyshev);
  CertificationReport rep = start_report("power", h.matrix(), disp, config, {});
  rep.grids.erase("mu_grid");
  rep.environment["m"] = std::to_string(power.m);
  rep.environment["c_tilde"] = fmt(sv.c_tilde);
  rep.environment["c_tilde_prime"] = fmt(ct);
  rep.environment["M"] = fmt(big_m);
  rep.environment["smooth_mu"] = fmt(power.smooth_mu);
  const std::size_t per_t = sweep.size();
  rep.rows.resize(config.times.size() * per_t);
  parallel_for(rep.rows.size(), [&](std::size_t k) {
    const double t = config.times[k / per_t];
    const std::size_t p = order[k % per_t];
    ReportRow& row = rep.rows[k];
    row.t = t;
    row.d = dist[p];
    row.measured = leakage_norm(prop, h.box(), sweep[p].first, sweep[p].second, t);
    const double gap = dist[p] - ct * t;
    const double reference = gap > 0.0 ? t * big_m * std::pow(gap, -(power.m + 1 - n)) : kInf;
    row.envelope = reference;
    row.exponent = std::log(reference);
    row.log_margin = row.measured > 0.0 ? row.exponent - std::log(row.measured) : kInf;
    // The constant C is not asserted, so rows never fail on their own.
    row.status = RowStatus::Pass;
    row.inside_cone = !(gap > 0.0);
    row.aux["gap"] = gap;
    row.aux["implied_C"] = std::isfinite(reference) ? row.measured / reference : 0.0;
  });
  const double limit = power.max_fitted_power.value_or(-(power.m + 1 - n) + 0.5);
  for (std::size_t ti = 0; ti < config.times.size(); ++ti) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t k = ti * per_t; k < (ti + 1) * per_t; ++k) {
      const auto& r = rep.rows[k];
      if (r.measured > 0.0 && r.aux.at("gap") > 0.0) {
        lx.push_back(std::log(r.aux.at("gap")));
        ly.push_back(std::log(r.measured));
      }
    }
    std::set<double> distinct(lx.begin(), lx.end());
    if (distinct.size() < 2) continue;
    ReportCheck c;
    c.name = "fitted_power@t=" + fmt(config.times[ti]);
    c.value = fit_slope(lx, ly);
    c.upper = limit;
    c.passed = c.value <= limit;
    c.detail = "least-squares slope of log leakage against log(d - c~' t)";
    rep.checks.push_back(c);
  }
  return rep;
}

CertificationReport certify_nbody(const ManyBodyHamiltonian& hn, const LatticeHamiltonian& h1,
                                  const std::vector<std::pair<Region, Region>>& sweep,
                                  const CertificationConfig& config) {
  config.validate();
  if (sweep.empty()) throw DomainError("N-body certificate needs at least one region pair");
  if (!(hn.box == h1.box())) throw DomainError("N-body and one-body boxes differ");
  const Box& box = h1.box();
  const int np = hn.basis.particles();
  const auto& disp = h1.dispersion();
  const double vmax = max_group_speed(disp);
  std::vector<double> gaps;
  std::vector<std::vector<SeparatedPair>> pieces;
  for (const auto& [x, y] : sweep) {
    require_disjoint(x, y);
    require_within(x, box);
    require_within(y, box);
    const SeparatedPair sp = half_space_separation(x, y);
    if (!(sp.gap > 0.0)) throw DomainError("N-body certificate requires half-space separated regions");
    if (config.enforce_boundary_window) check_boundary_window(box, x, y, vmax, t_max(config), config.window_margin);
    gaps.push_back(sp.gap);
    pieces.push_back({sp});
  }
  std::vector<std::size_t> order(sweep.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gaps[a] < gaps[b]; });

  const auto grid = resolve_mu_grid(disp, config);
  const EnvelopeSolver solver(disp, grid, config.envelope);
  const Propagator prop_n(hn.matrix, PropagationMethod::Chebyshev);
  const Propagator prop_1(h1.matrix(), PropagationMethod::Chebyshev);
  auto cut_indices = [&](const Region& r) {
    const auto chi = product_cutoff(hn.basis, box, r);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < chi.size(); ++i) {
      if (chi[i] != 0.0) idx.push_back(i);
    }
    return idx;
  };

  CertificationReport rep = start_report("nbody", hn.matrix, disp, config, solver.mu_grid());
  rep.environment["particles"] = std::to_string(np);
  rep.environment["sector"] = hn.basis.sector() == Sector::Bosonic ? "bosonic" : "distinguishable";
  const std::size_t per_t = sweep.size();
  rep.rows.resize(config.times.size() * per_t);
  parallel_for(rep.rows.size(), [&](std::size_t k) {
    const double t = config.times[k / per_t];
    const std::size_t p = order[k % per_t];
    const auto& [x, y] = sweep[p];
    ReportRow& row = rep.rows[k];
    row.t = t;
    row.d = gaps[p];
    const double measured = operator_norm(prop_n.block(cut_indices(x), cut_indices(y), t)).value;
    const double one = leakage_norm(prop_1, box, x, y, t);
    const auto env = piecewise_envelope(solver, pieces[p], t, static_cast<double>(np));
    finish_row(row, measured, env.log_envelope, env.mu_star, env.c_at_mu_star, config);
    row.aux["one_body"] = one;
    row.aux["one_body_power_n"] = std::pow(one, np);
  });
  for (std::size_t ti = 0; ti < config.times.size(); ++ti) {
    std::vector<double> dn;
    std::vector<double> ln;
    std::vector<double> d1;
    std::vector<double> l1;
    for (std::size_t k = ti * per_t; k < (ti + 1) * per_t; ++k) {
      const auto& r = rep.rows[k];
      if (r.measured > 0.0) {
        dn.push_back(r.d);
        ln.push_back(std::log(r.measured));
      }
      if (r.aux.at("one_body") > 0.0) {
        d1.push_back(r.d);
        l1.push_back(std::log(r.aux.at("one_body")));
      }
    }
    if (std::set<double>(dn.begin(), dn.end()).size() < 2 || std::set<double>(d1.begin(), d1.end()).size() < 2) continue;
    ReportCheck c;
    c.name = "rate_ratio@t=" + fmt(config.times[ti]);
    c.value = fit_slope(dn, ln) / fit_slope(d1, l1);
    c.lower = 0.9 * np;
    c.upper = 1.1 * np;
    c.passed = c.value >= c.lower && c.value <= c.upper;
    c.detail = "fitted decay rate in d of the N-body leakage over that of the one-body leakage";
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace lightcone
