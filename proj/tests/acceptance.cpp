// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "lightcone/experiment.hpp"

using namespace lightcone;
namespace fs = std::filesystem;

namespace {

const std::string kSource = LIGHTCONE_SOURCE_DIR;

struct Outcome {
  bool ok = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;  // 0: no runtime limit
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

void require(Outcome& o, bool cond, const std::string& what) {
  if (!cond && o.ok) {
    o.ok = false;
    o.detail = what;
  }
}

ExperimentSpec spec(const std::string& name) { return load_experiment(kSource + "/specs/" + name); }

std::size_t theorem_index(const ExperimentSpec& s, const std::string& kind) {
  for (std::size_t i = 0; i < s.theorems.size(); ++i)
    if (s.theorems[i].kind == kind) return i;
  throw std::runtime_error("spec has no " + kind + " theorem");
}

std::vector<double> range_times(int lo, int hi) {
  std::vector<double> t;
  for (int i = lo; i <= hi; ++i) t.push_back(i);
  return t;
}

bool no_failed_rows(const CertificationReport& r) { return r.count(RowStatus::Fail) == 0; }

const ReportCheck* find_check(const CertificationReport& r, const std::string& prefix) {
  for (const auto& c : r.checks)
    if (c.name.rfind(prefix, 0) == 0) return &c;
  return nullptr;
}

// Golden-section minimum of f on [a, b].
template <class F>
double golden_min(F f, double a, double b) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  for (int i = 0; i < 300 && b - a > 1e-15; ++i) {
    if (f(c) < f(d)) b = d;
    else a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return f(0.5 * (a + b));
}

// --- 1 ----------------------------------------------------------------------
Outcome velocity_chain() {
  Outcome o;
  const auto d = DispersionRelation::discrete_laplacian(1);
  double worst = 0.0;
  for (double mu : {0.25, 0.5, 1.0, 2.0}) {
    const double exact = 2.0 * std::sinh(mu) / mu;
    worst = std::max(worst, std::abs(velocity_constant(d, mu).c - exact) / exact);
  }
  require(o, worst < 1e-6, "relative error " + fmt("%.3g", worst));
  o.detail = o.ok ? "max relative error " + fmt("%.3g", worst) : o.detail;
  return o;
}

// --- 2 ----------------------------------------------------------------------
Outcome velocity_semi_relativistic() {
  Outcome o;
  const auto d = DispersionRelation::semi_relativistic(1, 1.0, 1.0);
  double worst = 0.0;
  for (double mu : {0.25, 0.5, 0.9}) worst = std::max(worst, std::abs(velocity_constant(d, mu).c - 1.0));
  require(o, worst < 1e-3, "|c - 1| = " + fmt("%.3g", worst));
  if (o.ok) o.detail = "max |c - 1| " + fmt("%.3g", worst);
  return o;
}

// --- 3 ----------------------------------------------------------------------
Outcome conjugation_identity() {
  Outcome o;
  const Box box = Box::interval(-50, 50);
  const auto h = build_hamiltonian(DispersionRelation::discrete_laplacian(1), delta_potential({0, 0, 0}, 0.4), box);
  double worst = 0.0;
  for (double t : {1.0, 3.0, 5.0}) {
    const Matrix u = dense_exponential(h.matrix(), cplx{0.0, -t});
    for (double mu : {0.25, 0.5, 1.0}) {
      for (double b : {-1.0, 1.0}) {
        const Quasimomentum zeta = imaginary_direction(mu, {b, 0, 0});
        const Matrix uz = dense_exponential(build_deformed_hamiltonian(h, zeta).matrix(), cplx{0.0, -t});
        const auto tz = deformation_diagonal(box, zeta);
        const auto tzi = deformation_diagonal(box, zeta, true);
        double diff = 0.0, sx = 0.0, sy = 0.0;
        for (int x = 0; x < 50; ++x) sx = std::max(sx, std::abs(tzi[static_cast<std::size_t>(x)]));
        for (int y = 51; y < 101; ++y) sy = std::max(sy, std::abs(tz[static_cast<std::size_t>(y)]));
        for (int x = 0; x < 50; ++x)
          for (int y = 51; y < 101; ++y)
            diff = std::max(diff, std::abs(u(x, y) - tzi[static_cast<std::size_t>(x)] * uz(x, y) *
                                                          tz[static_cast<std::size_t>(y)]));
        worst = std::max(worst, diff / (sx * operator_norm(uz).value * sy));
      }
    }
  }
  require(o, worst < 1e-8, "discrepancy " + fmt("%.3g", worst));
  if (o.ok) o.detail = "max normalised discrepancy " + fmt("%.3g", worst);
  return o;
}

// --- 4 ----------------------------------------------------------------------
Outcome deformed_bound() {
  Outcome o;
  const auto disp = DispersionRelation::discrete_laplacian(1);
  const auto h = build_hamiltonian(disp, zero_potential(), Box::interval(-100, 100));
  double worst = -kInf;
  for (double mu : {0.5, 1.0}) {
    const double c = velocity_constant(disp, mu).c;
    for (double b : {-1.0, 1.0}) {
      const auto hz = build_deformed_hamiltonian(h, imaginary_direction(mu, {b, 0, 0}));
      for (double t : {0.5, 1.0, 2.0}) {
        const double ratio = deformed_evolution_norm(hz.matrix(), t) / std::exp(mu * c * t);
        worst = std::max(worst, ratio);
      }
    }
  }
  require(o, worst <= 1.0 + 1e-6, "norm / e^{mu c t} = " + fmt("%.9f", worst));
  if (o.ok) o.detail = "max norm / e^{mu c t} " + fmt("%.6f", worst);
  return o;
}

// --- 5 ----------------------------------------------------------------------
Outcome mvb() {
  Outcome o;
  const auto s = spec("chain_mvb.json");
  require(o, s.box().size() == 401, "box is not 401 sites");
  const auto rep = run_theorem(s, theorem_index(s, "mvb"), s.seed);
  require(o, rep.rows.size() == 13, "expected t-grid 2..14");
  require(o, no_failed_rows(rep), "a row exceeds its envelope");
  double e10 = std::nan("");
  for (const auto& r : rep.rows) {
    require(o, r.d == 60.0, "separation is not 60");
    if (r.t == 10.0) e10 = r.exponent;
  }
  // Scalar minimisation of mu (c(mu) t - d) with c(mu) = 2 sinh(mu) / mu.
  const double oracle = golden_min([](double mu) { return 20.0 * std::sinh(mu) - 60.0 * mu; }, 1e-6, 8.0);
  require(o, std::abs(e10 + 49.19) <= 0.01, "exponent at t = 10 is " + fmt("%.6f", e10));
  require(o, std::abs(e10 - oracle) <= 1e-6, "exponent differs from scalar minimisation " + fmt("%.6f", oracle));
  if (o.ok) o.detail = "exponent(t=10) " + fmt("%.6f", e10) + ", 13/13 rows";
  return o;
}

// --- 6 ----------------------------------------------------------------------
Outcome state() {
  Outcome o;
  auto s = spec("chain_suite.json");
  const auto i = theorem_index(s, "state");
  s.theorems[i].times = range_times(2, 14);
  const auto rep = run_theorem(s, i, s.seed);
  require(o, no_failed_rows(rep) && rep.verdict(), "state report failed");
  for (const auto& r : rep.rows) {
    const double squared = std::exp(2.0 * r.aux.at("first_power_exponent"));
    require(o, r.measured <= squared || r.status == RowStatus::VacuousBelowFloor,
            "Tr(chi_Y rho_t) above leakage^2 envelope at t = " + fmt("%g", r.t));
  }
  if (o.ok) o.detail = std::to_string(rep.rows.size()) + " rows, d = " + fmt("%g", rep.rows.front().d);
  return o;
}

// --- 7 ----------------------------------------------------------------------
Outcome truncation() {
  Outcome o;
  auto s = spec("chain_suite.json");
  const auto i = theorem_index(s, "lca");
  s.theorems[i].times = range_times(1, 12);
  require(o, s.theorems[i].eta == 40.0, "eta is not 40");
  double min_margin = kInf;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto rep = run_theorem(s, i, seed);
    require(o, rep.verdict(), "seed " + std::to_string(seed) + " failed");
    for (const auto& r : rep.rows) min_margin = std::min(min_margin, r.log_margin);
  }
  if (o.ok) o.detail = "10 seeds x 12 times, min log-margin " + fmt("%.3f", min_margin);
  return o;
}

// --- 8 ----------------------------------------------------------------------
Outcome commutators() {
  Outcome o;
  auto s = spec("chain_suite.json");
  const auto il = theorem_index(s, "lrb"), io = theorem_index(s, "otoc");
  s.theorems[il].times = range_times(1, 14);
  s.theorems[io].times = range_times(1, 14);
  for (std::uint64_t k = 0; k < 10; ++k) {
    const std::uint64_t seed = 100 + 10 * k;
    const auto lrb = run_theorem(s, il, seed);
    const auto otoc = run_theorem(s, io, seed);
    require(o, lrb.verdict(), "LRB seed " + std::to_string(seed) + " failed");
    require(o, otoc.verdict(), "OTOC seed " + std::to_string(seed) + " failed");
    for (std::size_t j = 0; j < lrb.rows.size(); ++j) {
      const double env2 = lrb.rows[j].envelope * lrb.rows[j].envelope;
      require(o, otoc.rows[j].measured <= env2 || otoc.rows[j].status == RowStatus::VacuousBelowFloor,
              "OTOC above envelope^2");
    }
  }
  if (o.ok) o.detail = "10 pairs x 14 times";
  return o;
}

// --- 9 ----------------------------------------------------------------------
// sup over b = +-1 and xi of Re b^k omega^{(k)}(xi) for t_x = -a |x|^{-p}, 0 < |x| <= R.
double power_derivative_sup(double a, double p, int range, int k, bool absolute) {
  auto deriv = [&](double xi) {
    double v = 0.0;
    for (int x = 1; x <= range; ++x)
      v += 2.0 * (-a * std::pow(x, -p)) * std::pow(x, k) * std::cos(xi * x + k * kPi / 2.0);
    return v;
  };
  auto score = [&](double xi, int b) {
    const double v = deriv(xi) * ((k % 2 == 1) ? b : 1);
    return absolute ? std::abs(v) : v;
  };
  const int n = 8000;
  double best = -kInf;
  for (int b : {-1, 1}) {
    for (int i = 0; i < n; ++i) {
      const double xi = -kPi + 2.0 * kPi * i / n;
      if (score(xi, b) < best) continue;
      const double h = 2.0 * kPi / n;
      best = std::max(best, -golden_min([&](double z) { return -score(z, b); }, xi - h, xi + h));
    }
  }
  return best;
}

Outcome power_decay() {
  Outcome o;
  const auto s = spec("power_decay.json");
  const auto i = theorem_index(s, "power");
  const auto& th = s.theorems[i];
  const auto rep = run_theorem(s, i, s.seed);
  const ReportCheck* fit = find_check(rep, "fitted_power");
  require(o, fit != nullptr, "no fitted power check");
  if (!fit) return o;
  require(o, rep.rows.size() == 4, "sweep is not {40, 60, 80, 100}");
  require(o, fit->value <= -2.5 && fit->passed, "fitted exponent " + fmt("%.3f", fit->value));
  require(o, rep.verdict(), "power report failed");

  const DecayLaw law = s.dispersion_relation().decay_law().value();
  double c_oracle = 0.0, fact = 1.0;
  for (int k = 1; k <= th.m; ++k) {
    fact *= k;
    c_oracle += std::real(std::pow(cplx{0.0, th.smooth_mu}, k - 1)) / fact *
                power_derivative_sup(law.amplitude, law.rate, law.range, k, false);
  }
  const double m_oracle = 1.0 + power_derivative_sup(law.amplitude, law.rate, law.range, th.m + 1, true);
  const auto sv = smooth_velocity_constant(s.dispersion_relation(), th.m, th.smooth_mu);
  require(o, std::abs(sv.c_tilde - c_oracle) <= 1e-6 * c_oracle, "c~ " + fmt("%.9f", sv.c_tilde) + " vs " +
                                                                    fmt("%.9f", c_oracle));
  require(o, std::abs(sv.M - m_oracle) <= 1e-6 * m_oracle, "M " + fmt("%.9f", sv.M) + " vs " + fmt("%.9f", m_oracle));
  if (o.ok)
    o.detail = "fit " + fmt("%.3f", fit->value) + ", c~ " + fmt("%.6f", sv.c_tilde) + ", M " + fmt("%.6f", sv.M);
  return o;
}

// --- 10 ---------------------------------------------------------------------
Outcome nbody() {
  Outcome o;
  const auto free_s = spec("nbody_free.json");
  const auto onsite_s = spec("nbody_onsite.json");
  require(o, free_s.box().size() == 41 && free_s.nbody && free_s.nbody->particles == 2, "free geometry");
  require(o, onsite_s.nbody && onsite_s.nbody->strength == 1.0 && onsite_s.nbody->interaction == "onsite",
          "on-site geometry");

  const auto fr = run_theorem(free_s, theorem_index(free_s, "nbody"), free_s.seed);
  double worst_sq = 0.0;
  for (const auto& r : fr.rows) {
    const double one = r.aux.at("one_body");
    worst_sq = std::max(worst_sq, std::abs(r.measured - one * one) / (one * one));
  }
  require(o, worst_sq <= 1e-9, "2-body vs squared 1-body " + fmt("%.3g", worst_sq));
  double lo = kInf, hi = -kInf;
  int ratios = 0;
  for (const auto& c : fr.checks) {
    if (c.name.rfind("rate_ratio", 0) != 0) continue;
    ++ratios;
    require(o, std::abs(c.value - 2.0) <= 0.01, "free rate ratio " + fmt("%.4f", c.value));
    lo = std::min(lo, c.value);
    hi = std::max(hi, c.value);
  }
  require(o, ratios > 0, "no free rate ratios");

  const auto on = run_theorem(onsite_s, theorem_index(onsite_s, "nbody"), onsite_s.seed);
  require(o, no_failed_rows(on), "on-site envelope violated");
  double olo = kInf, ohi = -kInf;
  int oratios = 0;
  for (const auto& c : on.checks) {
    if (c.name.rfind("rate_ratio", 0) != 0) continue;
    ++oratios;
    require(o, c.value >= 1.8 && c.value <= 2.2, "on-site rate ratio " + fmt("%.4f", c.value));
    olo = std::min(olo, c.value);
    ohi = std::max(ohi, c.value);
  }
  require(o, oratios > 0, "no on-site rate ratios");
  if (o.ok)
    o.detail = "square err " + fmt("%.2g", worst_sq) + ", free ratio " + fmt("%.4f", lo) + ".." + fmt("%.4f", hi) +
               ", on-site ratio " + fmt("%.4f", olo) + ".." + fmt("%.4f", ohi);
  return o;
}

// --- 11 ---------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  std::string tmpl = (fs::temp_directory_path() / "lightcone_accept_XXXXXX").string();
  if (!mkdtemp(tmpl.data())) return {false, "cannot create temp dir"};
  const fs::path root = tmpl;
  std::vector<fs::path> specs;
  for (const auto& e : fs::directory_iterator(kSource + "/specs")) specs.push_back(e.path());
  std::sort(specs.begin(), specs.end());
  for (const char* run : {"a", "b"}) {
    for (const auto& p : specs) {
      RunOptions opts;
      opts.out_dir = (root / run / p.stem()).string();
      run_experiment(load_experiment(p.string()), opts);
    }
  }
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (e.path().extension() != ".csv") continue;
    const fs::path other = root / "b" / fs::relative(e.path(), root / "a");
    require(o, fs::exists(other), "missing " + other.string());
    require(o, slurp(e.path()) == slurp(other), "CSV differs: " + fs::relative(e.path(), root / "a").string());
    ++compared;
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  require(o, compared > 0, "no CSV reports produced");
  if (o.ok) o.detail = std::to_string(compared) + " CSV files identical across two runs";
  return o;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "velocity constant, NN chain", 1.0, velocity_chain},
      {2, "semi-relativistic light speed", 5.0, velocity_semi_relativistic},
      {3, "conjugation identity", 10.0, conjugation_identity},
      {4, "deformed evolution bound", 30.0, deformed_bound},
      {5, "MVB certificate", 60.0, mvb},
      {6, "state light cone", 60.0, state},
      {7, "Heisenberg truncation", 120.0, truncation},
      {8, "commutator bound and OTOC", 180.0, commutators},
      {9, "power-law decay", 120.0, power_decay},
      {10, "N-particle", 300.0, nbody},
      {11, "determinism", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.ok && c.budget_s > 0.0 && secs >= c.budget_s) {
      out.ok = false;
      out.detail += " (over " + fmt("%g", c.budget_s) + " s budget)";
    }
    if (!out.ok) ++failed;
    std::printf("criterion %2d: %s  %s: %s [%.2f s]\n", c.id, out.ok ? "PASS" : "FAIL", c.name.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
