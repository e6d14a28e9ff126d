#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "lightcone/experiment.hpp"
#include "lightcone/parallel.hpp"

namespace lightcone {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

CertificationConfig make_config(const TheoremSpec& t, std::uint64_t seed) {
  CertificationConfig c;
  c.times = t.times;
  c.mu_grid = t.mu_grid;
  c.epsilon = t.epsilon;
  c.floor = t.floor;
  c.seed = seed;
  c.enforce_boundary_window = t.enforce_boundary_window;
  c.window_margin = t.window_margin;
  return c;
}

// Site of `from` closest to `to`; ties go to the first in site order.
Site closest_site(const Region& from, const Region& to) {
  Site best = from.sites().front();
  double best_d = kInf;
  for (const Site& s : from.sites()) {
    const double d = site_distance(s, to);
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  return best;
}

std::vector<std::pair<Region, Region>> sweep_regions(const ExperimentSpec& spec, const TheoremSpec& t) {
  std::vector<std::pair<Region, Region>> out;
  for (const auto& [x, y] : t.sweep) out.emplace_back(spec.region(x), spec.region(y));
  return out;
}

// |psi_t(x)| for psi_0 = delta at `start`, one row per time.
Matrix front_amplitude(const LatticeHamiltonian& h, const Site& start, const std::vector<double>& times) {
  const Propagator p(h.matrix(), PropagationMethod::Chebyshev);
  Vector psi0 = Vector::Zero(static_cast<Eigen::Index>(h.dimension()));
  psi0(static_cast<Eigen::Index>(h.box().index(start))) = 1.0;
  Matrix amp(static_cast<Eigen::Index>(times.size()), psi0.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    amp.row(static_cast<Eigen::Index>(k)) = p.apply(psi0, times[k]).cwiseAbs().cast<cplx>().transpose();
  }
  return amp;
}

std::string render_summary(const std::vector<std::pair<std::string, CertificationReport>>& reports,
                           OutputFormat format) {
  if (format == OutputFormat::Json) {
    json a = json::array();
    for (const auto& [label, r] : reports) {
      a.push_back({{"label", label},
                   {"theorem", r.theorem},
                   {"rows", r.rows.size()},
                   {"pass", r.count(RowStatus::Pass)},
                   {"vacuous_below_floor", r.count(RowStatus::VacuousBelowFloor)},
                   {"fail", r.count(RowStatus::Fail)},
                   {"checks_failed", std::count_if(r.checks.begin(), r.checks.end(),
                                                   [](const ReportCheck& c) { return !c.passed; })},
                   {"verdict", r.verdict() ? "pass" : "fail"}});
    }
    return a.dump(2) + "\n";
  }
  if (format == OutputFormat::Csv) {
    std::string out = "label,theorem,rows,pass,vacuous_below_floor,fail,checks_failed,verdict\n";
    for (const auto& [label, r] : reports) {
      const auto bad = std::count_if(r.checks.begin(), r.checks.end(), [](const ReportCheck& c) { return !c.passed; });
      out += label + "," + r.theorem + "," + std::to_string(r.rows.size()) + "," +
             std::to_string(r.count(RowStatus::Pass)) + "," + std::to_string(r.count(RowStatus::VacuousBelowFloor)) +
             "," + std::to_string(r.count(RowStatus::Fail)) + "," + std::to_string(bad) + "," +
             (r.verdict() ? "pass" : "fail") + "\n";
    }
    return out;
  }
  char line[256];
  std::string out;
  std::snprintf(line, sizeof line, "%-16s %-7s %5s %5s %8s %5s %7s  %s\n", "label", "theorem", "rows", "pass",
                "vacuous", "fail", "checks", "verdict");
  out += line;
  for (const auto& [label, r] : reports) {
    const auto bad = std::count_if(r.checks.begin(), r.checks.end(), [](const ReportCheck& c) { return !c.passed; });
    std::snprintf(line, sizeof line, "%-16s %-7s %5zu %5zu %8zu %5zu %4zu/%-2zu  %s\n", label.c_str(),
                  r.theorem.c_str(), r.rows.size(), r.count(RowStatus::Pass), r.count(RowStatus::VacuousBelowFloor),
                  r.count(RowStatus::Fail), r.checks.size() - static_cast<std::size_t>(bad), r.checks.size(),
                  r.verdict() ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

}  // namespace

CertificationReport run_theorem(const ExperimentSpec& spec, std::size_t index, std::uint64_t seed) {
  const TheoremSpec& t = spec.theorems.at(index);
  const DispersionRelation disp = spec.dispersion_relation();
  const Box box = spec.box();
  const Potential v = spec.potential_function();
  const CertificationConfig config = make_config(t, seed);

  CertificationReport rep;
  if (t.kind == "nbody") {
    const NBodySpec nb = spec.nbody.value_or(NBodySpec{});
    const PairInteraction w = nb.interaction == "onsite" ? onsite_interaction(nb.strength) : no_interaction();
    const auto h1 = build_hamiltonian(disp, v, box);
    const auto hn = build_n_particle_hamiltonian(disp, v, w, nb.particles, box, nb.sector, nb.cap);
    rep = certify_nbody(hn, h1, sweep_regions(spec, t), config);
  } else {
    const auto h = build_hamiltonian(disp, v, box);
    if (t.kind == "power") {
      PowerConfig pc;
      pc.m = t.m;
      pc.smooth_mu = t.smooth_mu;
      pc.slack = t.slack;
      pc.max_fitted_power = t.max_fitted_power;
      rep = certify_power_mvb(h, sweep_regions(spec, t), pc, config);
    } else {
      const Region x = spec.region(t.x);
      if (t.kind == "lca") {
        rep = certify_lca(h, Observable::random_localized(box, x, seed), t.eta, config);
      } else {
        const Region y = spec.region(t.y);
        if (t.kind == "mvb") {
          rep = certify_mvb(h, x, y, config);
        } else if (t.kind == "state") {
          const DensityOperator rho =
              t.initial == "random_mixed"
                  ? DensityOperator::random_mixed(box, x, t.rank, seed)
                  : DensityOperator::site(box, t.initial_site.value_or(closest_site(x, y)));
          rep = certify_state_lightcone(h, rho, y, config);
        } else {
          const Observable a = Observable::random_localized(box, x, seed);
          const Observable b = Observable::random_localized(box, y, seed + 1);
          if (t.kind == "lrb") {
            rep = certify_lrb(h, a, b, config);
          } else {
            const Region all = Region::whole(box);
            const DensityOperator rho =
                t.density == "random_mixed"
                    ? DensityOperator::random_mixed(box, all, static_cast<int>(std::min<std::size_t>(4, box.size())),
                                                    seed + 2)
                    : DensityOperator(Matrix::Identity(static_cast<Eigen::Index>(box.size()),
                                                       static_cast<Eigen::Index>(box.size())) /
                                          static_cast<double>(box.size()),
                                      box);
            rep = certify_otoc(h, rho, a, b, config);
          }
        }
      }
    }
  }
  rep.instance = t.label;
  return rep;
}

RunResult run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  validate_experiment(spec);
  RunResult result;
  std::filesystem::path dir;
  if (options.write_files) {
    dir = options.out_dir ? *options.out_dir : (spec.output_dir.empty() ? "lightcone_out" : spec.output_dir);
    std::filesystem::create_directories(dir);
  }
  for (std::size_t i = 0; i < spec.theorems.size(); ++i) {
    const TheoremSpec& t = spec.theorems[i];
    const std::uint64_t seed = options.seed_override ? *options.seed_override : t.seed.value_or(spec.seed);
    CertificationReport rep;
    try {
      rep = run_theorem(spec, i, seed);
    } catch (const DomainError& e) {
      throw SpecError("/theorems/" + std::to_string(i), std::string("theorem '") + t.label + "': " + e.what());
    }
    if (options.write_files) {
      const auto base = dir / t.label;
      write_text(base.string() + ".json", rep.to_json().dump(2) + "\n");
      write_text(base.string() + ".csv", rep.to_csv());
      write_text(base.string() + "_norm.svg", svg_norm_plot(rep, t.label + " (" + t.kind + ")"));
      result.files.push_back(base.string() + ".json");
      result.files.push_back(base.string() + ".csv");
      result.files.push_back(base.string() + "_norm.svg");
      if ((t.kind == "mvb" || t.kind == "state") && spec.dimension == 1) {
        const Region x = spec.region(t.x);
        const Region y = spec.region(t.y);
        Site start = t.kind == "mvb" ? closest_site(y, x) : closest_site(x, y);
        if (t.kind == "state" && t.initial == "site" && t.initial_site) start = *t.initial_site;
        const auto h = build_hamiltonian(spec.dispersion_relation(), spec.potential_function(), spec.box());
        const Matrix amp = front_amplitude(h, start, t.times);
        write_text(base.string() + "_front.svg",
                   svg_front_heatmap(amp, t.times, spec.box_lower[0], t.label + " front |psi_t(x)|"));
        result.files.push_back(base.string() + "_front.svg");
      }
    }
    if (!rep.verdict()) result.exit_code = kExitFail;
    result.reports.emplace_back(t.label, std::move(rep));
  }
  result.summary = render_summary(result.reports, options.format);
  if (options.write_files) {
    write_text(dir / "summary.csv", render_summary(result.reports, OutputFormat::Csv));
    result.files.push_back((dir / "summary.csv").string());
  }
  return result;
}

std::vector<ConstantsRow> compute_constants(const ExperimentSpec& spec) {
  const DispersionRelation disp = spec.dispersion_relation();
  const ConstantsSpec cs = spec.constants.value_or(ConstantsSpec{});
  std::vector<double> mus = cs.mu;
  if (mus.empty() && disp.strip() > 0.0) {
    const double hi = std::min(0.95 * disp.strip(), 2.0);
    for (int k = 1; k <= 8; ++k) mus.push_back(hi * k / 8.0);
  }
  std::vector<ConstantsRow> rows(mus.size());
  parallel_for(mus.size(), [&](std::size_t k) {
    rows[k] = ConstantsRow{"c", mus[k], 0, velocity_constant(disp, mus[k]).c};
  });
  for (int m : cs.m) {
    const auto sv = smooth_velocity_constant(disp, m, cs.smooth_mu);
    rows.push_back({"c_tilde", cs.smooth_mu, m, sv.c_tilde});
    rows.push_back({"M", 0.0, m, sv.M});
  }
  return rows;
}

std::string render_constants(const std::vector<ConstantsRow>& rows, OutputFormat format) {
  if (format == OutputFormat::Json) {
    json a = json::array();
    for (const auto& r : rows) {
      json e{{"quantity", r.quantity}, {"value", r.value}};
      if (r.quantity != "M") e["mu"] = r.mu;
      if (r.quantity != "c") e["m"] = r.m;
      a.push_back(e);
    }
    return a.dump(2) + "\n";
  }
  if (format == OutputFormat::Csv) {
    std::string out = "quantity,mu,m,value\n";
    for (const auto& r : rows) {
      out += r.quantity + "," + (r.quantity == "M" ? "" : fmt17(r.mu)) + "," +
             (r.quantity == "c" ? "" : std::to_string(r.m)) + "," + fmt17(r.value) + "\n";
    }
    return out;
  }
  std::string out = "quantity        mu     m  value\n";
  char line[128];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-9s %8s %5s  %s\n", r.quantity.c_str(),
                  r.quantity == "M" ? "-" : fmt6(r.mu).c_str(), r.quantity == "c" ? "-" : std::to_string(r.m).c_str(),
                  fmt17(r.value).c_str());
    out += line;
  }
  return out;
}

}  // namespace lightcone
