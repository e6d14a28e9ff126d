#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lightcone/experiment.hpp"

namespace lightcone {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Source map

namespace {

class MapBuilder {
 public:
  MapBuilder(std::string_view s, std::map<std::string, int>& out) : s_(s), out_(out) {}

  void run() {
    skip_ws();
    value("");
  }

 private:
  void advance() {
    if (i_ < s_.size() && s_[i_] == '\n') ++line_;
    ++i_;
  }
  bool done() const { return i_ >= s_.size(); }
  void skip_ws() {
    while (!done() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) advance();
  }
  std::string string_token() {
    std::string out;
    advance();  // opening quote
    while (!done() && s_[i_] != '"') {
      if (s_[i_] == '\\' && i_ + 1 < s_.size()) {
        advance();
        const char c = s_[i_];
        out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
      } else {
        out += s_[i_];
      }
      advance();
    }
    advance();  // closing quote
    return out;
  }
  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') {
        out += "~0";
      } else if (c == '/') {
        out += "~1";
      } else {
        out += c;
      }
    }
    return out;
  }
  void value(const std::string& ptr) {
    if (done()) return;
    out_.emplace(ptr, line_);
    const char c = s_[i_];
    if (c == '{') {
      advance();
      while (true) {
        skip_ws();
        if (done() || s_[i_] == '}') break;
        if (s_[i_] != '"') return;
        const int key_line = line_;
        const std::string key = string_token();
        skip_ws();
        if (done() || s_[i_] != ':') return;
        advance();
        skip_ws();
        const std::string child = ptr + "/" + escape(key);
        // Anchor the member at its key.
        out_.emplace(child, key_line);
        value(child);
        skip_ws();
        if (!done() && s_[i_] == ',') advance();
      }
      advance();
    } else if (c == '[') {
      advance();
      for (std::size_t k = 0;; ++k) {
        skip_ws();
        if (done() || s_[i_] == ']') break;
        value(ptr + "/" + std::to_string(k));
        skip_ws();
        if (!done() && s_[i_] == ',') advance();
      }
      advance();
    } else if (c == '"') {
      string_token();
    } else {
      while (!done() && s_[i_] != ',' && s_[i_] != ']' && s_[i_] != '}' && s_[i_] != ' ' && s_[i_] != '\n' &&
             s_[i_] != '\t' && s_[i_] != '\r') {
        advance();
      }
    }
  }

  std::string_view s_;
  std::map<std::string, int>& out_;
  std::size_t i_ = 0;
  int line_ = 1;
};

}  // namespace

SourceMap SourceMap::build(std::string_view text) {
  SourceMap m;
  MapBuilder(text, m.lines_).run();
  return m;
}

int SourceMap::line_of(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    const auto it = lines_.find(p);
    if (it != lines_.end()) return it->second;
    const auto slash = p.rfind('/');
    if (slash == std::string::npos) return 1;
    p.resize(slash);
  }
}

SpecFileError::SpecFileError(const std::string& path, int line, const std::string& pointer, const std::string& message)
    : SpecError(pointer, path + ":" + std::to_string(line) + ": " + message +
                             (pointer.empty() ? std::string() : " (at " + pointer + ")")),
      line_(line) {}

// ---------------------------------------------------------------------------
// Parsing helpers

namespace {

const std::set<std::string> kKinds{"mvb", "state", "lca", "lrb", "otoc", "power", "nbody"};

const json& need(const json& j, const std::string& key, const std::string& ptr) {
  if (!j.is_object()) throw SpecError(ptr, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SpecError(ptr, "missing required field '" + key + "'");
  return *it;
}

const json* opt(const json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() || it->is_null() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw SpecError(ptr, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw SpecError(ptr, "expected a finite number");
  return v;
}

int get_int(const json& j, const std::string& ptr) {
  if (!j.is_number_integer()) throw SpecError(ptr, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& ptr) {
  if (!j.is_string()) throw SpecError(ptr, "expected a string");
  return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& ptr) {
  if (!j.is_boolean()) throw SpecError(ptr, "expected true or false");
  return j.get<bool>();
}

std::uint64_t get_seed(const json& j, const std::string& ptr) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw SpecError(ptr, "expected a non-negative integer seed");
  }
  return j.get<std::uint64_t>();
}

Site get_site(const json& j, int n, const std::string& ptr) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) {
    throw SpecError(ptr, "expected an array of " + std::to_string(n) + " integer coordinates");
  }
  Site s{};
  for (int k = 0; k < n; ++k) s[k] = get_int(j[static_cast<std::size_t>(k)], ptr + "/" + std::to_string(k));
  return s;
}

std::vector<double> get_numbers(const json& j, const std::string& ptr) {
  if (!j.is_array()) throw SpecError(ptr, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], ptr + "/" + std::to_string(i)));
  return out;
}

json site_json(const Site& s, int n) {
  json a = json::array();
  for (int k = 0; k < n; ++k) a.push_back(s[k]);
  return a;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& ptr) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw SpecError(ptr + "/" + it.key(), "unknown field '" + it.key() + "'");
  }
}

PotentialSpec parse_potential(const json& j, int n, const std::string& ptr) {
  PotentialSpec p;
  if (!j.is_object()) throw SpecError(ptr, "expected an object");
  p.kind = get_string(need(j, "kind", ptr), ptr + "/kind");
  if (p.kind == "zero") {
    reject_unknown(j, {"kind"}, ptr);
  } else if (p.kind == "delta") {
    reject_unknown(j, {"kind", "site", "strength"}, ptr);
    p.site = get_site(need(j, "site", ptr), n, ptr + "/site");
    p.strength = get_number(need(j, "strength", ptr), ptr + "/strength");
  } else if (p.kind == "linear") {
    reject_unknown(j, {"kind", "slope"}, ptr);
    const auto s = get_numbers(need(j, "slope", ptr), ptr + "/slope");
    if (static_cast<int>(s.size()) != n) throw SpecError(ptr + "/slope", "slope needs one entry per dimension");
    for (int k = 0; k < n; ++k) p.slope[k] = s[static_cast<std::size_t>(k)];
  } else if (p.kind == "sites") {
    reject_unknown(j, {"kind", "values"}, ptr);
    const json& v = need(j, "values", ptr);
    if (!v.is_array()) throw SpecError(ptr + "/values", "expected an array of [site, value] pairs");
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string pi = ptr + "/values/" + std::to_string(i);
      if (!v[i].is_array() || v[i].size() != 2) throw SpecError(pi, "expected [site, value]");
      p.values.emplace_back(get_site(v[i][0], n, pi + "/0"), get_number(v[i][1], pi + "/1"));
    }
  } else {
    throw SpecError(ptr + "/kind", "potential kind must be zero, delta, linear or sites");
  }
  return p;
}

json potential_json(const PotentialSpec& p, int n) {
  json j{{"kind", p.kind}};
  if (p.kind == "delta") {
    j["site"] = site_json(p.site, n);
    j["strength"] = p.strength;
  } else if (p.kind == "linear") {
    json s = json::array();
    for (int k = 0; k < n; ++k) s.push_back(p.slope[k]);
    j["slope"] = s;
  } else if (p.kind == "sites") {
    json v = json::array();
    for (const auto& [s, x] : p.values) v.push_back(json::array({site_json(s, n), x}));
    j["values"] = v;
  }
  return j;
}

RegionSpec parse_region(const json& j, int n, const std::string& ptr) {
  RegionSpec r;
  if (!j.is_object()) throw SpecError(ptr, "expected an object with lower/upper or sites");
  reject_unknown(j, {"lower", "upper", "sites"}, ptr);
  if (j.contains("sites")) {
    if (j.contains("lower") || j.contains("upper")) throw SpecError(ptr, "give either lower/upper or sites, not both");
    const json& s = j["sites"];
    if (!s.is_array() || s.empty()) throw SpecError(ptr + "/sites", "expected a non-empty array of sites");
    for (std::size_t i = 0; i < s.size(); ++i) r.sites.push_back(get_site(s[i], n, ptr + "/sites/" + std::to_string(i)));
  } else {
    r.lower = get_site(need(j, "lower", ptr), n, ptr + "/lower");
    r.upper = get_site(need(j, "upper", ptr), n, ptr + "/upper");
    for (int k = 0; k < n; ++k) {
      if ((*r.upper)[k] < (*r.lower)[k]) throw SpecError(ptr + "/upper", "region upper corner below lower corner");
    }
  }
  return r;
}

json region_json(const RegionSpec& r, int n) {
  if (r.lower) return {{"lower", site_json(*r.lower, n)}, {"upper", site_json(*r.upper, n)}};
  json s = json::array();
  for (const auto& x : r.sites) s.push_back(site_json(x, n));
  return {{"sites", s}};
}

TheoremSpec parse_theorem(const json& j, int n, const std::string& ptr) {
  TheoremSpec t;
  if (!j.is_object()) throw SpecError(ptr, "expected an object");
  t.kind = get_string(need(j, "kind", ptr), ptr + "/kind");
  if (!kKinds.count(t.kind)) {
    throw SpecError(ptr + "/kind", "unknown theorem kind '" + t.kind + "' (mvb, state, lca, lrb, otoc, power, nbody)");
  }
  reject_unknown(j,
                 {"kind", "label", "x", "y", "times", "mu_grid", "epsilon", "floor", "enforce_boundary_window",
                  "window_margin", "seed", "eta", "initial", "density", "m", "smooth_mu", "slack", "max_fitted_power",
                  "sweep"},
                 ptr);
  if (const json* v = opt(j, "label")) t.label = get_string(*v, ptr + "/label");
  if (const json* v = opt(j, "x")) t.x = get_string(*v, ptr + "/x");
  if (const json* v = opt(j, "y")) t.y = get_string(*v, ptr + "/y");
  t.times = get_numbers(need(j, "times", ptr), ptr + "/times");
  if (const json* v = opt(j, "mu_grid")) t.mu_grid = get_numbers(*v, ptr + "/mu_grid");
  if (const json* v = opt(j, "epsilon")) t.epsilon = get_number(*v, ptr + "/epsilon");
  if (const json* v = opt(j, "floor")) t.floor = get_number(*v, ptr + "/floor");
  if (const json* v = opt(j, "enforce_boundary_window")) t.enforce_boundary_window = get_bool(*v, ptr + "/enforce_boundary_window");
  if (const json* v = opt(j, "window_margin")) t.window_margin = get_number(*v, ptr + "/window_margin");
  if (const json* v = opt(j, "seed")) t.seed = get_seed(*v, ptr + "/seed");
  if (const json* v = opt(j, "eta")) t.eta = get_number(*v, ptr + "/eta");
  if (const json* v = opt(j, "initial")) {
    const std::string p = ptr + "/initial";
    if (!v->is_object()) throw SpecError(p, "expected an object");
    t.initial = get_string(need(*v, "kind", p), p + "/kind");
    if (t.initial == "site") {
      reject_unknown(*v, {"kind", "site"}, p);
      if (const json* s = opt(*v, "site")) t.initial_site = get_site(*s, n, p + "/site");
    } else if (t.initial == "random_mixed") {
      reject_unknown(*v, {"kind", "rank"}, p);
      if (const json* r = opt(*v, "rank")) t.rank = get_int(*r, p + "/rank");
    } else {
      throw SpecError(p + "/kind", "initial state kind must be site or random_mixed");
    }
  }
  if (const json* v = opt(j, "density")) {
    t.density = get_string(*v, ptr + "/density");
    if (t.density != "maximally_mixed" && t.density != "random_mixed") {
      throw SpecError(ptr + "/density", "density must be maximally_mixed or random_mixed");
    }
  }
  if (const json* v = opt(j, "m")) t.m = get_int(*v, ptr + "/m");
  if (const json* v = opt(j, "smooth_mu")) t.smooth_mu = get_number(*v, ptr + "/smooth_mu");
  if (const json* v = opt(j, "slack")) t.slack = get_number(*v, ptr + "/slack");
  if (const json* v = opt(j, "max_fitted_power")) t.max_fitted_power = get_number(*v, ptr + "/max_fitted_power");
  if (const json* v = opt(j, "sweep")) {
    if (!v->is_array()) throw SpecError(ptr + "/sweep", "expected an array of {x, y} region pairs");
    for (std::size_t i = 0; i < v->size(); ++i) {
      const std::string p = ptr + "/sweep/" + std::to_string(i);
      const json& e = (*v)[i];
      if (!e.is_object()) throw SpecError(p, "expected an object {x, y}");
      reject_unknown(e, {"x", "y"}, p);
      t.sweep.emplace_back(get_string(need(e, "x", p), p + "/x"), get_string(need(e, "y", p), p + "/y"));
    }
  }
  return t;
}

json theorem_json(const TheoremSpec& t, int n) {
  json j;
  j["kind"] = t.kind;
  j["label"] = t.label;
  if (!t.x.empty()) j["x"] = t.x;
  if (!t.y.empty()) j["y"] = t.y;
  j["times"] = t.times;
  if (!t.mu_grid.empty()) j["mu_grid"] = t.mu_grid;
  j["epsilon"] = t.epsilon;
  j["floor"] = t.floor;
  j["enforce_boundary_window"] = t.enforce_boundary_window;
  j["window_margin"] = t.window_margin;
  if (t.seed) j["seed"] = *t.seed;
  if (t.kind == "lca") j["eta"] = t.eta;
  if (t.kind == "state") {
    json i{{"kind", t.initial}};
    if (t.initial == "site" && t.initial_site) i["site"] = site_json(*t.initial_site, n);
    if (t.initial == "random_mixed") i["rank"] = t.rank;
    j["initial"] = i;
  }
  if (t.kind == "otoc") j["density"] = t.density;
  if (t.kind == "power") {
    j["m"] = t.m;
    j["smooth_mu"] = t.smooth_mu;
    j["slack"] = t.slack;
    if (t.max_fitted_power) j["max_fitted_power"] = *t.max_fitted_power;
  }
  if (!t.sweep.empty()) {
    json s = json::array();
    for (const auto& [x, y] : t.sweep) s.push_back({{"x", x}, {"y", y}});
    j["sweep"] = s;
  }
  return j;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentSpec parse_experiment(const json& j) {
  if (!j.is_object()) throw SpecError("", "experiment spec must be a JSON object");
  reject_unknown(j, {"name", "seed", "dispersion", "box", "potential", "regions", "nbody", "theorems", "constants", "output_dir"},
                 "");
  ExperimentSpec s;
  s.name = get_string(need(j, "name", ""), "/name");
  if (const json* v = opt(j, "seed")) s.seed = get_seed(*v, "/seed");
  const DispersionRelation disp = dispersion_from_json(need(j, "dispersion", ""), "/dispersion");
  s.dispersion = dispersion_to_json(disp);
  s.dimension = disp.dimension();
  const int n = s.dimension;
  const json& box = need(j, "box", "");
  if (!box.is_object()) throw SpecError("/box", "expected an object {lower, upper}");
  reject_unknown(box, {"lower", "upper"}, "/box");
  s.box_lower = get_site(need(box, "lower", "/box"), n, "/box/lower");
  s.box_upper = get_site(need(box, "upper", "/box"), n, "/box/upper");
  for (int k = 0; k < n; ++k) {
    if (s.box_upper[k] < s.box_lower[k]) throw SpecError("/box/upper", "box upper corner below lower corner");
  }
  if (const json* v = opt(j, "potential")) s.potential = parse_potential(*v, n, "/potential");
  const json& regions = need(j, "regions", "");
  if (!regions.is_object()) throw SpecError("/regions", "expected an object mapping labels to regions");
  for (auto it = regions.begin(); it != regions.end(); ++it) {
    s.regions[it.key()] = parse_region(it.value(), n, "/regions/" + it.key());
  }
  if (const json* v = opt(j, "nbody")) {
    NBodySpec nb;
    if (!v->is_object()) throw SpecError("/nbody", "expected an object");
    reject_unknown(*v, {"particles", "sector", "interaction", "strength", "cap"}, "/nbody");
    nb.particles = get_int(need(*v, "particles", "/nbody"), "/nbody/particles");
    if (const json* x = opt(*v, "sector")) {
      const std::string sec = get_string(*x, "/nbody/sector");
      if (sec == "distinguishable") {
        nb.sector = Sector::Distinguishable;
      } else if (sec == "bosonic") {
        nb.sector = Sector::Bosonic;
      } else {
        throw SpecError("/nbody/sector", "sector must be distinguishable or bosonic");
      }
    }
    if (const json* x = opt(*v, "interaction")) {
      nb.interaction = get_string(*x, "/nbody/interaction");
      if (nb.interaction != "none" && nb.interaction != "onsite") {
        throw SpecError("/nbody/interaction", "interaction must be none or onsite");
      }
    }
    if (const json* x = opt(*v, "strength")) nb.strength = get_number(*x, "/nbody/strength");
    if (const json* x = opt(*v, "cap")) nb.cap = static_cast<std::size_t>(get_seed(*x, "/nbody/cap"));
    s.nbody = nb;
  }
  const json& th = need(j, "theorems", "");
  if (!th.is_array()) throw SpecError("/theorems", "expected an array");
  for (std::size_t i = 0; i < th.size(); ++i) s.theorems.push_back(parse_theorem(th[i], n, "/theorems/" + std::to_string(i)));
  // Default labels: kind, or kind_<index> when a kind repeats.
  std::map<std::string, int> seen;
  for (const auto& t : s.theorems) ++seen[t.kind];
  for (std::size_t i = 0; i < s.theorems.size(); ++i) {
    auto& t = s.theorems[i];
    if (t.label.empty()) t.label = seen[t.kind] > 1 ? t.kind + "_" + std::to_string(i) : t.kind;
  }
  if (const json* v = opt(j, "constants")) {
    ConstantsSpec c;
    if (!v->is_object()) throw SpecError("/constants", "expected an object");
    reject_unknown(*v, {"mu", "m", "smooth_mu"}, "/constants");
    if (const json* x = opt(*v, "mu")) c.mu = get_numbers(*x, "/constants/mu");
    if (const json* x = opt(*v, "m")) {
      if (!x->is_array()) throw SpecError("/constants/m", "expected an array of integers");
      for (std::size_t i = 0; i < x->size(); ++i) c.m.push_back(get_int((*x)[i], "/constants/m/" + std::to_string(i)));
    }
    if (const json* x = opt(*v, "smooth_mu")) c.smooth_mu = get_number(*x, "/constants/smooth_mu");
    s.constants = c;
  }
  if (const json* v = opt(j, "output_dir")) s.output_dir = get_string(*v, "/output_dir");
  return s;
}

json serialize_experiment(const ExperimentSpec& s) {
  const int n = s.dimension;
  json j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["dispersion"] = s.dispersion;
  j["box"] = {{"lower", site_json(s.box_lower, n)}, {"upper", site_json(s.box_upper, n)}};
  j["potential"] = potential_json(s.potential, n);
  json r = json::object();
  for (const auto& [k, v] : s.regions) r[k] = region_json(v, n);
  j["regions"] = r;
  if (s.nbody) {
    j["nbody"] = {{"particles", s.nbody->particles},
                  {"sector", s.nbody->sector == Sector::Bosonic ? "bosonic" : "distinguishable"},
                  {"interaction", s.nbody->interaction},
                  {"strength", s.nbody->strength},
                  {"cap", s.nbody->cap}};
  }
  json th = json::array();
  for (const auto& t : s.theorems) th.push_back(theorem_json(t, n));
  j["theorems"] = th;
  if (s.constants) j["constants"] = {{"mu", s.constants->mu}, {"m", s.constants->m}, {"smooth_mu", s.constants->smooth_mu}};
  if (!s.output_dir.empty()) j["output_dir"] = s.output_dir;
  return j;
}

DispersionRelation ExperimentSpec::dispersion_relation() const { return dispersion_from_json(dispersion, "/dispersion"); }

Box ExperimentSpec::box() const { return Box(dimension, box_lower, box_upper); }

Potential ExperimentSpec::potential_function() const {
  const PotentialSpec p = potential;
  if (p.kind == "delta") return delta_potential(p.site, p.strength);
  if (p.kind == "linear") return linear_potential(p.slope);
  if (p.kind == "sites") {
    return [values = p.values](const Site& s) {
      double v = 0.0;
      for (const auto& [x, val] : values) {
        if (x == s) v += val;
      }
      return cplx{v};
    };
  }
  return zero_potential();
}

Region ExperimentSpec::region(const std::string& label) const {
  const auto it = regions.find(label);
  if (it == regions.end()) throw DomainError("unknown region '" + label + "'");
  const RegionSpec& r = it->second;
  if (r.lower) return Region::cuboid(dimension, *r.lower, *r.upper, label);
  return Region(dimension, r.sites, label);
}

void validate_experiment(const ExperimentSpec& s) {
  if (s.theorems.empty()) throw SpecError("/theorems", "theorem list is empty");
  const Box box = s.box();
  const DispersionRelation disp = s.dispersion_relation();
  for (const auto& [label, r] : s.regions) {
    if (!s.region(label).within(box)) throw SpecError("/regions/" + label, "region '" + label + "' leaves the box");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < s.theorems.size(); ++i) {
    const auto& t = s.theorems[i];
    const std::string ptr = "/theorems/" + std::to_string(i);
    if (!labels.insert(t.label).second) throw SpecError(ptr + "/label", "duplicate theorem label '" + t.label + "'");
    auto need_region = [&](const std::string& name, const std::string& field) {
      if (name.empty()) throw SpecError(ptr, "missing required field '" + field + "'");
      if (!s.regions.count(name)) throw SpecError(ptr + "/" + field, "unknown region '" + name + "'");
    };
    try {
      CertificationConfig c;
      c.times = t.times;
      c.epsilon = t.epsilon;
      c.floor = t.floor;
      c.window_margin = t.window_margin;
      c.validate();
    } catch (const DomainError& e) {
      throw SpecError(ptr + "/times", e.what());
    }
    for (std::size_t k = 0; k < t.mu_grid.size(); ++k) {
      if (!(t.mu_grid[k] > 0.0 && t.mu_grid[k] < disp.strip())) {
        throw SpecError(ptr + "/mu_grid/" + std::to_string(k), "mu must lie in (0, strip)");
      }
    }
    const bool pairwise = t.kind == "mvb" || t.kind == "state" || t.kind == "lrb" || t.kind == "otoc";
    if (pairwise || t.kind == "lca") need_region(t.x, "x");
    if (pairwise) {
      need_region(t.y, "y");
      if (intersects(s.region(t.x), s.region(t.y))) {
        throw SpecError(ptr + "/y", "regions '" + t.x + "' and '" + t.y + "' overlap");
      }
    }
    if (t.kind == "lca" && !(t.eta >= 1.0)) throw SpecError(ptr + "/eta", "eta must be at least 1");
    if (t.kind == "state") {
      if (t.initial == "site" && t.initial_site && !s.region(t.x).contains(*t.initial_site)) {
        throw SpecError(ptr + "/initial/site", "initial site must lie in region '" + t.x + "'");
      }
      if (t.initial == "random_mixed" && t.rank < 1) throw SpecError(ptr + "/initial/rank", "rank must be positive");
    }
    if (t.kind == "power" || t.kind == "nbody") {
      if (t.sweep.empty()) throw SpecError(ptr, "missing required field 'sweep'");
      for (std::size_t k = 0; k < t.sweep.size(); ++k) {
        const std::string p = ptr + "/sweep/" + std::to_string(k);
        if (!s.regions.count(t.sweep[k].first)) throw SpecError(p + "/x", "unknown region '" + t.sweep[k].first + "'");
        if (!s.regions.count(t.sweep[k].second)) throw SpecError(p + "/y", "unknown region '" + t.sweep[k].second + "'");
        if (intersects(s.region(t.sweep[k].first), s.region(t.sweep[k].second))) {
          throw SpecError(p, "regions '" + t.sweep[k].first + "' and '" + t.sweep[k].second + "' overlap");
        }
      }
    }
    if (t.kind == "power") {
      if (t.m < 1) throw SpecError(ptr + "/m", "m must be >= 1");
      if (!(t.smooth_mu > 0.0 && t.smooth_mu < 1.0)) throw SpecError(ptr + "/smooth_mu", "smooth_mu must lie in (0, 1)");
      if (!(t.slack >= 0.0)) throw SpecError(ptr + "/slack", "slack must be non-negative");
    }
    if (t.kind == "nbody" && !s.nbody) throw SpecError(ptr, "nbody theorem requires a top-level 'nbody' block");
  }
  if (s.nbody && s.nbody->particles < 1) throw SpecError("/nbody/particles", "particle number must be positive");
  if (s.constants) {
    for (std::size_t k = 0; k < s.constants->mu.size(); ++k) {
      if (!(s.constants->mu[k] > 0.0 && s.constants->mu[k] < disp.strip())) {
        throw SpecError("/constants/mu/" + std::to_string(k), "mu must lie in (0, strip)");
      }
    }
    for (std::size_t k = 0; k < s.constants->m.size(); ++k) {
      if (s.constants->m[k] < 1) throw SpecError("/constants/m/" + std::to_string(k), "m must be >= 1");
    }
  }
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecFileError(path, 1, "", "cannot read the spec file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    throw SpecFileError(path, line, "", std::string("JSON syntax error: ") + e.what());
  }
  const SourceMap map = SourceMap::build(text);
  try {
    ExperimentSpec s = parse_experiment(j);
    validate_experiment(s);
    return s;
  } catch (const SpecError& e) {
    throw SpecFileError(path, map.line_of(e.pointer()), e.pointer(), e.what());
  }
}

SpecFileError locate_spec_error(const std::string& path, const SpecError& error) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return SpecFileError(path, SourceMap::build(buf.str()).line_of(error.pointer()), error.pointer(), error.what());
}

}  // namespace lightcone
