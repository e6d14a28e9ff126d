#include <cmath>
#include <regex>

#include <nlohmann/json.hpp>

#include "lightcone/dispersion.hpp"

namespace lightcone {
namespace {

using nlohmann::json;

const json& member(const json& j, const std::string& key, const std::string& pointer) {
  if (!j.is_object()) throw SpecError(pointer, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SpecError(pointer, "missing required field '" + key + "'");
  return *it;
}

double number(const json& j, const std::string& pointer) {
  if (!j.is_number()) throw SpecError(pointer, "expected a number");
  return j.get<double>();
}

double strip_value(const json& parent, const std::string& pointer, double fallback) {
  const auto it = parent.find("strip");
  if (it == parent.end() || it->is_null()) return fallback;
  if (it->is_string() && (*it == "inf" || *it == "infinity")) return kInf;
  return number(*it, pointer + "/strip");
}

int dimension_of(const json& j, const std::string& pointer) {
  const json& d = member(j, "dimension", pointer);
  if (!d.is_number_integer() || d.get<int>() < 1 || d.get<int>() > kMaxDim) {
    throw SpecError(pointer + "/dimension", "dimension must be an integer in [1, 3]");
  }
  return d.get<int>();
}

json strip_json(double a) { return std::isinf(a) ? json("inf") : json(a); }

}  // namespace

DispersionRelation dispersion_from_json(const json& j, const std::string& pointer) {
  const json& kind_j = member(j, "kind", pointer);
  if (!kind_j.is_string()) throw SpecError(pointer + "/kind", "expected a string");
  const std::string kind = kind_j.get<std::string>();
  const int n = dimension_of(j, pointer);
  try {
    if (kind == "hopping") {
      const json& coeffs = member(j, "coefficients", pointer);
      if (!coeffs.is_array() || coeffs.empty()) {
        throw SpecError(pointer + "/coefficients", "expected a non-empty array of [displacement, amplitude] pairs");
      }
      std::vector<HoppingTerm> terms;
      for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const std::string p = pointer + "/coefficients/" + std::to_string(i);
        const json& e = coeffs[i];
        if (!e.is_array() || e.size() != 2 || !e[0].is_array() || static_cast<int>(e[0].size()) != n) {
          throw SpecError(p, "expected [[x_1..x_n], amplitude]");
        }
        HoppingTerm t;
        for (int k = 0; k < n; ++k) {
          if (!e[0][k].is_number_integer()) throw SpecError(p + "/0/" + std::to_string(k), "expected an integer");
          t.displacement[k] = e[0][k].get<int>();
        }
        t.amplitude = number(e[1], p + "/1");
        terms.push_back(t);
      }
      return DispersionRelation::hopping(n, std::move(terms), strip_value(j, pointer, kInf));
    }
    if (kind == "closed_form") {
      const json& sym = member(j, "symbol", pointer);
      if (!sym.is_string()) throw SpecError(pointer + "/symbol", "expected a string");
      const std::string s = sym.get<std::string>();
      static const std::regex with_arg(R"(^\s*(\w+)\s*\(\s*([-+0-9.eE]+)\s*\)\s*$)");
      std::smatch m;
      if (s == "discrete_laplacian" || s == "discrete_laplacian()") return DispersionRelation::discrete_laplacian(n);
      if (std::regex_match(s, m, with_arg)) {
        const double arg = std::stod(m[2].str());
        if (m[1] == "semi_relativistic") {
          if (!j.contains("strip")) {
            throw SpecError(pointer, "semi_relativistic requires a declared 'strip' half-width");
          }
          return DispersionRelation::semi_relativistic(n, arg, strip_value(j, pointer, kInf));
        }
        if (m[1] == "constant") return DispersionRelation::constant(n, arg);
      }
      throw SpecError(pointer + "/symbol", "unknown closed-form symbol '" + s +
                                               "' (known: discrete_laplacian, semi_relativistic(m), constant(E0))");
    }
    if (kind == "decay_law") {
      const json& law = member(j, "law", pointer);
      const double amp = j.contains("amplitude") ? number(j["amplitude"], pointer + "/amplitude") : 1.0;
      if (law == "exponential") {
        const double rate = number(member(j, "rate", pointer), pointer + "/rate");
        const double tol = j.contains("tail_tolerance") ? number(j["tail_tolerance"], pointer + "/tail_tolerance") : 1e-12;
        return DispersionRelation::exponential_decay(n, amp, rate, tol);
      }
      if (law == "power") {
        const double p = number(member(j, "exponent", pointer), pointer + "/exponent");
        const json& r = member(j, "range", pointer);
        if (!r.is_number_integer()) throw SpecError(pointer + "/range", "expected an integer");
        return DispersionRelation::power_decay(n, amp, p, r.get<int>());
      }
      throw SpecError(pointer + "/law", "decay law must be 'exponential' or 'power'");
    }
  } catch (const DomainError& e) {
    throw SpecError(pointer, e.what());
  }
  throw SpecError(pointer + "/kind", "dispersion kind must be 'hopping', 'closed_form' or 'decay_law'");
}

json dispersion_to_json(const DispersionRelation& disp) {
  json j;
  j["dimension"] = disp.dimension();
  if (const auto& law = disp.decay_law()) {
    j["kind"] = "decay_law";
    j["amplitude"] = law->amplitude;
    if (law->kind == DecayLaw::Kind::Exponential) {
      j["law"] = "exponential";
      j["rate"] = law->rate;
    } else {
      j["law"] = "power";
      j["exponent"] = law->rate;
      j["range"] = law->range;
    }
    return j;
  }
  if (disp.form() == DispersionRelation::Form::Hopping) {
    j["kind"] = "hopping";
    json coeffs = json::array();
    for (const auto& t : disp.terms()) {
      json x = json::array();
      for (int k = 0; k < disp.dimension(); ++k) x.push_back(t.displacement[k]);
      coeffs.push_back(json::array({x, t.amplitude}));
    }
    j["coefficients"] = coeffs;
    j["strip"] = strip_json(disp.strip());
    return j;
  }
  j["kind"] = "closed_form";
  j["symbol"] = disp.name();
  j["strip"] = strip_json(disp.strip());
  return j;
}

}  // namespace lightcone
