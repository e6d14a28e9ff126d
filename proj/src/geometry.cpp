#include "lightcone/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace lightcone {
namespace {

double distance(const Site& a, const Site& b) {
  double s = 0.0;
  for (int j = 0; j < kMaxDim; ++j) {
    const double d = static_cast<double>(a[j]) - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

double project(const Site& s, const std::array<double, kMaxDim>& b) {
  double v = 0.0;
  for (int j = 0; j < kMaxDim; ++j) v += b[j] * s[j];
  return v;
}

double separation_gap(const Region& a, const Region& c, const std::array<double, kMaxDim>& b) {
  double min_a = kInf;
  double max_c = -kInf;
  for (const auto& s : a.sites()) min_a = std::min(min_a, project(s, b));
  for (const auto& s : c.sites()) max_c = std::max(max_c, project(s, b));
  return min_a - max_c;
}

// Nearest-neighbour connected components.
std::vector<Region> components(const Region& r) {
  const auto& sites = r.sites();
  std::vector<int> label(sites.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (label[i] >= 0) continue;
    std::vector<std::size_t> stack{i};
    label[i] = next;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      for (int j = 0; j < r.dimension(); ++j) {
        for (int step : {-1, 1}) {
          Site nb = sites[k];
          nb[j] += step;
          const auto it = std::lower_bound(sites.begin(), sites.end(), nb);
          if (it != sites.end() && *it == nb) {
            const auto m = static_cast<std::size_t>(it - sites.begin());
            if (label[m] < 0) {
              label[m] = next;
              stack.push_back(m);
            }
          }
        }
      }
    }
    ++next;
  }
  std::vector<std::vector<Site>> parts(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < sites.size(); ++i) parts[static_cast<std::size_t>(label[i])].push_back(sites[i]);
  std::vector<Region> out;
  for (auto& p : parts) out.emplace_back(r.dimension(), std::move(p), r.label());
  return out;
}

std::vector<Region> singletons(const Region& r) {
  std::vector<Region> out;
  for (const auto& s : r.sites()) out.emplace_back(r.dimension(), std::vector<Site>{s}, r.label());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Box

Box::Box(int dimension, Site lower, Site upper) : dimension_(dimension), lower_(lower), upper_(upper) {
  if (dimension < 1 || dimension > kMaxDim) throw DomainError("box dimension must be in [1, 3]");
  for (int j = dimension; j < kMaxDim; ++j) {
    lower_[j] = 0;
    upper_[j] = 0;
  }
  size_ = 1;
  for (int j = dimension - 1; j >= 0; --j) {
    if (upper_[j] < lower_[j]) throw DomainError("box is empty");
    stride_[j] = size_;
    size_ *= static_cast<std::size_t>(upper_[j] - lower_[j] + 1);
  }
  for (int j = dimension; j < kMaxDim; ++j) stride_[j] = 0;
}

bool Box::contains(const Site& s) const noexcept {
  for (int j = 0; j < kMaxDim; ++j) {
    if (s[j] < lower_[j] || s[j] > upper_[j]) return false;
  }
  return true;
}

std::size_t Box::index(const Site& s) const {
  if (!contains(s)) throw DomainError("site outside the box");
  std::size_t idx = 0;
  for (int j = 0; j < dimension_; ++j) idx += static_cast<std::size_t>(s[j] - lower_[j]) * stride_[j];
  return idx;
}

Site Box::site(std::size_t index) const {
  Site s{};
  for (int j = 0; j < dimension_; ++j) {
    s[j] = lower_[j] + static_cast<int>(index / stride_[j]);
    index %= stride_[j];
  }
  return s;
}

std::vector<Site> Box::sites() const {
  std::vector<Site> out;
  out.reserve(size_);
  for (std::size_t i = 0; i < size_; ++i) out.push_back(site(i));
  return out;
}

// ---------------------------------------------------------------------------
// Region

Region::Region(int dimension, std::vector<Site> sites, std::string label)
    : dimension_(dimension), sites_(std::move(sites)), label_(std::move(label)) {
  if (dimension < 1 || dimension > kMaxDim) throw DomainError("region dimension must be in [1, 3]");
  for (const auto& s : sites_) {
    for (int j = dimension; j < kMaxDim; ++j) {
      if (s[j] != 0) throw DomainError("region site has more components than the dimension");
    }
  }
  std::sort(sites_.begin(), sites_.end());
  sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
}

Region Region::interval(int lower, int upper, std::string label) {
  return cuboid(1, {lower, 0, 0}, {upper, 0, 0}, std::move(label));
}

Region Region::cuboid(int dimension, Site lower, Site upper, std::string label) {
  std::vector<Site> sites;
  Site s{};
  std::function<void(int)> rec = [&](int j) {
    if (j == dimension) {
      sites.push_back(s);
      return;
    }
    for (int v = lower[j]; v <= upper[j]; ++v) {
      s[j] = v;
      rec(j + 1);
    }
  };
  rec(0);
  return Region(dimension, std::move(sites), std::move(label));
}

Region Region::whole(const Box& box, std::string label) { return Region(box.dimension(), box.sites(), std::move(label)); }

bool Region::contains(const Site& s) const { return std::binary_search(sites_.begin(), sites_.end(), s); }

bool Region::within(const Box& box) const {
  if (box.dimension() != dimension_) return false;
  return std::all_of(sites_.begin(), sites_.end(), [&](const Site& s) { return box.contains(s); });
}

Region Region::complement(const Box& box, std::string label) const {
  std::vector<Site> out;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Site s = box.site(i);
    if (!contains(s)) out.push_back(s);
  }
  return Region(box.dimension(), std::move(out), std::move(label));
}

Region Region::with_label(std::string label) const {
  Region r = *this;
  r.label_ = std::move(label);
  return r;
}

bool intersects(const Region& x, const Region& y) {
  auto i = x.sites().begin();
  auto j = y.sites().begin();
  while (i != x.sites().end() && j != y.sites().end()) {
    if (*i == *j) return true;
    if (*i < *j) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

double site_distance(const Site& s, const Region& x) {
  double best = kInf;
  for (const auto& t : x.sites()) {
    best = std::min(best, distance(s, t));
    if (best == 0.0) break;
  }
  return best;
}

double region_distance(const Region& x, const Region& y) {
  if (x.empty() || y.empty()) throw DomainError("distance to an empty region is undefined");
  if (intersects(x, y)) return 0.0;
  double best = kInf;
  for (const auto& s : x.sites()) best = std::min(best, site_distance(s, y));
  return best;
}

Region neighborhood(const Region& x, double eta, const Box& box) {
  if (!(eta >= 0.0)) throw DomainError("neighbourhood radius must be non-negative");
  std::vector<Site> out(x.sites());
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Site s = box.site(i);
    if (site_distance(s, x) < eta) out.push_back(s);
  }
  return Region(x.dimension(), std::move(out), x.label() + "_eta");
}

std::vector<std::size_t> site_indices(const Box& box, const Region& x) {
  std::vector<std::size_t> out;
  out.reserve(x.size());
  for (const auto& s : x.sites()) out.push_back(box.index(s));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> indicator(const Box& box, const Region& x) {
  std::vector<double> chi(box.size(), 0.0);
  for (const auto& s : x.sites()) chi[box.index(s)] = 1.0;
  return chi;
}

SeparatedPair half_space_separation(const Region& a, const Region& c) {
  const int n = a.dimension();
  std::vector<std::array<double, kMaxDim>> candidates;
  for (int i = 0; i < n; ++i) {
    std::array<double, kMaxDim> e{};
    e[i] = 1.0;
    candidates.push_back(e);
    for (int j = i + 1; j < n; ++j) {
      for (double sgn : {1.0, -1.0}) {
        std::array<double, kMaxDim> d{};
        d[i] = 1.0 / std::sqrt(2.0);
        d[j] = sgn / std::sqrt(2.0);
        candidates.push_back(d);
      }
    }
  }
  // Direction of the closest pair.
  double best_d = kInf;
  Site pa{};
  Site pc{};
  for (const auto& s : a.sites()) {
    for (const auto& t : c.sites()) {
      const double d = distance(s, t);
      if (d < best_d) {
        best_d = d;
        pa = s;
        pc = t;
      }
    }
  }
  if (best_d > 0.0 && std::isfinite(best_d)) {
    std::array<double, kMaxDim> d{};
    for (int j = 0; j < kMaxDim; ++j) d[j] = (pa[j] - pc[j]) / best_d;
    candidates.push_back(d);
  }
  SeparatedPair best{a, c, -kInf, {}};
  for (auto b : candidates) {
    for (double sgn : {1.0, -1.0}) {
      std::array<double, kMaxDim> s{};
      for (int j = 0; j < kMaxDim; ++j) s[j] = sgn * b[j] + 0.0;
      const double g = separation_gap(a, c, s);
      if (g > best.gap + 1e-12) {
        best.gap = g;
        best.direction = s;
      }
    }
  }
  return best;
}

std::vector<SeparatedPair> half_space_decomposition(const Region& a, const Region& c) {
  if (a.empty() || c.empty()) return {};
  if (intersects(a, c)) throw DomainError("regions intersect");
  std::vector<SeparatedPair> out;
  // Whole pair, then connected components, then single sites of C, then of A.
  std::function<void(const Region&, const Region&, int)> split = [&](const Region& x, const Region& y, int level) {
    SeparatedPair p = half_space_separation(x, y);
    if (p.gap > 0.0) {
      out.push_back(std::move(p));
      return;
    }
    if (level == 0) {
      const auto cx = components(x);
      const auto cy = components(y);
      if (cx.size() > 1 || cy.size() > 1) {
        for (const auto& u : cx) {
          for (const auto& v : cy) split(u, v, 1);
        }
        return;
      }
    }
    if (level <= 1 && y.size() > 1) {
      for (const auto& v : singletons(y)) split(x, v, 2);
      return;
    }
    for (const auto& u : singletons(x)) split(u, y, 3);
  };
  split(a, c, 0);
  return out;
}

}  // namespace lightcone
