#pragma once

// Finite lattice boxes, regions of sites, distances and neighbourhoods.

#include <array>
#include <string>
#include <vector>

#include "lightcone/types.hpp"

namespace lightcone {

/// Axis-aligned box of Z^n with open boundaries. Sites are enumerated in
/// lexicographic order (first axis slowest).
class Box {
 public:
  Box(int dimension, Site lower, Site upper);
  static Box interval(int lower, int upper) { return Box(1, {lower, 0, 0}, {upper, 0, 0}); }

  int dimension() const noexcept { return dimension_; }
  const Site& lower() const noexcept { return lower_; }
  const Site& upper() const noexcept { return upper_; }
  std::size_t size() const noexcept { return size_; }

  bool contains(const Site& s) const noexcept;
  /// Throws DomainError for sites outside the box.
  std::size_t index(const Site& s) const;
  Site site(std::size_t index) const;
  std::vector<Site> sites() const;

  bool operator==(const Box& other) const = default;

 private:
  int dimension_ = 1;
  Site lower_{};
  Site upper_{};
  std::array<std::size_t, kMaxDim> stride_{};
  std::size_t size_ = 0;
};

/// Finite set of lattice sites, kept sorted and duplicate-free.
class Region {
 public:
  Region() = default;
  Region(int dimension, std::vector<Site> sites, std::string label = "");

  static Region interval(int lower, int upper, std::string label = "");
  static Region cuboid(int dimension, Site lower, Site upper, std::string label = "");
  static Region whole(const Box& box, std::string label = "");

  int dimension() const noexcept { return dimension_; }
  const std::vector<Site>& sites() const noexcept { return sites_; }
  std::size_t size() const noexcept { return sites_.size(); }
  bool empty() const noexcept { return sites_.empty(); }
  const std::string& label() const noexcept { return label_; }
  bool contains(const Site& s) const;
  bool within(const Box& box) const;

  Region complement(const Box& box, std::string label = "") const;
  Region with_label(std::string label) const;

  bool operator==(const Region& other) const { return dimension_ == other.dimension_ && sites_ == other.sites_; }

 private:
  int dimension_ = 1;
  std::vector<Site> sites_;
  std::string label_;
};

bool intersects(const Region& x, const Region& y);

/// Minimum Euclidean distance between sites of X and Y.
double region_distance(const Region& x, const Region& y);

/// Distance from a site to a region.
double site_distance(const Site& s, const Region& x);

/// X_eta = {s in box : d_X(s) < eta}, always containing X.
Region neighborhood(const Region& x, double eta, const Box& box);

/// Box indices of the sites of X, in box order.
std::vector<std::size_t> site_indices(const Box& box, const Region& x);

/// Diagonal of chi_X on the box.
std::vector<double> indicator(const Box& box, const Region& x);

/// A pair of sub-regions separated by a hyperplane with normal `direction`:
/// min_{a in A} b.a - max_{c in C} b.c = gap > 0.
struct SeparatedPair {
  Region a;
  Region b;
  double gap = 0.0;
  std::array<double, kMaxDim> direction{};
};

/// Best single-hyperplane separation of A and C over candidate normals
/// (coordinate axes, diagonals, closest-pair direction). gap <= 0 when none
/// of the candidates separates them.
SeparatedPair half_space_separation(const Region& a, const Region& c);

/// Splits (A, C) into pieces that are each half-space separated, so that
/// chi_A U chi_C = sum over pieces. A single piece means the original pair
/// is itself half-space separated. Throws DomainError if A and C intersect.
std::vector<SeparatedPair> half_space_decomposition(const Region& a, const Region& c);

}  // namespace lightcone
