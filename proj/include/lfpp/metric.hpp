#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "lfpp/field.hpp"
#include "lfpp/lattice.hpp"

namespace lfpp {

/// Positive weight per lattice site; from a field, w(v) = e * exp(xi h(v)).
class VertexWeights {
 public:
  static VertexWeights from_field(std::shared_ptr<const FieldSample> field, double xi);
  static VertexWeights from_values(Lattice lattice, std::vector<double> values);
  /// Every site weighs the spacing (the xi = 0 metric).
  static VertexWeights flat(Lattice lattice);

  const Lattice& lattice() const noexcept { return lattice_; }
  double xi() const noexcept { return xi_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t site) const { return values_[site]; }
  /// Underlying field, or null for explicit weights.
  const std::shared_ptr<const FieldSample>& field() const noexcept { return field_; }

  VertexWeights scaled(double factor) const;

 private:
  VertexWeights(Lattice lattice, std::vector<double> values, double xi, std::shared_ptr<const FieldSample> field);

  Lattice lattice_;
  std::vector<double> values_;
  double xi_ = 0.0;
  std::shared_ptr<const FieldSample> field_;
};

/// Subset of a lattice. An empty mask means the whole box.
class GridRegion {
 public:
  explicit GridRegion(Lattice lattice);
  GridRegion(Lattice lattice, std::vector<std::uint8_t> mask);
  /// Inclusive coordinate box [lo, hi].
  static GridRegion box(Lattice lattice, std::span<const int> lo, std::span<const int> hi);

  const Lattice& lattice() const noexcept { return lattice_; }
  bool contains(std::size_t site) const noexcept {
    return site < lattice_.size() && (mask_.empty() || mask_[site] != 0);
  }
  bool is_full() const noexcept { return mask_.empty(); }
  std::size_t count() const noexcept;
  std::vector<std::size_t> sites() const;

 private:
  Lattice lattice_;
  std::vector<std::uint8_t> mask_;
};

struct DistanceQuery {
  GridRegion region;
  std::vector<std::size_t> sources;
  std::vector<std::size_t> targets;

  void validate() const;
};

/// Left face (first coordinate minimal within the region) to right face.
DistanceQuery crossing_query(const GridRegion& region);
DistanceQuery crossing_query(const Lattice& lattice);

struct LatticePath {
  std::vector<std::size_t> sites;
};

/// Throws malformed-path unless consecutive sites are nearest neighbours.
void validate_path(const LatticePath& path, const Lattice& lattice);

/// Sum of site weights in path order.
double path_length(const LatticePath& path, const VertexWeights& weights);

struct Geodesic {
  double distance = 0.0;
  LatticePath path;
};

/// Exact vertex-weighted shortest path between the source and target sets,
/// confined to the region. Ties resolve to the smallest predecessor index.
Geodesic set_to_set_distance(const DistanceQuery& query, const VertexWeights& weights);

double point_to_point_distance(std::size_t x, std::size_t y, const GridRegion& region,
                               const VertexWeights& weights);

/// Minimum over every simple source-to-target path; regions of at most 20 sites.
double brute_force_distance(const DistanceQuery& query, const VertexWeights& weights);

inline constexpr std::size_t kBruteForceMaxSites = 20;

struct LengthSplit {
  double below = 0.0;        // sites with h < alpha log e
  double at_or_above = 0.0;  // sites with h >= alpha log e
};

/// Splits the length of `path` under `weights_low` (parameter xi~) by the
/// field threshold alpha * log e. Both weights must come from one field with
/// xi~ <= xi.
LengthSplit two_parameter_length_comparison(const LatticePath& path, const VertexWeights& weights_high,
                                            const VertexWeights& weights_low, double alpha);

}  // namespace lfpp
