#include "lfpp/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>

#include "lfpp/error.hpp"

namespace lfpp {
namespace {

constexpr std::size_t kNoSite = std::numeric_limits<std::size_t>::max();

void check_weights(std::span<const double> w) {
  for (double v : w) {
    require(v > 0.0 && std::isfinite(v), ErrorKind::domain, "vertex weights must be positive and finite");
  }
}

// Calls f(neighbour) for each nearest neighbour of site inside the lattice.
template <class F>
void for_each_neighbor(const Lattice& lat, std::size_t site, F&& f) {
  for (int a = 0; a < lat.dim(); ++a) {
    const int c = lat.coord(site, a);
    const std::size_t s = lat.stride(a);
    if (c > 0) f(site - s);
    if (c + 1 < lat.side()) f(site + s);
  }
}

}  // namespace

VertexWeights::VertexWeights(Lattice lattice, std::vector<double> values, double xi,
                             std::shared_ptr<const FieldSample> field)
    : lattice_(std::move(lattice)), values_(std::move(values)), xi_(xi), field_(std::move(field)) {}

VertexWeights VertexWeights::from_field(std::shared_ptr<const FieldSample> field, double xi) {
  require(field != nullptr, ErrorKind::domain, "weights need a field");
  require(xi >= 0.0 && std::isfinite(xi), ErrorKind::domain, "xi must be a finite nonnegative number");
  const double eps = field->lattice().spacing();
  std::vector<double> w(field->values().size());
  if (xi == 0.0) {
    std::fill(w.begin(), w.end(), eps);
  } else {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = eps * std::exp(xi * (*field)[i]);
  }
  check_weights(w);
  Lattice lat = field->lattice();
  return VertexWeights(std::move(lat), std::move(w), xi, std::move(field));
}

VertexWeights VertexWeights::from_values(Lattice lattice, std::vector<double> values) {
  require(values.size() == lattice.size(), ErrorKind::domain, "weight count does not match lattice");
  check_weights(values);
  return VertexWeights(std::move(lattice), std::move(values), 0.0, nullptr);
}

VertexWeights VertexWeights::flat(Lattice lattice) {
  std::vector<double> w(lattice.size(), lattice.spacing());
  return VertexWeights(std::move(lattice), std::move(w), 0.0, nullptr);
}

VertexWeights VertexWeights::scaled(double factor) const {
  require(factor > 0.0 && std::isfinite(factor), ErrorKind::domain, "scale factor must be positive");
  std::vector<double> w(values_);
  for (double& v : w) v *= factor;
  check_weights(w);
  return VertexWeights(lattice_, std::move(w), xi_, nullptr);
}

GridRegion::GridRegion(Lattice lattice) : lattice_(std::move(lattice)) {}

GridRegion::GridRegion(Lattice lattice, std::vector<std::uint8_t> mask)
    : lattice_(std::move(lattice)), mask_(std::move(mask)) {
  require(mask_.size() == lattice_.size(), ErrorKind::domain, "region mask does not match lattice");
}

GridRegion GridRegion::box(Lattice lattice, std::span<const int> lo, std::span<const int> hi) {
  require(lattice.contains(lo) && lattice.contains(hi), ErrorKind::domain, "region box outside lattice");
  std::vector<std::uint8_t> mask(lattice.size(), 0);
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    bool inside = true;
    for (int a = 0; a < lattice.dim() && inside; ++a) {
      const int c = lattice.coord(i, a);
      inside = c >= lo[static_cast<std::size_t>(a)] && c <= hi[static_cast<std::size_t>(a)];
    }
    mask[i] = inside ? 1 : 0;
  }
  return GridRegion(std::move(lattice), std::move(mask));
}

std::size_t GridRegion::count() const noexcept {
  if (mask_.empty()) return lattice_.size();
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

std::vector<std::size_t> GridRegion::sites() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < lattice_.size(); ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

void DistanceQuery::validate() const {
  require(!sources.empty(), ErrorKind::invalid_query, "empty source set");
  require(!targets.empty(), ErrorKind::invalid_query, "empty target set");
  for (std::size_t s : sources) require(region.contains(s), ErrorKind::invalid_query, "source outside region");
  for (std::size_t t : targets) require(region.contains(t), ErrorKind::invalid_query, "target outside region");
}

DistanceQuery crossing_query(const GridRegion& region) {
  const Lattice& lat = region.lattice();
  int lo = lat.side(), hi = -1;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (!region.contains(i)) continue;
    lo = std::min(lo, lat.coord(i, 0));
    hi = std::max(hi, lat.coord(i, 0));
  }
  DistanceQuery q{region, {}, {}};
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (!region.contains(i)) continue;
    if (lat.coord(i, 0) == lo) q.sources.push_back(i);
    if (lat.coord(i, 0) == hi) q.targets.push_back(i);
  }
  return q;
}

DistanceQuery crossing_query(const Lattice& lattice) {
  // Row-major with axis 0 most significant: the faces are contiguous blocks.
  const std::size_t face = lattice.stride(0);
  DistanceQuery q{GridRegion(lattice), std::vector<std::size_t>(face), std::vector<std::size_t>(face)};
  const std::size_t right = lattice.size() - face;
  for (std::size_t i = 0; i < face; ++i) {
    q.sources[i] = i;
    q.targets[i] = right + i;
  }
  return q;
}

void validate_path(const LatticePath& path, const Lattice& lattice) {
  require(!path.sites.empty(), ErrorKind::malformed_path, "empty path");
  for (std::size_t s : path.sites) require(s < lattice.size(), ErrorKind::malformed_path, "path site outside lattice");
  for (std::size_t i = 1; i < path.sites.size(); ++i) {
    require(lattice.adjacent(path.sites[i - 1], path.sites[i]), ErrorKind::malformed_path,
            "sites " + std::to_string(i - 1) + " and " + std::to_string(i) + " are not nearest neighbours");
  }
}

double path_length(const LatticePath& path, const VertexWeights& weights) {
  validate_path(path, weights.lattice());
  double total = 0.0;
  for (std::size_t s : path.sites) total += weights[s];
  return total;
}

Geodesic set_to_set_distance(const DistanceQuery& query, const VertexWeights& weights) {
  query.validate();
  const Lattice& lat = weights.lattice();
  require(query.region.lattice() == lat, ErrorKind::invalid_query, "weights do not cover the query lattice");
  const GridRegion& region = query.region;

  const std::size_t n = lat.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> pred(n, kNoSite);
  enum : std::uint8_t { kTarget = 1, kSettled = 2 };
  std::vector<std::uint8_t> state(n, 0);
  for (std::size_t t : query.targets) state[t] |= kTarget;

  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::size_t s : query.sources) {
    if (weights[s] < dist[s]) {
      dist[s] = weights[s];
      heap.emplace(dist[s], s);
    }
  }

  std::size_t reached = kNoSite;
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (state[u] & kSettled) continue;
    state[u] |= kSettled;
    if (state[u] & kTarget) {
      reached = u;
      break;
    }
    for_each_neighbor(lat, u, [&](std::size_t v) {
      if ((state[v] & kSettled) || !region.contains(v)) return;
      const double nd = du + weights[v];
      if (nd < dist[v]) {
        dist[v] = nd;
        pred[v] = u;
        heap.emplace(nd, v);
      } else if (nd == dist[v] && u < pred[v]) {
        pred[v] = u;
      }
    });
  }
  require(reached != kNoSite, ErrorKind::disconnected, "no path from sources to targets inside the region");

  Geodesic g;
  g.distance = dist[reached];
  for (std::size_t v = reached; v != kNoSite; v = pred[v]) g.path.sites.push_back(v);
  std::reverse(g.path.sites.begin(), g.path.sites.end());
  return g;
}

double point_to_point_distance(std::size_t x, std::size_t y, const GridRegion& region, const VertexWeights& weights) {
  return set_to_set_distance(DistanceQuery{region, {x}, {y}}, weights).distance;
}

double brute_force_distance(const DistanceQuery& query, const VertexWeights& weights) {
  query.validate();
  const Lattice& lat = weights.lattice();
  require(query.region.lattice() == lat, ErrorKind::invalid_query, "weights do not cover the query lattice");
  const std::vector<std::size_t> sites = query.region.sites();
  require(sites.size() <= kBruteForceMaxSites, ErrorKind::oracle_size_limit,
          "brute force is limited to " + std::to_string(kBruteForceMaxSites) + " sites, region has " +
              std::to_string(sites.size()));

  const std::size_t m = sites.size();
  auto local = [&](std::size_t site) {
    return static_cast<std::size_t>(std::lower_bound(sites.begin(), sites.end(), site) - sites.begin());
  };
  std::vector<std::vector<std::size_t>> adj(m);
  std::vector<bool> is_target(m, false);
  for (std::size_t i = 0; i < m; ++i) {
    for_each_neighbor(lat, sites[i], [&](std::size_t v) {
      if (query.region.contains(v)) adj[i].push_back(local(v));
    });
  }
  for (std::size_t t : query.targets) is_target[local(t)] = true;

  double best = std::numeric_limits<double>::infinity();
  std::uint32_t visited = 0;
  // Depth-first enumeration of every simple path; lengths accumulate in path order.
  auto dfs = [&](auto&& self, std::size_t v, double length) -> void {
    if (is_target[v]) best = std::min(best, length);
    for (std::size_t w : adj[v]) {
      if (visited & (1u << w)) continue;
      visited |= 1u << w;
      self(self, w, length + weights[sites[w]]);
      visited &= ~(1u << w);
    }
  };
  for (std::size_t s : query.sources) {
    const std::size_t ls = local(s);
    visited = 1u << ls;
    dfs(dfs, ls, weights[s]);
  }
  require(std::isfinite(best), ErrorKind::disconnected, "no path from sources to targets inside the region");
  return best;
}

LengthSplit two_parameter_length_comparison(const LatticePath& path, const VertexWeights& weights_high,
                                            const VertexWeights& weights_low, double alpha) {
  const auto& field = weights_low.field();
  require(field != nullptr && weights_high.field() != nullptr, ErrorKind::domain,
          "length comparison needs field-derived weights");
  require(field == weights_high.field() ||
              (field->spec().same_grid(weights_high.field()->spec()) &&
               std::equal(field->values().begin(), field->values().end(), weights_high.field()->values().begin())),
          ErrorKind::incompatible_samples, "weights come from different fields");
  require(weights_low.xi() <= weights_high.xi(), ErrorKind::parameter_order, "need xi~ <= xi");
  validate_path(path, weights_low.lattice());

  const double threshold = alpha * std::log(weights_low.lattice().spacing());
  LengthSplit split;
  for (std::size_t s : path.sites) {
    if ((*field)[s] < threshold) {
      split.below += weights_low[s];
    } else {
      split.at_or_above += weights_low[s];
    }
  }
  return split;
}

}  // namespace lfpp
