#include <doctest.h>

#include <cmath>

#include "generators.hpp"
#include "lfpp/error.hpp"
#include "lfpp/metric.hpp"

using namespace lfpp;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

std::size_t site(const Lattice& lat, int x, int y) {
  const std::array<int, 2> c{x, y};
  return lat.index(c);
}

// The four-site example on a 2x2 grid: w(0,0)=1, w(1,0)=5, w(0,1)=2, w(1,1)=3.
VertexWeights corner_weights(const Lattice& lat) {
  std::vector<double> w(4);
  w[site(lat, 0, 0)] = 1;
  w[site(lat, 1, 0)] = 5;
  w[site(lat, 0, 1)] = 2;
  w[site(lat, 1, 1)] = 3;
  return VertexWeights::from_values(lat, w);
}

std::shared_ptr<const FieldSample> constant_field(int d, int k, double c) {
  FieldSpec s{d, k, 2.0, 1.0, 0, 0};
  return std::make_shared<const FieldSample>(s, std::vector<double>(s.lattice().size(), c), false);
}

}  // namespace

TEST_SUITE("metric") {
  TEST_CASE("hand-summed path length") {
    const Lattice lat(2, 2, 1.0);
    const LatticePath p{{site(lat, 0, 0), site(lat, 0, 1), site(lat, 1, 1)}};
    CHECK(path_length(p, corner_weights(lat)) == 6.0);
  }

  TEST_CASE("four-site crossing goes through the cheap column") {
    const Lattice lat(2, 2, 1.0);
    const VertexWeights w = corner_weights(lat);
    const Geodesic g = set_to_set_distance(crossing_query(lat), w);
    CHECK(g.distance == 5.0);
    CHECK(g.path.sites == std::vector<std::size_t>{site(lat, 0, 1), site(lat, 1, 1)});
    CHECK(brute_force_distance(crossing_query(lat), w) == 5.0);
  }

  TEST_CASE("zero field paths weigh the spacing per vertex") {
    for (double xi : {0.0, 0.3, 1.7}) {
      const auto f = constant_field(2, 3, 0.0);
      const VertexWeights w = VertexWeights::from_field(f, xi);
      const Lattice& lat = w.lattice();
      const LatticePath p{{site(lat, 2, 2), site(lat, 2, 3), site(lat, 3, 3)}};
      CHECK(path_length(p, w) == doctest::Approx(3 * lat.spacing()).epsilon(1e-15));
    }
  }

  TEST_CASE("flat crossing is 1 + e") {
    for (int d : {2, 3}) {
      for (int k = 1; k <= (d == 2 ? 6 : 4); ++k) {
        const Lattice lat = Lattice::dyadic(d, k);
        const double e = lat.spacing();
        CHECK(set_to_set_distance(crossing_query(lat), VertexWeights::flat(lat)).distance ==
              doctest::Approx(1.0 + e).epsilon(1e-14));
      }
    }
    const Lattice small = Lattice::dyadic(2, 1);
    CHECK(brute_force_distance(crossing_query(small), VertexWeights::flat(small)) == doctest::Approx(1.5));
  }

  TEST_CASE("constant field rescales the flat answer") {
    for (double c : {-1.3, 0.0, 0.8}) {
      const double xi = 0.45;
      const auto f = constant_field(2, 4, c);
      const VertexWeights w = VertexWeights::from_field(f, xi);
      const double e = w.lattice().spacing();
      CHECK(set_to_set_distance(crossing_query(w.lattice()), w).distance ==
            doctest::Approx(std::exp(xi * c) * (1.0 + e)).epsilon(1e-13));
      const Lattice& lat = w.lattice();
      const LatticePath p{{site(lat, 0, 0), site(lat, 1, 0), site(lat, 2, 0), site(lat, 2, 1)}};
      CHECK(path_length(p, w) == doctest::Approx(std::exp(xi * c) * e * 4).epsilon(1e-13));
    }
  }

  TEST_CASE("point distance: single vertex and symmetry") {
    for (int c = 0; c < 30; ++c) {
      gen::Gen g("point-distance", c);
      const Lattice lat = Lattice::dyadic(2, 2);
      const VertexWeights w = VertexWeights::from_values(lat, g.weights(lat, g.uniform(0.1, 2.0)));
      const GridRegion all(lat);
      const auto x = static_cast<std::size_t>(g.integer(0, static_cast<int>(lat.size()) - 1));
      const auto y = static_cast<std::size_t>(g.integer(0, static_cast<int>(lat.size()) - 1));
      CHECK(point_to_point_distance(x, x, all, w) == w[x]);
      CHECK(point_to_point_distance(x, y, all, w) == doctest::Approx(point_to_point_distance(y, x, all, w)).epsilon(1e-14));
    }
  }

  TEST_CASE("adjacent sites on a cheap pair") {
    const Lattice lat(2, 3, 0.5);
    std::vector<double> w(lat.size(), 10.0);
    w[site(lat, 1, 1)] = 1.0;
    w[site(lat, 1, 2)] = 2.0;
    const VertexWeights vw = VertexWeights::from_values(lat, w);
    CHECK(point_to_point_distance(site(lat, 1, 1), site(lat, 1, 2), GridRegion(lat), vw) == 3.0);
  }

  TEST_CASE("Dijkstra matches exhaustive enumeration") {
    for (int c = 0; c < 60; ++c) {
      gen::Gen g("oracle", c);
      const int side = g.coin() ? 3 : 4;
      const Lattice lat(2, side, 1.0 / (side - 1));
      const VertexWeights w = VertexWeights::from_values(lat, g.weights(lat, g.uniform(0.0, 1.5)));
      DistanceQuery q = crossing_query(lat);
      if (c % 3 == 0) {
        q.sources = {static_cast<std::size_t>(g.integer(0, static_cast<int>(lat.size()) - 1))};
        q.targets = {static_cast<std::size_t>(g.integer(0, static_cast<int>(lat.size()) - 1))};
      }
      const Geodesic dj = set_to_set_distance(q, w);
      INFO("case " << c);
      CHECK(std::fabs(dj.distance - brute_force_distance(q, w)) <= 1e-12);
      CHECK(path_length(dj.path, w) == doctest::Approx(dj.distance).epsilon(1e-14));
      CHECK_NOTHROW(validate_path(dj.path, lat));
    }
  }

  TEST_CASE("geodesic never beats a straight crossing row") {
    for (int c = 0; c < 20; ++c) {
      gen::Gen g("straight-row", c);
      const Lattice lat = Lattice::dyadic(2, 4);
      const VertexWeights w = VertexWeights::from_values(lat, g.weights(lat, g.uniform(0.0, 1.0)));
      const int row = g.integer(0, lat.side() - 1);
      LatticePath p;
      for (int x = 0; x < lat.side(); ++x) p.sites.push_back(site(lat, x, row));
      CHECK(set_to_set_distance(crossing_query(lat), w).distance <= path_length(p, w) + 1e-12);
    }
  }

  TEST_CASE("region confinement") {
    const Lattice lat = Lattice::dyadic(2, 2);
    std::vector<double> w(lat.size(), 1.0);
    // Cheap row outside the region must not be used.
    for (int x = 0; x < 5; ++x) w[site(lat, x, 4)] = 0.01;
    const std::array<int, 2> lo{0, 0}, hi{4, 2};
    const GridRegion region = GridRegion::box(lat, lo, hi);
    const VertexWeights vw = VertexWeights::from_values(lat, w);
    CHECK(set_to_set_distance(crossing_query(region), vw).distance == doctest::Approx(5.0));
    CHECK(set_to_set_distance(crossing_query(lat), vw).distance == doctest::Approx(0.05));
  }

  TEST_CASE("error kinds") {
    const Lattice lat = Lattice::dyadic(2, 2);
    const VertexWeights flat = VertexWeights::flat(lat);
    std::vector<std::uint8_t> mask(lat.size(), 1);
    for (int y = 0; y < 5; ++y) mask[site(lat, 2, y)] = 0;  // wall down the middle
    CHECK(kind_of([&] { set_to_set_distance(crossing_query(GridRegion(lat, mask)), flat); }) ==
          ErrorKind::disconnected);
    DistanceQuery empty = crossing_query(lat);
    empty.targets.clear();
    CHECK(kind_of([&] { set_to_set_distance(empty, flat); }) == ErrorKind::invalid_query);
    DistanceQuery outside = crossing_query(lat);
    outside.sources = {lat.size() + 3};
    CHECK(kind_of([&] { set_to_set_distance(outside, flat); }) == ErrorKind::invalid_query);
    const LatticePath jump{{site(lat, 0, 0), site(lat, 2, 0)}};
    CHECK(kind_of([&] { validate_path(jump, lat); }) == ErrorKind::malformed_path);
    CHECK(kind_of([&] { path_length(LatticePath{}, flat); }) == ErrorKind::malformed_path);
    const Lattice big = Lattice::dyadic(2, 3);
    CHECK(kind_of([&] { brute_force_distance(crossing_query(big), VertexWeights::flat(big)); }) ==
          ErrorKind::oracle_size_limit);
  }

  TEST_CASE("two-parameter split of path length") {
    const double xi = 0.5, xit = 0.25;
    const double alpha = -xi + std::sqrt(xi * xi + 2 * (xi * std::sqrt(2.0)) + 2 * (2 - 1));
    for (int c = 0; c < 10; ++c) {
      const auto f = std::make_shared<const FieldSample>(
          sample_field(FieldSpec{2, 5, 2.0, 1.0, 3, job_key("two-parameter")}.replicate(static_cast<std::uint64_t>(c))));
      const VertexWeights hi = VertexWeights::from_field(f, xi), lo = VertexWeights::from_field(f, xit);
      const Geodesic g = set_to_set_distance(crossing_query(hi.lattice()), hi);
      const LengthSplit split = two_parameter_length_comparison(g.path, hi, lo, alpha);
      CHECK(std::fabs(split.below + split.at_or_above - path_length(g.path, lo)) <= 1e-10);
    }
    // Zero field: every site sits above the negative threshold.
    const auto zero = constant_field(2, 3, 0.0);
    const VertexWeights h0 = VertexWeights::from_field(zero, xi), l0 = VertexWeights::from_field(zero, xit);
    const Geodesic g0 = set_to_set_distance(crossing_query(h0.lattice()), h0);
    const LengthSplit s0 = two_parameter_length_comparison(g0.path, h0, l0, 1.0);
    CHECK(s0.below == 0.0);
    CHECK(s0.at_or_above == doctest::Approx(path_length(g0.path, l0)));
    CHECK(kind_of([&] { two_parameter_length_comparison(g0.path, l0, h0, 1.0); }) == ErrorKind::parameter_order);
  }
}
