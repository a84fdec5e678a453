#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "generators.hpp"
#include "lfpp/error.hpp"
#include "lfpp/lattice.hpp"
#include "lfpp/rng.hpp"
#include "lfpp/stats.hpp"

using namespace lfpp;

TEST_SUITE("core") {
  TEST_CASE("dyadic lattice covers the unit box") {
    const Lattice lat = Lattice::dyadic(3, 2);
    CHECK(lat.side() == 5);
    CHECK(lat.size() == 125);
    CHECK(lat.spacing() == 0.25);
    CHECK(lat.stride(0) == 25);
    CHECK(lat.stride(2) == 1);
  }

  TEST_CASE("index and coords are inverse") {
    for (std::uint64_t c = 0; c < 50; ++c) {
      gen::Gen g("lattice-index", c);
      const Lattice lat(g.integer(1, 4), g.integer(1, 7), 1.0);
      const auto idx = static_cast<std::size_t>(g.integer(0, static_cast<int>(lat.size()) - 1));
      const auto co = lat.coords(idx);
      INFO("case " << c);
      CHECK(lat.index(co) == idx);
      for (int a = 0; a < lat.dim(); ++a) CHECK(lat.coord(idx, a) == co[static_cast<std::size_t>(a)]);
    }
  }

  TEST_CASE("adjacency is one step along one axis") {
    const Lattice lat = Lattice::dyadic(2, 2);
    const std::array<int, 2> a{1, 1}, b{1, 2}, c{2, 2}, d{1, 3};
    CHECK(lat.adjacent(lat.index(a), lat.index(b)));
    CHECK_FALSE(lat.adjacent(lat.index(a), lat.index(c)));
    CHECK_FALSE(lat.adjacent(lat.index(a), lat.index(d)));
    CHECK_FALSE(lat.adjacent(lat.index(a), lat.index(a)));
  }

  TEST_CASE("stream keys separate jobs and are reproducible") {
    CHECK(job_key("crossing/2/5") == job_key("crossing/2/5"));
    CHECK(job_key("crossing/2/5") != job_key("crossing/2/6"));
    CHECK(combine(1, {2, 3}) != combine(1, {3, 2}));
    Engine a = make_stream(7, job_key("x"), 0), b = make_stream(7, job_key("x"), 0), c = make_stream(7, job_key("x"), 1);
    const auto va = a(), vb = b(), vc = c();
    CHECK(va == vb);
    CHECK(va != vc);
  }

  TEST_CASE("mix64 is injective on a sample") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(mix64(i));
    CHECK(seen.size() == 10000);
  }

  TEST_CASE("type 7 quantile") {
    const std::vector<double> xs{3, 1, 4, 1, 5};
    CHECK(quantile(xs, 0.5) == 3.0);
    CHECK(quantile(xs, 0.0) == 1.0);
    CHECK(quantile(xs, 1.0) == 5.0);
    CHECK(quantile(xs, 0.25) == 1.0);
    CHECK(quantile(xs, 0.625) == doctest::Approx(3.5));
  }

  TEST_CASE("least squares recovers an exact line") {
    for (std::uint64_t c = 0; c < 20; ++c) {
      gen::Gen g("fit-line", c);
      const double a = g.uniform(-3, 3), b = g.uniform(-3, 3);
      std::vector<double> x, y, w;
      for (int i = 0; i < g.integer(3, 12); ++i) {
        x.push_back(i + g.uniform(0, 0.5));
        y.push_back(a + b * x.back());
        w.push_back(g.uniform(0.1, 5));
      }
      INFO("case " << c);
      CHECK(fit_line(x, y).slope == doctest::Approx(b).epsilon(1e-10));
      CHECK(fit_line(x, y, w).intercept == doctest::Approx(a).epsilon(1e-10));
      CHECK(fit_line(x, y).r_squared == doctest::Approx(1.0));
    }
  }

  TEST_CASE("running moments match batch moments") {
    gen::Gen g("moments", 0);
    std::vector<double> xs, ys;
    RunningMoments m;
    RunningCovariance cv;
    for (int i = 0; i < 500; ++i) {
      xs.push_back(g.normal(2, 3));
      ys.push_back(0.5 * xs.back() + g.normal());
      m.add(xs.back());
      cv.add(xs.back(), ys.back());
    }
    CHECK(m.mean() == doctest::Approx(mean(xs)).epsilon(1e-12));
    CHECK(m.variance() == doctest::Approx(sample_variance(xs)).epsilon(1e-10));
    CHECK(cv.covariance() == doctest::Approx(sample_covariance(xs, ys)).epsilon(1e-10));
    CHECK(std::fabs(m.skewness()) < 0.3);
    CHECK(std::fabs(m.excess_kurtosis()) < 0.6);
  }

  TEST_CASE("errors carry kind and message") {
    try {
      fail(ErrorKind::grid_spacing, "uneven");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::grid_spacing);
      CHECK(e.message() == "uneven");
      CHECK(std::string(e.what()) == "grid-spacing: uneven");
    }
  }
}
