#include <doctest.h>

#include <cmath>
#include <utility>
#include <filesystem>
#include <numbers>

#include "generators.hpp"
#include "lfpp/error.hpp"
#include "lfpp/field.hpp"
#include "lfpp/snapshot.hpp"
#include "lfpp/stats.hpp"

using namespace lfpp;

namespace {

FieldSpec spec(int d, int k, std::string_view job = "field-test", std::uint64_t seed = 11) {
  return FieldSpec{d, k, 2.0, 1.0, seed, job_key(job)};
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::io;
}

bool is_7_smooth(int m) {
  for (int p : {2, 3, 5, 7}) {
    while (m % p == 0) m /= p;
  }
  return m == 1;
}

}  // namespace

TEST_SUITE("field") {
  TEST_CASE("spec validation") {
    CHECK(kind_of([] { spec(1, 4).validate(); }) == ErrorKind::domain);
    CHECK(kind_of([] { spec(2, 0).validate(); }) == ErrorKind::domain);
    FieldSpec s = spec(2, 4);
    s.padding_factor = 1.5;
    CHECK(kind_of([&] { s.validate(); }) == ErrorKind::domain);
  }

  TEST_CASE("memory cap is enforced before sampling") {
    SamplerLimits tiny;
    tiny.memory_cap_bytes = 1024;
    CHECK(kind_of([&] { sample_field(spec(3, 6), tiny); }) == ErrorKind::resource_limit);
  }

  TEST_CASE("torus size is even, 7-smooth and padded") {
    for (int k = 1; k <= 12; ++k) {
      for (double pad : {2.0, 2.3, 3.0}) {
        FieldSpec s = spec(2, k);
        s.padding_factor = pad;
        const int m = s.torus_points();
        INFO("k " << k << " padding " << pad);
        CHECK(m % 2 == 0);
        CHECK(is_7_smooth(m));
        CHECK(m >= pad * std::ldexp(1.0, k));
      }
    }
  }

  TEST_CASE("small 3d field exists and is centered") {
    const FieldSample f = sample_field(spec(3, 1));
    CHECK(f.values().size() == 27);
    CHECK(std::fabs(mean(f.values())) <= 1e-12);
    CHECK(f.centered());
  }

  TEST_CASE("same seed and job give identical bits; replicates differ") {
    const FieldSample a = sample_field(spec(2, 5)), b = sample_field(spec(2, 5));
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
    const FieldSample c = sample_field(spec(2, 5).replicate(1));
    CHECK_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  }

  TEST_CASE("layer sums are consistent with the full field") {
    const FieldSpec s = spec(3, 4);
    const FieldSample all = sample_layers(s, 1, 4, false);
    const FieldSample lo = sample_layers(s, 1, 2, false), hi = sample_layers(s, 3, 4, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < all.values().size(); ++i) worst = std::max(worst, std::fabs(all[i] - lo[i] - hi[i]));
    CHECK(worst < 1e-12);
  }

  TEST_CASE("pointwise variance at the centre is about k ln 2") {
    const FieldSpec s = spec(2, 8, "centre-variance");
    RunningMoments raw, centered;
    const std::array<int, 2> centre{128, 128};
    for (int r = 0; r < 200; ++r) {
      const FieldSpec rep = s.replicate(static_cast<std::uint64_t>(r));
      raw.add(sample_layers(rep, 1, 8, false).at(centre));
      centered.add(sample_field(rep).at(centre));
    }
    // One site, 200 replicates: the standard error of a variance estimate is
    // var sqrt(2 / (n - 1)), about 0.55 here.
    const double se = raw.variance() * std::sqrt(2.0 / 199.0);
    CHECK(std::fabs(raw.variance() - layer_variance(s, 1, 8)) <= 4 * se);
    CHECK(layer_variance(s, 1, 8) == doctest::Approx(8 * std::numbers::ln2).epsilon(0.01));
    // Subtracting the grid mean removes about 1.2 (the coarse layers are
    // nearly constant over the box); 4.34 at 1000 replicates.
    CHECK(std::fabs(centered.variance() - (8 * std::numbers::ln2 - 1.2)) <= 4 * se);
  }

  TEST_CASE("uncentered layers match the exact torus variance") {
    // Averaged over sites, so a few hundred replicates pin it to ~1%.
    const FieldSpec s = spec(2, 5, "exact-variance");
    long double total = 0.0L;
    const int reps = 400;
    for (int r = 0; r < reps; ++r) {
      const FieldSample f = sample_layers(s.replicate(static_cast<std::uint64_t>(r)), 1, 5, false);
      for (double v : f.values()) total += v * v;
    }
    const double site_avg = static_cast<double>(total / (reps * 33.0 * 33.0));
    CHECK(site_avg == doctest::Approx(layer_variance(s, 1, 5)).epsilon(0.03));
  }

  TEST_CASE("fine layers on the small torus keep the exact variance") {
    // k = 7: layers 5..7 go on the small torus, layer 4 stays on the padded one.
    const FieldSpec s = spec(2, 7, "exact-variance-split");
    long double total = 0.0L;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
      const FieldSample f = sample_layers(s.replicate(static_cast<std::uint64_t>(r)), 4, 7, false);
      for (double v : f.values()) total += v * v;
    }
    const double site_avg = static_cast<double>(total / (reps * 129.0 * 129.0));
    CHECK(site_avg == doctest::Approx(layer_variance(s, 4, 7)).epsilon(0.03));
    CHECK(layer_variance(s, 4, 7) == doctest::Approx(4 * std::numbers::ln2).epsilon(1e-6));
  }

  TEST_CASE("marginals look Gaussian and stationary") {
    const FieldSpec s = spec(2, 5, "gaussianity");
    RunningMoments centre, corner;
    for (int r = 0; r < 1500; ++r) {
      const FieldSample f = sample_layers(s.replicate(static_cast<std::uint64_t>(r)), 1, 5, false);
      centre.add(f.at(std::array<int, 2>{16, 16}));
      corner.add(f.at(std::array<int, 2>{0, 0}));
    }
    CHECK(std::fabs(centre.skewness()) < 0.2);
    CHECK(std::fabs(centre.excess_kurtosis()) < 0.4);
    CHECK(centre.variance() == doctest::Approx(corner.variance()).epsilon(0.12));
  }

  TEST_CASE("independent streams are uncorrelated") {
    const FieldSpec a = spec(2, 4, "stream-a"), b = spec(2, 4, "stream-b");
    RunningCovariance cov;
    RunningMoments ma, mb;
    const int n = 1000;
    for (int r = 0; r < n; ++r) {
      const double x = sample_field(a.replicate(static_cast<std::uint64_t>(r)))[40];
      const double y = sample_field(b.replicate(static_cast<std::uint64_t>(r)))[40];
      cov.add(x, y);
      ma.add(x);
      mb.add(y);
    }
    const double corr = cov.covariance() / std::sqrt(ma.variance() * mb.variance());
    CHECK(std::fabs(corr) <= 3.0 / std::sqrt(n));
  }

  TEST_CASE("covariance and variance estimators guard their inputs") {
    std::vector<FieldSample> xs;
    for (int r = 0; r < 5; ++r) xs.push_back(sample_field(spec(2, 3).replicate(static_cast<std::uint64_t>(r))));
    const std::array<int, 2> x{1, 1}, y{2, 1};
    CHECK(kind_of([&] { covariance_estimate(xs, x, x); }) == ErrorKind::domain);
    CHECK(std::isfinite(covariance_estimate(xs, x, y)));
    CHECK(variance_estimate(xs, x) > 0.0);
    xs.push_back(sample_field(spec(2, 4)));
    CHECK(kind_of([&] { covariance_estimate(xs, x, y); }) == ErrorKind::incompatible_samples);
  }

  TEST_CASE("variance profile needs two replicates") {
    const std::vector<FieldSpec> specs{spec(2, 3)};
    CHECK(kind_of([&] { variance_profile(specs, 1); }) == ErrorKind::domain);
  }

  TEST_CASE("box mollification of constant and linear fields") {
    const FieldSpec s = spec(2, 5);
    const Lattice lat = s.lattice();
    std::vector<double> constant(lat.size(), 2.5), linear(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) linear[i] = lat.coord(i, 0) * lat.spacing();
    const MollifierKernel box{KernelKind::box, 2};
    const FieldSample c = box_mollify(FieldSample(s, constant, false), 3, box);
    for (double v : c.values()) CHECK(v == doctest::Approx(2.5));
    const FieldSample l = box_mollify(FieldSample(s, linear, false), 3, box);
    const Lattice cl = l.lattice();
    for (std::size_t i = 0; i < cl.size(); ++i) {
      const int x = cl.coord(i, 0);
      if (x == 0 || x == cl.side() - 1) continue;  // boxes clipped at the faces
      CHECK(l[i] == doctest::Approx(x * cl.spacing()).epsilon(1e-12));
    }
    CHECK(kind_of([&] { box_mollify(FieldSample(s, constant, false), 5, box); }) == ErrorKind::invalid_resolution);
  }

  TEST_CASE("full-box mollification agrees with the clipped one inside") {
    // k = 8 puts the three finest layers on the small torus.
    for (const auto [k, target] : {std::pair{6, 4}, std::pair{8, 6}}) {
      const FieldSpec s = spec(2, k, "window");
      const MollifierKernel box{KernelKind::box, 2};
      const FieldSample full = box_mollify(s, target, box);
      const FieldSample clipped = box_mollify(sample_field(s), target, box);
      const Lattice& cl = full.lattice();
      double worst = 0.0;
      for (std::size_t i = 0; i < cl.size(); ++i) {
        bool inside = true;
        for (int a = 0; a < 2; ++a) inside = inside && cl.coord(i, a) > 0 && cl.coord(i, a) < cl.side() - 1;
        if (inside) worst = std::max(worst, std::fabs(full[i] - clipped[i]));
      }
      CAPTURE(k);
      CHECK(worst < 1e-10);
    }
  }

  TEST_CASE("box and scale-truncation mollifiers stay close") {
    // The two mollifications differ by less than (log 1/e)^(2/3) with high probability.
    const double threshold = std::pow(std::log(64.0), 2.0 / 3.0);
    int below = 0;
    for (int r = 0; r < 100; ++r) {
      const FieldSpec s = spec(2, 8, "mollifier-comparison").replicate(static_cast<std::uint64_t>(r));
      const FieldSample box = box_mollify(s, 6, MollifierKernel{KernelKind::box, 2});
      const FieldSample trunc = layer_truncation(s, 6);
      double worst = 0.0;
      for (std::size_t i = 0; i < box.values().size(); ++i) worst = std::max(worst, std::fabs(box[i] - trunc[i]));
      below += worst < threshold ? 1 : 0;
    }
    CHECK(below >= 95);
  }

  TEST_CASE("slice kernel averages only within the hyperplane") {
    const FieldSpec s = spec(3, 4, "slice-kernel");
    const FieldSample f = box_mollify(s, 2, MollifierKernel{KernelKind::box_slice, 3});
    CHECK(f.values().size() == 125);
    CHECK(kind_of([&] { box_mollify(s, 2, MollifierKernel{KernelKind::box, 2}); }) == ErrorKind::domain);
  }

  TEST_CASE("kernels have finite log energy") {
    for (auto kind : {KernelKind::box, KernelKind::box_slice, KernelKind::layer_truncation}) {
      const MollifierKernel k{kind, 3};
      CHECK(k.admissible());
      const double e = kernel_log_energy(k, 20000, 5);
      CHECK(std::isfinite(e));
    }
  }

  TEST_CASE("hyperplane restriction") {
    const FieldSpec s = spec(3, 4);
    const FieldSample slice = restrict_to_hyperplane(sample_field(s));
    CHECK(slice.values().size() == 17u * 17u);
    CHECK(slice.spec().dim == 2);
    CHECK(std::fabs(mean(slice.values())) < 1e-12);
    std::vector<double> constant(s.lattice().size(), 1.75);
    const FieldSample cs = restrict_to_hyperplane(FieldSample(s, constant, false));
    for (double v : cs.values()) CHECK(v == doctest::Approx(cs[0]));
  }

  TEST_CASE("snapshots round-trip bit for bit") {
    const auto dir = std::filesystem::temp_directory_path() / "lfpp-snapshot-test";
    std::filesystem::create_directories(dir);
    FieldSpec s = spec(3, 3);
    s.padding_factor = 2.5;
    const FieldSample f = sample_field(s);
    save_snapshot(f, dir / "f");
    const FieldSample g = load_snapshot(dir / "f");
    CHECK(g.spec().dim == 3);
    CHECK(g.spec().scale_index == 3);
    CHECK(g.spec().master_seed == s.master_seed);
    CHECK(g.spec().job_key == s.job_key);
    CHECK(g.spec().padding_factor == 2.5);
    CHECK(std::equal(f.values().begin(), f.values().end(), g.values().begin()));
    std::filesystem::remove_all(dir);
  }
}
