#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "generators.hpp"
#include "lfpp/config.hpp"
#include "lfpp/error.hpp"

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

std::string random_word(gen::Gen& g) {
  static const std::string alphabet = "abcxyz019._/-,: ";
  std::string s;
  const int n = g.integer(1, 12);
  for (int i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(g.integer(0, static_cast<int>(alphabet.size()) - 1))];
  // Surrounding blanks are not part of a value.
  while (!s.empty() && s.back() == ' ') s.pop_back();
  while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  return s.empty() ? "x" : s;
}

RunConfig random_config(gen::Gen& g) {
  RunConfig c;
  c.out = random_word(g);
  c.seed = g.engine()();
  c.workers = g.integer(1, 64);
  c.mem_cap = static_cast<std::uint64_t>(g.integer(1, 1 << 30)) * 8;
  c.save_fields = g.coin();
  c.record_timing = g.coin();
  c.dims = random_word(g);
  c.xi = random_word(g);
  c.k = random_word(g);
  c.reps = g.integer(1, 1000);
  c.quantile = g.uniform(0.01, 0.99);
  c.resamples = g.integer(200, 5000);
  c.padding = g.uniform(2.0, 4.0);
  c.layer_scale = g.uniform(0.1, 3.0);
  c.figure = g.coin() ? "lambda" : "dgamma";
  c.gamma = random_word(g);
  c.step = g.uniform(1e-4, 0.1);
  c.lambda = random_word(g);
  c.quick = g.coin();
  c.only = g.coin() ? "" : random_word(g);
  return c;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("serialize then parse is the identity") {
    for (int c = 0; c < 200; ++c) {
      gen::Gen g("config-roundtrip", c);
      const RunConfig cfg = random_config(g);
      const std::string text = serialize(cfg);
      const RunConfig back = parse_config(text);
      INFO(text);
      CHECK(serialize(back) == text);
      for (const auto& key : config_keys()) CHECK(get_setting(back, key) == get_setting(cfg, key));
    }
  }

  TEST_CASE("defaults serialize to every key in order") {
    const std::string text = serialize(RunConfig{});
    std::size_t pos = 0;
    for (const auto& key : config_keys()) {
      const auto at = text.find(key + " = ", pos);
      CHECK(at != std::string::npos);
      pos = at;
    }
    CHECK(serialize(RunConfig{}, {"run.out"}).find("run.out") == std::string::npos);
  }

  TEST_CASE("comments, blanks and layering") {
    RunConfig base;
    base.reps = 7;
    const RunConfig c = parse_config("# header\n\nplan.xi = 0.1, 0.2  # trailing\nrun.workers=3\n", base);
    CHECK(c.xi == "0.1, 0.2");
    CHECK(c.workers == 3);
    CHECK(c.reps == 7);
  }

  TEST_CASE("parse errors are usage errors") {
    CHECK(kind_of([] { parse_config("plan.nothing = 1\n"); }) == ErrorKind::usage);
    CHECK(kind_of([] { parse_config("plan.reps 3\n"); }) == ErrorKind::usage);
    CHECK(kind_of([] { parse_config("plan.reps = three\n"); }) == ErrorKind::usage);
    CHECK(kind_of([] { parse_config("run.save_fields = maybe\n"); }) == ErrorKind::usage);
    CHECK(kind_of([] { load_config("/nonexistent/lfpp.conf"); }) == ErrorKind::usage);
    RunConfig c;
    CHECK(kind_of([&] { apply_setting(c, "run.out", "a#b"); }) == ErrorKind::usage);
    c.figure = "pie";
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::usage);
  }

  TEST_CASE("load from a file") {
    const auto p = std::filesystem::temp_directory_path() / "lfpp-config-test.conf";
    {
      std::ofstream os(p);
      os << "plan.d = 2,3\nplan.k = 4..6\n";
    }
    const RunConfig c = load_config(p.string());
    CHECK(parse_int_list(c.dims) == std::vector<int>{2, 3});
    CHECK(parse_int_range(c.k) == std::pair{4, 6});
    std::filesystem::remove(p);
  }

  TEST_CASE("value lists and ranges") {
    CHECK(parse_value_list("0.1,0.25 , 0.5") == std::vector<double>{0.1, 0.25, 0.5});
    const auto r = parse_value_list("0:1:0.25");
    REQUIRE(r.size() == 5);
    CHECK(r.back() == doctest::Approx(1.0));
    CHECK(parse_value_list("0.3:0.5:0.1").size() == 3);
    CHECK(kind_of([] { parse_value_list("0.1:"); }) == ErrorKind::usage);
    CHECK(kind_of([] { parse_value_list("1:0:0.1"); }) == ErrorKind::usage);
    CHECK(kind_of([] { parse_value_list(""); }) == ErrorKind::usage);
    CHECK(kind_of([] { parse_value_list("0.1,nan"); }) == ErrorKind::usage);
    CHECK(parse_int_range("7") == std::pair{7, 7});
    CHECK(kind_of([] { parse_int_range("9..5"); }) == ErrorKind::usage);
    CHECK(parse_int_list("2..4,6") == std::vector<int>{2, 3, 4, 6});
    CHECK(parse_bytes("3K") == 3072);
    CHECK(parse_bytes("2G") == (std::uint64_t{2} << 30));
    CHECK(kind_of([] { parse_bytes("12Q"); }) == ErrorKind::usage);
  }
}
